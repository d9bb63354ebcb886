"""CPU-only graph retrieval: entity-document co-occurrence graphs ranked by
Personalized PageRank, alongside lexical, dense, and fusion baselines."""

__version__ = "0.1.0"
