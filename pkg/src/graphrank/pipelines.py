"""Method pipelines: build index artifacts from a config and execute the
configured retrieval method per query with timing attribution."""

from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import dense, fusion, lexical
from .config import seed_k_for
from .corpus import Corpus, Query, generate_synthetic, load_corpus
from .entities import (
    build_alias_map,
    load_external_entities,
    mentions_for_passage,
    mentions_from_surfaces,
)
from .graph import BipartiteGraph, build_entity_graph, build_term_graph, prune_graph
from .ppr import PprScores, ppr_power, ppr_push, rank_documents
from .ranking import RankedList
from .seeds import entity_seeds, fallback_seed, mix_seeds, passage_seeds, term_seeds

logger = logging.getLogger(__name__)

GRAPH_METHODS = ("graph", "graph_hybrid", "graph_dense", "graph_rrf", "rrf_ppr_fusion")
DENSE_METHODS = ("dense", "rrf", "graph_dense", "graph_rrf", "rrf_ppr_fusion", "rrf_rerank")
RERANK_METHODS = ("bm25_rerank", "rrf_rerank")


def load_dataset(cfg: dict[str, Any]) -> tuple[Corpus, list[Query]]:
    ds = cfg["dataset"]
    if ds.get("synthetic"):
        syn = ds["synthetic"]
        return generate_synthetic(
            n_docs=int(syn["n_docs"]),
            n_entities=int(syn["n_entities"]),
            hops=int(syn.get("hops", 2)),
            rng_seed=int(syn.get("rng_seed", cfg["rng_seed"])),
        )
    if not ds.get("path"):
        raise ValueError("dataset.path is required unless dataset.synthetic is set")
    return load_corpus(ds["path"], ds["format"])


def extract_corpus_mentions(
    corpus: Corpus, cfg: dict[str, Any], alias_map: dict[str, str] | None
):
    """Per-passage mention lists under the configured NER mode."""
    ner = cfg["ner"]
    mode = ner["normalization"]
    min_len = ner["min_entity_len"]
    if ner["mode"] == "external":
        if not ner.get("entities_path"):
            raise ValueError("ner.mode=external requires ner.entities_path")
        by_id = load_external_entities(ner["entities_path"])
        return [
            mentions_from_surfaces(
                by_id.get(p.id, []), d, mode=mode, min_entity_len=min_len, alias_map=alias_map
            )
            for d, p in enumerate(corpus.passages)
        ]
    if ner["mode"] != "regex":
        raise ValueError(f"unknown ner.mode: {ner['mode']!r}")
    return [
        mentions_for_passage(p.text, d, mode=mode, min_entity_len=min_len, alias_map=alias_map)
        for d, p in enumerate(corpus.passages)
    ]


def build_graph_for(cfg: dict[str, Any], corpus: Corpus) -> BipartiteGraph:
    """Entity graph (or term graph for tfidf_graph) per config, pruned if asked."""
    gcfg = cfg["graph"]
    if cfg["method"] == "tfidf_graph":
        g = build_term_graph(
            corpus, min_df=gcfg["term"]["min_df"], max_df_ratio=gcfg["term"]["max_df_ratio"]
        )
    else:
        alias_map = build_alias_map(corpus, cfg["ner"]["normalization"]) if gcfg["alias"] else None
        ner_output = extract_corpus_mentions(corpus, cfg, alias_map)
        g = build_entity_graph(
            corpus,
            ner_output,
            min_entity_df=gcfg["min_entity_df"],
            max_entity_df_ratio=gcfg["max_entity_df_ratio"],
            hub_penalty=gcfg["hub_penalty"],
            norm_mode=cfg["ner"]["normalization"],
        )
    prune = gcfg["prune"]
    if prune["hub_top_pct"] > 0 or prune["outdegree_cap"] is not None:
        g = prune_graph(
            g, hub_top_pct=prune["hub_top_pct"], outdegree_cap=prune["outdegree_cap"]
        )
    return g


def _aligned_store(store: dense.VectorStore, corpus: Corpus) -> dense.VectorStore:
    """Reorder vector rows to corpus ordinal order; error on missing ids."""
    if store.ids == corpus.passage_ids:
        return store
    row_of = {pid: i for i, pid in enumerate(store.ids)}
    missing = [pid for pid in corpus.passage_ids if pid not in row_of]
    if missing:
        raise ValueError(f"vector store missing {len(missing)} corpus ids, e.g. {missing[:3]}")
    perm = [row_of[pid] for pid in corpus.passage_ids]
    return dense.VectorStore(
        dim=store.dim,
        count=len(perm),
        vectors=store.vectors[perm],
        ids=list(corpus.passage_ids),
    )


@dataclass
class Artifacts:
    """Everything a method needs at query time, built once per run."""

    corpus: Corpus
    queries: list[Query]
    index: lexical.InvertedIndex | None = None
    graph: BipartiteGraph | None = None
    alias_map: dict[str, str] | None = None
    passage_store: dense.VectorStore | None = None
    query_store: dense.VectorStore | None = None
    hnsw: dense.HnswIndex | None = None
    external_scores: dict[tuple[str, str], float] = field(default_factory=dict)
    passage_texts: list[str] = field(default_factory=list)


def prepare_artifacts(
    cfg: dict[str, Any],
    corpus: Corpus,
    queries: list[Query],
    graph: BipartiteGraph | None = None,
) -> Artifacts:
    """Build (or adopt) every artifact the configured method requires."""
    method = cfg["method"]
    art = Artifacts(corpus=corpus, queries=queries)
    art.passage_texts = [p.text for p in corpus.passages]

    art.index = lexical.build_index(corpus)

    if method in GRAPH_METHODS or method == "tfidf_graph":
        art.graph = graph if graph is not None else build_graph_for(cfg, corpus)
        if cfg["graph"]["alias"] and art.graph.kind == "entity":
            art.alias_map = build_alias_map(corpus, cfg["ner"]["normalization"])

    if method in DENSE_METHODS:
        v = cfg["vectors"]
        for key in ("passages_path", "passages_ids_path", "queries_path", "queries_ids_path"):
            if not v.get(key):
                raise ValueError(f"method {method!r} requires vectors.{key}")
        art.passage_store = _aligned_store(
            dense.load_vectors(v["passages_path"], v["passages_ids_path"]), corpus
        )
        art.query_store = dense.load_vectors(v["queries_path"], v["queries_ids_path"])
        if v["ann"]["enabled"]:
            art.hnsw = dense.hnsw_build(
                art.passage_store,
                M=v["ann"]["M"],
                ef_construction=v["ann"]["ef_construction"],
                rng_seed=v["ann"]["rng_seed"],
            )

    if method in RERANK_METHODS:
        path = cfg["rerank"]["scores_path"]
        if not path:
            raise ValueError(f"method {method!r} requires rerank.scores_path")
        art.external_scores = fusion.load_external_scores(path)

    return art


@dataclass
class QueryResult:
    ranked: RankedList
    fallback_used: bool = False
    edge_traversals: int = 0


def _query_vector(art: Artifacts, qid: str) -> np.ndarray:
    store = art.query_store
    if store is None:
        raise ValueError("query vectors not loaded")
    cache = getattr(store, "_row_of", None)
    if cache is None:
        cache = {pid: i for i, pid in enumerate(store.ids)}
        store._row_of = cache  # type: ignore[attr-defined]
    if qid not in cache:
        raise ValueError(f"no vector for query id {qid!r}")
    return store.vectors[cache[qid]]


def _dense_ranked(art: Artifacts, cfg: dict[str, Any], qid: str, k: int) -> RankedList:
    qv = _query_vector(art, qid)
    ann = cfg["vectors"]["ann"]
    if art.hnsw is not None:
        k_eff = min(k, ann["ef_search"])  # beam width bounds the request depth
        return dense.hnsw_search(art.hnsw, art.passage_store, qv, k_eff, ann["ef_search"])
    return dense.exact_search(art.passage_store, qv, k)


def _run_ppr(cfg: dict[str, Any], g: BipartiteGraph, seed) -> PprScores:
    p = cfg["ppr"]
    if p["mode"] == "push":
        return ppr_push(g, seed, alpha=p["alpha"], epsilon=p["epsilon"])
    if p["mode"] == "power":
        return ppr_power(g, seed, alpha=p["alpha"], max_iter=p["max_iter"])
    raise ValueError(f"unknown ppr.mode: {p['mode']!r}")


def run_query(cfg: dict[str, Any], art: Artifacts, query: Query) -> QueryResult:
    """Execute the configured method for one query, recording stage timings."""
    method = cfg["method"]
    depth = cfg["eval"]["depth"]
    b25 = cfg["bm25"]

    t_start = time.perf_counter()

    if method == "bm25":
        ranked = lexical.bm25_search(art.index, query.question, depth, k1=b25["k1"], b=b25["b"])
        return QueryResult(ranked.with_timings(total=time.perf_counter() - t_start))

    if method == "rm3":
        r = cfg["rm3"]
        ranked = lexical.rm3_search(
            art.index,
            query.question,
            depth,
            fb_docs=r["fb_docs"],
            fb_terms=r["fb_terms"],
            lam=r["lambda"],
            k1=b25["k1"],
            b=b25["b"],
        )
        return QueryResult(ranked.with_timings(total=time.perf_counter() - t_start))

    if method == "bm25_2step":
        ts = cfg["two_step"]
        ranked = lexical.two_step_search(
            art.index,
            query.question,
            depth,
            art.passage_texts,
            k1_stage=ts["k1_stage"],
            m_entities=ts["m_entities"],
            k1=b25["k1"],
            b=b25["b"],
        )
        return QueryResult(ranked.with_timings(total=time.perf_counter() - t_start))

    if method == "dense":
        ranked = _dense_ranked(art, cfg, query.id, depth)
        return QueryResult(ranked.with_timings(total=time.perf_counter() - t_start))

    if method in ("rrf", "rrf_rerank"):
        lists = [
            lexical.bm25_search(art.index, query.question, depth, k1=b25["k1"], b=b25["b"]),
            _dense_ranked(art, cfg, query.id, depth),
        ]
        fused = fusion.rrf_fuse(lists, k_rrf=cfg["rrf"]["k"], depth=cfg["rrf"]["depth"])
        if method == "rrf_rerank":
            fused = fusion.external_rerank(
                fused, art.external_scores, query.id, top_n=cfg["rerank"]["top_n"]
            )
        return QueryResult(fused.with_timings(total=time.perf_counter() - t_start))

    if method == "bm25_rerank":
        ranked = lexical.bm25_search(art.index, query.question, depth, k1=b25["k1"], b=b25["b"])
        ranked = fusion.external_rerank(
            ranked, art.external_scores, query.id, top_n=cfg["rerank"]["top_n"]
        )
        return QueryResult(ranked.with_timings(total=time.perf_counter() - t_start))

    # graph family
    g = art.graph
    scfg = cfg["seeds"]
    k_seed = seed_k_for(cfg)
    fallback_used = False
    seed = None
    rrf_list: RankedList | None = None

    t_seed = time.perf_counter()
    if method == "graph":
        seed = entity_seeds(
            query, g, art.alias_map, q=scfg["q"], min_entity_len=cfg["ner"]["min_entity_len"]
        )
    elif method == "tfidf_graph":
        seed = term_seeds(query, g, q=scfg["q"])
    elif method == "graph_hybrid":
        s_e = entity_seeds(
            query, g, art.alias_map, q=scfg["q"], min_entity_len=cfg["ner"]["min_entity_len"]
        )
        ranked = lexical.bm25_search(art.index, query.question, depth, k1=b25["k1"], b=b25["b"])
        s_d = passage_seeds(ranked, k_seed, scfg["weighting"], art.corpus)
        seed = mix_seeds(s_e, s_d, scfg["mixing"]) if (s_e or s_d) else None
    elif method == "graph_dense":
        s_e = entity_seeds(
            query, g, art.alias_map, q=scfg["q"], min_entity_len=cfg["ner"]["min_entity_len"]
        )
        ranked = _dense_ranked(art, cfg, query.id, depth)
        s_d = passage_seeds(ranked, k_seed, scfg["weighting"], art.corpus)
        seed = mix_seeds(s_e, s_d, scfg["mixing"]) if (s_e or s_d) else None
    elif method in ("graph_rrf", "rrf_ppr_fusion"):
        lists = [
            lexical.bm25_search(art.index, query.question, depth, k1=b25["k1"], b=b25["b"]),
            _dense_ranked(art, cfg, query.id, depth),
        ]
        rrf_list = fusion.rrf_fuse(lists, k_rrf=cfg["rrf"]["k"], depth=cfg["rrf"]["depth"])
        seed = passage_seeds(rrf_list, k_seed, scfg["weighting"], art.corpus)
    else:
        raise ValueError(f"unknown method id: {method!r}")

    if seed is None:
        fallback_used = True
        bm25_ranked = None
        if scfg["fallback"] == "bm25_top1":
            bm25_ranked = lexical.bm25_search(
                art.index, query.question, depth, k1=b25["k1"], b=b25["b"]
            )
        seed = fallback_seed(art.corpus, scfg["fallback"], bm25_ranked)
    seed_seconds = time.perf_counter() - t_seed

    t_trav = time.perf_counter()
    scores = _run_ppr(cfg, g, seed)
    ranked = rank_documents(g, scores, depth, doc_ids=art.corpus.passage_ids)
    traversal_seconds = time.perf_counter() - t_trav

    if method == "rrf_ppr_fusion":
        doc_scores = {
            art.corpus.passages[i].id: float(s)
            for i, s in enumerate(scores.scores[: g.n_docs])
            if s > 0
        }
        ranked = fusion.score_fuse(rrf_list, doc_scores, weight=cfg["fusion"]["weight"])
        ranked = RankedList(items=ranked.items[:depth])

    total = time.perf_counter() - t_start
    return QueryResult(
        ranked=ranked.with_timings(seed=seed_seconds, traversal=traversal_seconds, total=total),
        fallback_used=fallback_used,
        edge_traversals=scores.edge_traversals,
    )


@dataclass
class RunOutput:
    run: dict[str, RankedList]
    fallback_count: int
    mean_traversals: float


def run_all(
    cfg: dict[str, Any], art: Artifacts, queries: list[Query] | None = None
) -> RunOutput:
    """Run the configured method over all queries (worker pool optional,
    results always collected in query order)."""
    qs = queries if queries is not None else art.queries
    limit = cfg.get("queries_limit")
    if limit:
        qs = qs[: int(limit)]
    workers = int(cfg.get("workers") or 1)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda q: run_query(cfg, art, q), qs))
    else:
        results = [run_query(cfg, art, q) for q in qs]

    run = {q.id: res.ranked for q, res in zip(qs, results)}
    fallback_count = sum(1 for r in results if r.fallback_used)
    traversals = [r.edge_traversals for r in results if r.edge_traversals]
    mean_tr = float(np.mean(traversals)) if traversals else 0.0
    return RunOutput(run=run, fallback_count=fallback_count, mean_traversals=mean_tr)
