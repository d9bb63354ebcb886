"""Seed distribution construction: query entities, retrieved passages,
mixing of the two, and fallback policies for entity-less queries."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .corpus import Corpus, Query
from .entities import extract_regex, normalize_entity, resolve
from .graph import BipartiteGraph
from .ppr import EmptySeedError, SeedVector
from .ranking import RankedList

logger = logging.getLogger(__name__)

WEIGHTINGS = ("raw", "softmax", "rank")
MIXINGS = ("mass_proportional", "adaptive")
FALLBACKS = ("uniform", "bm25_top1")


@dataclass
class SeedConfig:
    k: int = 10
    weighting: str = "rank"
    q: float = 0.5
    mixing: str = "mass_proportional"
    fallback: str = "uniform"

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("seed k must be >= 1")
        if self.q < 0:
            raise ValueError("seed q must be >= 0")
        if self.weighting not in WEIGHTINGS:
            raise ValueError(f"unknown weighting {self.weighting!r}")
        if self.mixing not in MIXINGS:
            raise ValueError(f"unknown mixing {self.mixing!r}")
        if self.fallback not in FALLBACKS:
            raise ValueError(f"unknown fallback {self.fallback!r}")


def entity_seeds(
    query: Query,
    g: BipartiteGraph,
    alias_map: dict[str, str] | None = None,
    q: float = 0.5,
    min_entity_len: int = 2,
) -> SeedVector | None:
    """Seed mass on graph entities matched in the query text.

    Mentions are extracted with the capitalization heuristic, normalized with
    the graph's mode, alias-resolved, and matched against the vocabulary.
    Each matched entity gets raw mass df(e)**-q.  None when nothing matches.
    """
    matched: set[int] = set()
    for surface in extract_regex(query.question):
        norm = normalize_entity(surface, g.norm_mode)
        if len(norm) < min_entity_len:
            continue
        if alias_map is not None:
            norm = resolve(norm, alias_map)
        eid = g.entity_vocab.get(norm)
        if eid is not None:
            matched.add(eid)
    if not matched:
        return None
    ordinals = sorted(matched)
    masses = [float(g.df[e]) ** -q for e in ordinals]
    return SeedVector.from_masses([g.entity_node(e) for e in ordinals], masses)


def term_seeds(query: Query, g: BipartiteGraph, q: float = 0.5) -> SeedVector | None:
    """Term-graph analog of entity_seeds: match tokenized query terms."""
    from .lexical import tokenize

    matched: set[int] = set()
    for tok in tokenize(query.question):
        tid = g.entity_vocab.get(tok)
        if tid is not None:
            matched.add(tid)
    if not matched:
        return None
    ordinals = sorted(matched)
    masses = [float(g.df[t]) ** -q for t in ordinals]
    return SeedVector.from_masses([g.entity_node(t) for t in ordinals], masses)


def passage_seeds(
    ranked: RankedList, k: int, weighting: str, corpus: Corpus
) -> SeedVector | None:
    """Seed mass on the top-k retrieved passages.

    raw: mass proportional to retrieval score (shifted by the minimum when
    negatives occur); softmax: proportional to exp(score) at temperature 1;
    rank: proportional to 1/rank (1-based).  None for an empty input list.
    """
    if weighting not in WEIGHTINGS:
        raise ValueError(f"unknown weighting {weighting!r}")
    head = ranked.items[:k]
    if not head:
        return None
    ordinals = [corpus.index_of[pid] for pid, _ in head]
    scores = np.array([score for _, score in head], dtype=np.float64)

    if weighting == "rank":
        masses = 1.0 / np.arange(1, len(head) + 1)
    elif weighting == "softmax":
        masses = np.exp(scores - scores.max())
    else:  # raw
        masses = scores - scores.min() if scores.min() < 0 else scores.copy()
        if masses.sum() <= 0:
            masses = np.ones(len(head))
        else:
            keep = masses > 0
            ordinals = [o for o, good in zip(ordinals, keep) if good]
            masses = masses[keep]
    return SeedVector.from_masses(ordinals, masses)


def mix_seeds(
    s_e: SeedVector | None, s_d: SeedVector | None, mode: str = "mass_proportional"
) -> SeedVector:
    """Combine entity and passage seeds.

    mass_proportional concatenates the pre-normalization masses and
    normalizes jointly; adaptive uses the Laplace-smoothed weight
    (n_e+1)/(n_e+n_d+2) on the normalized vectors.  An empty partition
    yields the other unchanged.
    """
    if mode not in MIXINGS:
        raise ValueError(f"unknown mixing mode {mode!r}")
    if s_e is None and s_d is None:
        raise EmptySeedError("both seed partitions are empty")
    if s_e is None:
        return s_d
    if s_d is None:
        return s_e

    if mode == "mass_proportional":
        return SeedVector.from_masses(
            np.concatenate([s_e.indices, s_d.indices]),
            np.concatenate([s_e.values * s_e.raw_mass, s_d.values * s_d.raw_mass]),
        )
    a = (s_e.n_nonzero + 1) / (s_e.n_nonzero + s_d.n_nonzero + 2)
    return SeedVector.from_masses(
        np.concatenate([s_e.indices, s_d.indices]),
        np.concatenate([a * s_e.values, (1.0 - a) * s_d.values]),
    )


def adaptive_mix_weight(n_e: int, n_d: int) -> float:
    return (n_e + 1) / (n_e + n_d + 2)


def fallback_seed(
    corpus: Corpus, policy: str = "uniform", bm25_ranked: RankedList | None = None
) -> SeedVector:
    """Seed used when the configured seeding produced nothing.

    uniform spreads mass over every document node; bm25_top1 puts all mass
    on the lexical top passage (degrading to uniform when that list is
    empty too).
    """
    if policy not in FALLBACKS:
        raise ValueError(f"unknown fallback policy {policy!r}")
    n = len(corpus)
    if n == 0:
        raise EmptySeedError("cannot build a fallback seed over an empty corpus")
    if policy == "bm25_top1":
        if bm25_ranked is not None and len(bm25_ranked) > 0:
            top_id = bm25_ranked.items[0][0]
            return SeedVector.from_masses([corpus.index_of[top_id]], [1.0])
        logger.warning("bm25_top1 fallback with empty lexical result; using uniform")
    return SeedVector.from_masses(np.arange(n), np.full(n, 1.0 / n))


