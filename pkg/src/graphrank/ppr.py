"""Personalized PageRank over the bipartite graph.

Two interchangeable kernel backends drive the walks: a compiled extension
(built from ``_kernels.pyx``) and a pure numpy twin.  The compiled one is
preferred at import; ``GRAPHRANK_BACKEND=python`` forces the fallback.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .graph import BipartiteGraph
from .ranking import RankedList

from . import _kernels_py

try:  # pragma: no cover - depends on whether the extension was compiled
    from . import _kernels as _compiled
except ImportError:  # pragma: no cover
    _compiled = None

if os.environ.get("GRAPHRANK_BACKEND") == "python":
    _impl = _kernels_py
else:
    _impl = _compiled if _compiled is not None else _kernels_py

BACKEND = _impl.BACKEND_NAME

MAX_PUSHES = 1_000_000


def available_backends() -> dict[str, object]:
    """Importable kernel modules keyed by name (for parity tests and benchmarks)."""
    out = {"python": _kernels_py}
    if _compiled is not None:
        out["compiled"] = _compiled
    return out


class EmptySeedError(ValueError):
    """Raised when a walk is requested with no seed mass; caller must fall back."""


@dataclass(frozen=True)
class SeedVector:
    """Sparse L1-normalized distribution over graph nodes.

    ``raw_mass`` preserves the pre-normalization L1 total so that
    mass-proportional seed mixing can recover the original scales.
    """

    indices: np.ndarray
    values: np.ndarray
    raw_mass: float

    @classmethod
    def from_masses(cls, indices, masses) -> "SeedVector":
        idx = np.asarray(indices, dtype=np.int64)
        mass = np.asarray(masses, dtype=np.float64)
        if len(idx) != len(mass):
            raise ValueError("indices and masses must align")
        if len(idx) == 0:
            raise EmptySeedError("cannot build a seed from zero masses")
        if np.any(mass <= 0):
            raise ValueError("seed masses must be positive")
        # merge duplicate nodes, canonical ascending order
        uniq, inv = np.unique(idx, return_inverse=True)
        merged = np.zeros(len(uniq), dtype=np.float64)
        np.add.at(merged, inv, mass)
        total = float(merged.sum())
        return cls(indices=uniq, values=merged / total, raw_mass=total)

    @property
    def n_nonzero(self) -> int:
        return len(self.indices)

    def as_dict(self) -> dict[int, float]:
        return {int(i): float(v) for i, v in zip(self.indices, self.values)}


@dataclass
class PprScores:
    scores: np.ndarray
    iterations_run: int
    residual_norm: float
    edge_traversals: int


def _check_seed(g: BipartiteGraph, s: SeedVector | None) -> None:
    if s is None or s.n_nonzero == 0:
        raise EmptySeedError("empty seed vector; apply the configured fallback policy")
    if np.any(s.indices < 0) or np.any(s.indices >= g.n_nodes):
        raise ValueError("seed indices out of node range")


def ppr_power(g: BipartiteGraph, s: SeedVector, alpha: float = 0.15, max_iter: int = 5) -> PprScores:
    """Power iteration: r0 = s, then r <- alpha*s + (1-alpha) P^T r, T times.

    After each update r is L1-renormalized, restoring mass lost at dangling
    rows.  Edge traversal work is capped at max_iter * E by construction.
    """
    _check_seed(g, s)
    if not 0 < alpha < 1:
        raise ValueError("alpha must be in (0, 1)")
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    scores, delta, traversals = _impl.power_iterate(
        g.fwd_indptr, g.fwd_indices, g.fwd_data, s.indices, s.values, alpha, max_iter
    )
    return PprScores(
        scores=scores, iterations_run=max_iter, residual_norm=delta, edge_traversals=traversals
    )


def ppr_push(g: BipartiteGraph, s: SeedVector, alpha: float = 0.15, epsilon: float = 1e-4) -> PprScores:
    """Push approximation: spend residual mass node by node until every
    residual falls below epsilon * outdegree."""
    _check_seed(g, s)
    if not 0 < alpha < 1:
        raise ValueError("alpha must be in (0, 1)")
    if epsilon <= 0:
        raise ValueError("epsilon must be > 0")
    scores, residual, pushes, traversals = _impl.push_sweep(
        g.fwd_indptr, g.fwd_indices, g.fwd_data, s.indices, s.values, alpha, epsilon, MAX_PUSHES
    )
    return PprScores(
        scores=scores, iterations_run=pushes, residual_norm=residual, edge_traversals=traversals
    )


def rank_documents(
    g: BipartiteGraph, r: PprScores, k: int, doc_ids: list[str] | None = None
) -> RankedList:
    """Top-k passages by the document slice of the walk scores.

    Ties break by doc ordinal ascending; entity-partition scores are never
    surfaced.  ``doc_ids`` maps ordinals to passage ids (ordinal strings
    when omitted).
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    doc_scores = r.scores[: g.n_docs]
    k_eff = min(k, g.n_docs)
    order = np.lexsort((np.arange(g.n_docs), -doc_scores))[:k_eff]
    items = [
        (doc_ids[i] if doc_ids is not None else str(i), float(doc_scores[i])) for i in order
    ]
    return RankedList(items=items)
