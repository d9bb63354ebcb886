"""Pure numpy implementations of the random-walk kernels.

Drop-in twin of the compiled extension module; selected automatically at
import time when the extension is unavailable (see ``backend``).  Semantics,
traversal accounting, and processing order are identical.
"""

from __future__ import annotations

import heapq

import numpy as np

BACKEND_NAME = "python"


def power_iterate(
    indptr: np.ndarray,
    indices: np.ndarray,
    data: np.ndarray,
    seed_idx: np.ndarray,
    seed_val: np.ndarray,
    alpha: float,
    n_iter: int,
) -> tuple[np.ndarray, float, int]:
    """Fixed-iteration restart walk: r <- alpha*s + (1-alpha) * P^T r.

    r starts at the seed distribution; after every update the vector is
    L1-renormalized so mass shed at dangling rows is restored.  Returns
    (scores, L1 delta of the final iteration, edge traversal count); only
    edges leaving nodes with nonzero mass count as traversed.
    """
    n = len(indptr) - 1
    row_counts = np.diff(indptr)
    r = np.zeros(n, dtype=np.float64)
    r[seed_idx] = seed_val
    traversals = 0
    delta = 0.0
    for it in range(n_iter):
        per_edge = np.repeat(r, row_counts)
        traversals += int(np.count_nonzero(per_edge))
        nxt = (1.0 - alpha) * np.bincount(indices, weights=data * per_edge, minlength=n)
        nxt[seed_idx] += alpha * seed_val
        total = nxt.sum()
        if total > 0.0:
            nxt /= total
        if it == n_iter - 1:
            delta = float(np.abs(nxt - r).sum())
        r = nxt
    return r, delta, traversals


def push_sweep(
    indptr: np.ndarray,
    indices: np.ndarray,
    data: np.ndarray,
    seed_idx: np.ndarray,
    seed_val: np.ndarray,
    alpha: float,
    epsilon: float,
    max_pushes: int,
) -> tuple[np.ndarray, float, int, int]:
    """Residual-driven local pushes until res(u) <= epsilon * outdeg(u) everywhere.

    Processing is max-residual-first with ordinal tie-break, realized as a
    lazy heap: every qualifying residual update inserts an entry, stale
    entries are skipped on pop.  Returns (estimate, final residual L1,
    pushes executed, edge traversals).
    """
    n = len(indptr) - 1
    outdeg = np.diff(indptr)
    p = np.zeros(n, dtype=np.float64)
    res = np.zeros(n, dtype=np.float64)
    res[seed_idx] = seed_val

    heap: list[tuple[float, int]] = []
    for i in np.sort(seed_idx):
        if res[i] > epsilon * outdeg[i]:
            heapq.heappush(heap, (-res[i], int(i)))

    pushes = 0
    traversals = 0
    while heap and pushes < max_pushes:
        neg, u = heapq.heappop(heap)
        ru = res[u]
        if ru != -neg:
            continue  # superseded by a later insert
        p[u] += alpha * ru
        res[u] = 0.0
        pushes += 1
        lo, hi = int(indptr[u]), int(indptr[u + 1])
        traversals += hi - lo
        spread = (1.0 - alpha) * ru
        for j in range(lo, hi):
            v = int(indices[j])
            rv = res[v] + spread * data[j]
            res[v] = rv
            if rv > epsilon * outdeg[v]:
                heapq.heappush(heap, (-rv, v))
    return p, float(res.sum()), pushes, traversals
