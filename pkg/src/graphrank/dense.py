"""Dense retrieval over externally produced embeddings.

Vectors are ingested from SPRIGVEC files (see ``write_vectors``) and
L2-normalized at load, so similarity is cosine via dot product.  Search is
either exhaustive or through a hierarchical navigable small-world graph
built from scratch with seeded level draws for reproducibility.
"""

from __future__ import annotations

import heapq
import math
import random
import struct
from dataclasses import dataclass, field

import numpy as np

from .ranking import RankedList

VEC_MAGIC = b"SPRIGVEC"
VEC_VERSION = 1


class VectorFormatError(ValueError):
    pass


@dataclass
class VectorStore:
    dim: int
    count: int
    vectors: np.ndarray  # float32, rows unit-L2
    ids: list[str]


def write_vectors(path: str, vectors: np.ndarray, ids_path: str, ids: list[str]) -> None:
    """Write raw (unnormalized) float32 vectors; normalization is the loader's job."""
    arr = np.ascontiguousarray(vectors, dtype="<f4")
    if arr.ndim != 2:
        raise ValueError("vectors must be a 2-D array")
    count, dim = arr.shape
    if len(ids) != count:
        raise ValueError("ids length must match vector count")
    with open(path, "wb") as f:
        f.write(VEC_MAGIC)
        f.write(struct.pack("<IIQ", VEC_VERSION, dim, count))
        f.write(arr.tobytes())
    with open(ids_path, "w", encoding="utf-8") as f:
        for pid in ids:
            f.write(pid + "\n")


def load_vectors(path: str, ids_path: str) -> VectorStore:
    with open(path, "rb") as f:
        header = f.read(8 + struct.calcsize("<IIQ"))
        if header[:8] != VEC_MAGIC:
            raise VectorFormatError(f"{path}: bad magic {header[:8]!r}")
        version, dim, count = struct.unpack_from("<IIQ", header, 8)
        if version != VEC_VERSION:
            raise VectorFormatError(f"{path}: unsupported version {version}")
        payload = f.read()
    expected = count * dim * 4
    if len(payload) != expected:
        raise VectorFormatError(
            f"{path}: payload is {len(payload)} bytes, header implies {expected}"
        )
    vectors = np.frombuffer(payload, dtype="<f4").reshape(count, dim).copy()

    with open(ids_path, encoding="utf-8") as f:
        ids = [line.rstrip("\n") for line in f if line.rstrip("\n")]
    if len(ids) != count:
        raise VectorFormatError(
            f"{ids_path}: {len(ids)} ids for {count} vectors"
        )

    norms = np.linalg.norm(vectors, axis=1)
    if np.any(norms == 0):
        bad = int(np.argmax(norms == 0))
        raise VectorFormatError(f"{path}: zero vector at row {bad} cannot be normalized")
    vectors /= norms[:, None]
    return VectorStore(dim=int(dim), count=int(count), vectors=vectors, ids=ids)


def _normalized_query(store: VectorStore, query_vec: np.ndarray) -> np.ndarray:
    q = np.asarray(query_vec, dtype=np.float32).ravel()
    if q.shape[0] != store.dim:
        raise ValueError(f"query dim {q.shape[0]} != store dim {store.dim}")
    n = float(np.linalg.norm(q))
    return q / n if n > 0 else q


def exact_search(store: VectorStore, query_vec: np.ndarray, k: int) -> RankedList:
    """Exhaustive cosine top-k; ties break by ordinal."""
    q = _normalized_query(store, query_vec)
    sims = store.vectors @ q
    k_eff = min(k, store.count)
    order = np.lexsort((np.arange(store.count), -sims))[:k_eff]
    return RankedList(items=[(store.ids[i], float(sims[i])) for i in order])


# ---------------------------------------------------------------------------
# HNSW
# ---------------------------------------------------------------------------


@dataclass
class HnswIndex:
    M: int
    ef_construction: int
    levels: list[int]
    adj: list[dict[int, list[int]]] = field(repr=False)  # adj[layer][node] -> neighbors
    entry_point: int = -1
    max_level: int = -1

    @property
    def count(self) -> int:
        return len(self.levels)


def _search_layer(
    vectors: np.ndarray,
    adj_layer: dict[int, list[int]],
    q: np.ndarray,
    entry_points: list[tuple[float, int]],
    ef: int,
    visited: set[int],
) -> list[tuple[float, int]]:
    """Beam search in one layer; returns up to ef (distance, node) pairs sorted."""
    candidates = list(entry_points)  # min-heap on (dist, node)
    heapq.heapify(candidates)
    results = [(-d, n) for d, n in entry_points]  # max-heap via negation
    heapq.heapify(results)
    while len(results) > ef:
        heapq.heappop(results)

    while candidates:
        d_c, c = heapq.heappop(candidates)
        if d_c > -results[0][0] and len(results) >= ef:
            break
        fresh = [n for n in adj_layer.get(c, ()) if n not in visited]
        if not fresh:
            continue
        visited.update(fresh)
        dists = 1.0 - vectors[fresh] @ q
        for n, d in zip(fresh, dists.tolist()):
            if len(results) < ef or d < -results[0][0]:
                heapq.heappush(candidates, (d, n))
                heapq.heappush(results, (-d, n))
                if len(results) > ef:
                    heapq.heappop(results)
    return sorted((-nd, n) for nd, n in results)


def _greedy_step(
    vectors: np.ndarray,
    adj_layer: dict[int, list[int]],
    q: np.ndarray,
    ep: int,
    d_ep: float,
) -> tuple[int, float]:
    """Walk to the locally closest node in one layer (ordinal tie-break)."""
    while True:
        ns = adj_layer.get(ep, ())
        if not ns:
            return ep, d_ep
        dists = 1.0 - vectors[list(ns)] @ q
        best_n, best_d = ep, d_ep
        for n, d in zip(ns, dists.tolist()):
            if d < best_d or (d == best_d and n < best_n):
                best_n, best_d = n, d
        if best_n == ep:
            return ep, d_ep
        ep, d_ep = best_n, best_d


def _select_heuristic(
    vectors: np.ndarray, candidates: list[tuple[float, int]], m: int
) -> list[tuple[float, int]]:
    """Greedy diversified neighbor selection.

    A candidate is kept only when it is closer to the query than to every
    already-selected neighbor, which spreads links across clusters.
    """
    selected: list[tuple[float, int]] = []
    sel_ids: list[int] = []
    for d, n in candidates:
        if len(selected) >= m:
            break
        if sel_ids:
            to_selected = 1.0 - vectors[sel_ids] @ vectors[n]
            if float(to_selected.min()) < d:
                continue
        selected.append((d, n))
        sel_ids.append(n)
    return selected


def hnsw_build(
    store: VectorStore, M: int = 32, ef_construction: int = 200, rng_seed: int = 0
) -> HnswIndex:
    """Insert all store vectors with geometric layer assignment (factor 1/ln M)."""
    if M < 2:
        raise ValueError("M must be >= 2")
    rng = random.Random(rng_seed)
    ml = 1.0 / math.log(M)
    vectors = store.vectors
    levels = [int(-math.log(max(rng.random(), 1e-300)) * ml) for _ in range(store.count)]

    index = HnswIndex(M=M, ef_construction=ef_construction, levels=levels, adj=[])

    for i in range(store.count):
        lvl = levels[i]
        if index.entry_point < 0:
            index.entry_point = i
            index.max_level = lvl
            index.adj = [{i: []} for _ in range(lvl + 1)]
            continue
        q = vectors[i]
        ep = index.entry_point
        d_ep = 1.0 - float(vectors[ep] @ q)

        for layer in range(index.max_level, lvl, -1):
            ep, d_ep = _greedy_step(vectors, index.adj[layer], q, ep, d_ep)

        entry = [(d_ep, ep)]
        for layer in range(min(lvl, index.max_level), -1, -1):
            visited = {n for _, n in entry}
            found = _search_layer(vectors, index.adj[layer], q, entry, ef_construction, visited)
            neighbors = _select_heuristic(vectors, found, M)
            index.adj[layer][i] = [n for _, n in neighbors]
            max_deg = 2 * M if layer == 0 else M
            for d, n in neighbors:
                lst = index.adj[layer][n]
                lst.append(i)
                if len(lst) > max_deg:
                    cand = sorted(
                        (1.0 - float(vectors[x] @ vectors[n]), x) for x in lst
                    )
                    index.adj[layer][n] = [x for _, x in _select_heuristic(vectors, cand, max_deg)]
            entry = found

        if lvl > index.max_level:
            for _ in range(index.max_level + 1, lvl + 1):
                index.adj.append({i: []})
            index.max_level = lvl
            index.entry_point = i
    return index


def hnsw_search(
    index: HnswIndex,
    store: VectorStore,
    query_vec: np.ndarray,
    k: int,
    ef_search: int = 64,
) -> RankedList:
    """Greedy descent through upper layers, then a beam of width ef_search at
    layer 0; top-k by cosine with ordinal tie-break."""
    if ef_search < k:
        raise ValueError(f"ef_search ({ef_search}) must be >= k ({k})")
    if index.count == 0 or index.entry_point < 0:
        return RankedList()
    q = _normalized_query(store, query_vec)
    vectors = store.vectors

    ep = index.entry_point
    d_ep = 1.0 - float(vectors[ep] @ q)
    for layer in range(index.max_level, 0, -1):
        ep, d_ep = _greedy_step(vectors, index.adj[layer], q, ep, d_ep)

    visited = {ep}
    found = _search_layer(vectors, index.adj[0], q, [(d_ep, ep)], ef_search, visited)
    top = found[:k]
    return RankedList(items=[(store.ids[n], 1.0 - d) for d, n in top])
