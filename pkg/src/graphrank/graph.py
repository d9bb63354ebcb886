"""Entity-document bipartite graph construction, pruning, stats, persistence.

Nodes are ordered documents-first: doc ordinals occupy [0, n_docs) and
entity ordinals occupy [n_docs, n_docs + n_entities).  Two sparse structures
are kept:

* ``forward``: row-stochastic CSR transition matrix over all nodes.  Each
  doc row points at its entities, each entity row points at its documents.
  Doc->entity edges are scaled by df(e)^-hub_penalty before normalization;
  entity->doc edges use the plain weight.
* ``raw``: entity-major CSR of the pre-normalization weights
  w(e, d) = tf(e, d) * ln((N+1) / (df(e)+1)) + 1 (one entry per edge).
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

from .corpus import Corpus
from .entities import EntityMention

MAGIC = b"SPRIGGRF"
FORMAT_VERSION = 1

_KIND_CODES = {"entity": 0, "term": 1}
_KIND_NAMES = {v: k for k, v in _KIND_CODES.items()}


@dataclass
class BipartiteGraph:
    n_docs: int
    n_entities: int
    entity_vocab: dict[str, int]
    fwd_indptr: np.ndarray
    fwd_indices: np.ndarray
    fwd_data: np.ndarray
    raw_indptr: np.ndarray
    raw_indices: np.ndarray
    raw_data: np.ndarray
    df: np.ndarray
    norm_mode: str = "simple"
    hub_penalty: float = 0.0
    kind: str = "entity"

    @property
    def n_nodes(self) -> int:
        return self.n_docs + self.n_entities

    @property
    def n_edges(self) -> int:
        return len(self.raw_data)

    def entity_node(self, entity_ordinal: int) -> int:
        return self.n_docs + entity_ordinal

    def out_degrees(self) -> np.ndarray:
        return np.diff(self.fwd_indptr)

    def doc_degrees(self) -> np.ndarray:
        """Per-document distinct-entity counts from the raw edge matrix."""
        return np.bincount(self.raw_indices, minlength=self.n_docs)


@dataclass(frozen=True)
class GraphStats:
    nodes: int
    edges: int
    p95_entity_degree: int
    p95_doc_degree: int


def _nearest_rank(values: np.ndarray, pct: float) -> int:
    if len(values) == 0:
        return 0
    ordered = np.sort(values)
    rank = math.ceil(pct / 100.0 * len(ordered))
    return int(ordered[max(rank, 1) - 1])


def graph_stats(g: BipartiteGraph) -> GraphStats:
    entity_deg = np.diff(g.raw_indptr)
    return GraphStats(
        nodes=g.n_nodes,
        edges=g.n_edges,
        p95_entity_degree=_nearest_rank(entity_deg, 95),
        p95_doc_degree=_nearest_rank(g.doc_degrees(), 95),
    )


def _assemble(
    n_docs: int,
    n_entities: int,
    e_ids: np.ndarray,
    d_ids: np.ndarray,
    weights: np.ndarray,
    doc_side_weights: np.ndarray,
    entity_vocab: dict[str, int],
    norm_mode: str,
    hub_penalty: float,
    kind: str,
) -> BipartiteGraph:
    """Build CSR structures from one (entity, doc, weight) edge list."""
    n_nodes = n_docs + n_entities
    n_edges = len(e_ids)

    # raw matrix: entity-major, columns sorted ascending within a row
    order = np.lexsort((d_ids, e_ids))
    raw_indptr = np.zeros(n_entities + 1, dtype=np.int64)
    np.cumsum(np.bincount(e_ids, minlength=n_entities), out=raw_indptr[1:])
    raw_indices = d_ids[order].astype(np.int64)
    raw_data = weights[order].astype(np.float64)

    # forward matrix: doc rows then entity rows, both directions of each edge
    rows = np.concatenate([d_ids, n_docs + e_ids])
    cols = np.concatenate([n_docs + e_ids, d_ids])
    vals = np.concatenate([doc_side_weights, weights]).astype(np.float64)
    order = np.lexsort((cols, rows))
    rows, cols, vals = rows[order], cols[order], vals[order]
    fwd_indptr = np.zeros(n_nodes + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=n_nodes), out=fwd_indptr[1:])
    if len(vals):
        row_sums = np.bincount(rows, weights=vals, minlength=n_nodes)
        denom = np.repeat(np.where(row_sums > 0, row_sums, 1.0), np.diff(fwd_indptr))
        vals = vals / denom

    df = np.bincount(e_ids, minlength=n_entities).astype(np.int64) if n_edges else np.zeros(
        n_entities, dtype=np.int64
    )

    return BipartiteGraph(
        n_docs=n_docs,
        n_entities=n_entities,
        entity_vocab=entity_vocab,
        fwd_indptr=fwd_indptr,
        fwd_indices=cols.astype(np.int64),
        fwd_data=vals,
        raw_indptr=raw_indptr,
        raw_indices=raw_indices,
        raw_data=raw_data,
        df=df,
        norm_mode=norm_mode,
        hub_penalty=hub_penalty,
        kind=kind,
    )


def _build_from_counts(
    n_docs: int,
    vocab_order: list[str],
    e_ids: np.ndarray,
    d_ids: np.ndarray,
    tfs: np.ndarray,
    min_df: int,
    max_df_ratio: float,
    hub_penalty: float,
    norm_mode: str,
    kind: str,
) -> BipartiteGraph:
    n_raw_entities = len(vocab_order)
    df_all = np.bincount(e_ids, minlength=n_raw_entities)

    keep = (df_all >= min_df) & (df_all <= max_df_ratio * n_docs)
    new_id = np.cumsum(keep) - 1  # old ordinal -> new ordinal for survivors
    n_entities = int(keep.sum())
    vocab = {name: int(new_id[old]) for old, name in enumerate(vocab_order) if keep[old]}

    mask = keep[e_ids]
    e_kept = new_id[e_ids[mask]].astype(np.int64)
    d_kept = d_ids[mask].astype(np.int64)
    tf_kept = tfs[mask].astype(np.float64)
    df_kept = df_all[e_ids[mask]].astype(np.float64)

    weights = tf_kept * np.log((n_docs + 1) / (df_kept + 1)) + 1.0
    doc_side = weights * np.power(df_kept, -hub_penalty) if hub_penalty else weights

    return _assemble(
        n_docs, n_entities, e_kept, d_kept, weights, doc_side, vocab, norm_mode, hub_penalty, kind
    )


def build_entity_graph(
    corpus: Corpus,
    ner_output: list[list[EntityMention]],
    min_entity_df: int = 1,
    max_entity_df_ratio: float = 1.0,
    hub_penalty: float = 0.5,
    norm_mode: str = "simple",
) -> BipartiteGraph:
    """Assemble the entity-document graph from per-passage mention lists.

    ``ner_output[d]`` holds the already normalized (and alias-resolved)
    mentions of passage ordinal ``d``.  Cost is linear in total mentions.
    """
    if hub_penalty < 0:
        raise ValueError("hub_penalty must be >= 0")
    if not 0 < max_entity_df_ratio <= 1:
        raise ValueError("max_entity_df_ratio must be in (0, 1]")
    if len(ner_output) != len(corpus):
        raise ValueError("ner_output length must match corpus size")

    vocab_order: list[str] = []
    first_seen: dict[str, int] = {}
    e_list: list[int] = []
    d_list: list[int] = []
    tf_list: list[int] = []
    for d, mentions in enumerate(ner_output):
        for m in mentions:
            eid = first_seen.get(m.normalized)
            if eid is None:
                eid = len(vocab_order)
                first_seen[m.normalized] = eid
                vocab_order.append(m.normalized)
            e_list.append(eid)
            d_list.append(d)
            tf_list.append(m.count)

    return _build_from_counts(
        n_docs=len(corpus),
        vocab_order=vocab_order,
        e_ids=np.asarray(e_list, dtype=np.int64),
        d_ids=np.asarray(d_list, dtype=np.int64),
        tfs=np.asarray(tf_list, dtype=np.int64),
        min_df=min_entity_df,
        max_df_ratio=max_entity_df_ratio,
        hub_penalty=hub_penalty,
        norm_mode=norm_mode,
        kind="entity",
    )


def build_term_graph(
    corpus: Corpus,
    min_df: int = 3,
    max_df_ratio: float = 0.1,
) -> BipartiteGraph:
    """Term-document variant: the entity partition is replaced by word terms."""
    from .lexical import tokenize

    vocab_order: list[str] = []
    first_seen: dict[str, int] = {}
    e_list: list[int] = []
    d_list: list[int] = []
    tf_list: list[int] = []
    for d, passage in enumerate(corpus.passages):
        counts: dict[str, int] = {}
        for tok in tokenize(passage.text):
            counts[tok] = counts.get(tok, 0) + 1
        for term, tf in counts.items():
            tid = first_seen.get(term)
            if tid is None:
                tid = len(vocab_order)
                first_seen[term] = tid
                vocab_order.append(term)
            e_list.append(tid)
            d_list.append(d)
            tf_list.append(tf)

    return _build_from_counts(
        n_docs=len(corpus),
        vocab_order=vocab_order,
        e_ids=np.asarray(e_list, dtype=np.int64),
        d_ids=np.asarray(d_list, dtype=np.int64),
        tfs=np.asarray(tf_list, dtype=np.int64),
        min_df=min_df,
        max_df_ratio=max_df_ratio,
        hub_penalty=0.0,
        norm_mode="lower",
        kind="term",
    )


def prune_graph(
    g: BipartiteGraph,
    hub_top_pct: float = 0.0,
    outdegree_cap: int | None = None,
) -> BipartiteGraph:
    """Drop top-df hub entities and cap per-entity edges to the strongest L.

    Hub removal takes the ceil(hub_top_pct * n_entities) highest-df entities
    (df ties resolved by ordinal ascending); the cap keeps each surviving
    entity's L highest-raw-weight edges (ties by doc ordinal).  Rows of the
    returned graph are re-normalized; the input graph is left untouched.
    """
    if not 0 <= hub_top_pct < 1:
        raise ValueError("hub_top_pct must be in [0, 1)")
    if outdegree_cap is not None and outdegree_cap < 1:
        raise ValueError("outdegree_cap of 0 would orphan every entity")

    n_remove = math.ceil(hub_top_pct * g.n_entities)
    removed = np.zeros(g.n_entities, dtype=bool)
    if n_remove:
        order = np.lexsort((np.arange(g.n_entities), -g.df))
        removed[order[:n_remove]] = True

    e_list: list[np.ndarray] = []
    d_list: list[np.ndarray] = []
    w_list: list[np.ndarray] = []
    pen_list: list[np.ndarray] = []
    for e in range(g.n_entities):
        if removed[e]:
            continue
        lo, hi = g.raw_indptr[e], g.raw_indptr[e + 1]
        docs = g.raw_indices[lo:hi]
        ws = g.raw_data[lo:hi]
        if outdegree_cap is not None and len(ws) > outdegree_cap:
            pick = np.lexsort((docs, -ws))[:outdegree_cap]
            pick.sort()
            docs, ws = docs[pick], ws[pick]
        e_list.append(np.full(len(docs), e, dtype=np.int64))
        d_list.append(docs)
        w_list.append(ws)
        # keep the built penalty multiplier so surviving doc->entity
        # proportions match the original graph exactly
        pen_list.append(ws * float(g.df[e]) ** -g.hub_penalty if g.hub_penalty else ws)

    if e_list:
        e_old = np.concatenate(e_list)
        d_ids = np.concatenate(d_list)
        weights = np.concatenate(w_list)
        doc_side = np.concatenate(pen_list)
    else:
        e_old = np.zeros(0, dtype=np.int64)
        d_ids = np.zeros(0, dtype=np.int64)
        weights = np.zeros(0, dtype=np.float64)
        doc_side = np.zeros(0, dtype=np.float64)

    survivors = ~removed
    new_id = np.cumsum(survivors) - 1
    vocab = {name: int(new_id[old]) for name, old in g.entity_vocab.items() if survivors[old]}

    return _assemble(
        n_docs=g.n_docs,
        n_entities=int(survivors.sum()),
        e_ids=new_id[e_old] if len(e_old) else e_old,
        d_ids=d_ids,
        weights=weights,
        doc_side_weights=doc_side,
        entity_vocab=vocab,
        norm_mode=g.norm_mode,
        hub_penalty=g.hub_penalty,
        kind=g.kind,
    )


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------


def save_graph(path: str, g: BipartiteGraph) -> None:
    """Serialize to the versioned little-endian binary layout."""
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<IBdIIQQ", FORMAT_VERSION, _KIND_CODES[g.kind], g.hub_penalty,
                            g.n_docs, g.n_entities, len(g.raw_data), len(g.fwd_data)))
        mode_b = g.norm_mode.encode("utf-8")
        f.write(struct.pack("<I", len(mode_b)))
        f.write(mode_b)
        vocab_in_order = sorted(g.entity_vocab.items(), key=lambda kv: kv[1])
        for name, _ in vocab_in_order:
            b = name.encode("utf-8")
            f.write(struct.pack("<I", len(b)))
            f.write(b)
        for arr, dtype in (
            (g.fwd_indptr, "<i8"),
            (g.fwd_indices, "<i8"),
            (g.fwd_data, "<f8"),
            (g.raw_indptr, "<i8"),
            (g.raw_indices, "<i8"),
            (g.raw_data, "<f8"),
            (g.df, "<i8"),
        ):
            f.write(np.ascontiguousarray(arr, dtype=dtype).tobytes())


class GraphFormatError(ValueError):
    pass


def load_graph(path: str) -> BipartiteGraph:
    with open(path, "rb") as f:
        data = f.read()
    if data[:8] != MAGIC:
        raise GraphFormatError(f"{path}: bad magic {data[:8]!r}")
    off = 8
    version, kind_code, hub_penalty, n_docs, n_entities, n_edges, fwd_nnz = struct.unpack_from(
        "<IBdIIQQ", data, off
    )
    off += struct.calcsize("<IBdIIQQ")
    if version != FORMAT_VERSION:
        raise GraphFormatError(f"{path}: unsupported version {version}")
    (mode_len,) = struct.unpack_from("<I", data, off)
    off += 4
    norm_mode = data[off: off + mode_len].decode("utf-8")
    off += mode_len
    vocab: dict[str, int] = {}
    for i in range(n_entities):
        (blen,) = struct.unpack_from("<I", data, off)
        off += 4
        vocab[data[off: off + blen].decode("utf-8")] = i
        off += blen

    def take(count: int, dtype: str) -> np.ndarray:
        nonlocal off
        arr = np.frombuffer(data, dtype=dtype, count=count, offset=off).copy()
        off += arr.nbytes
        return arr

    n_nodes = n_docs + n_entities
    fwd_indptr = take(n_nodes + 1, "<i8")
    fwd_indices = take(fwd_nnz, "<i8")
    fwd_data = take(fwd_nnz, "<f8")
    raw_indptr = take(n_entities + 1, "<i8")
    raw_indices = take(n_edges, "<i8")
    raw_data = take(n_edges, "<f8")
    df = take(n_entities, "<i8")
    if off != len(data):
        raise GraphFormatError(f"{path}: {len(data) - off} trailing bytes")

    return BipartiteGraph(
        n_docs=n_docs,
        n_entities=n_entities,
        entity_vocab=vocab,
        fwd_indptr=fwd_indptr,
        fwd_indices=fwd_indices,
        fwd_data=fwd_data,
        raw_indptr=raw_indptr,
        raw_indices=raw_indices,
        raw_data=raw_data,
        df=df,
        norm_mode=norm_mode,
        hub_penalty=hub_penalty,
        kind=_KIND_NAMES[kind_code],
    )
