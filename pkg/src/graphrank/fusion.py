"""Reciprocal-rank fusion, rank/score-level fusion with walk scores, and the
external-score reranker that stands in for out-of-process cross-encoders."""

from __future__ import annotations

import json

from .ranking import RankedList


def rrf_fuse(lists: list[RankedList], k_rrf: float = 60.0, depth: int = 100) -> RankedList:
    """Fuse ranked lists by summing 1/(k_rrf + rank) over top-``depth`` entries.

    Ranks are 1-based; score magnitudes of the inputs never matter.  Fused
    ties break by rank in the first list (unranked last), then by id.
    """
    if not lists:
        raise ValueError("need at least one list to fuse")
    scores: dict[str, float] = {}
    for lst in lists:
        for rank, (pid, _) in enumerate(lst.items[:depth], start=1):
            scores[pid] = scores.get(pid, 0.0) + 1.0 / (k_rrf + rank)

    first_rank = {pid: r for r, (pid, _) in enumerate(lists[0].items[:depth], start=1)}
    big = len(scores) + len(first_rank) + 1
    items = sorted(
        scores.items(), key=lambda kv: (-kv[1], first_rank.get(kv[0], big), kv[0])
    )
    return RankedList(items=items)


def score_fuse(
    rrf_list: RankedList, ppr_doc_scores: dict[str, float], weight: float = 0.5
) -> RankedList:
    """Convex combination of min-max-normalized fusion and walk scores.

    Candidates are the union of both sides; a side missing a candidate
    contributes 0 before normalization.  When a side's scores are all equal
    it contributes a flat 0.5.
    """
    if not 0 <= weight <= 1:
        raise ValueError("weight must be in [0, 1]")
    rrf_scores = dict(rrf_list.items)
    candidates = sorted(set(rrf_scores) | set(ppr_doc_scores))

    def normalized(raw: dict[str, float]) -> dict[str, float]:
        vals = [raw.get(c, 0.0) for c in candidates]
        lo, hi = min(vals), max(vals)
        if hi == lo:
            return {c: 0.5 for c in candidates}
        return {c: (raw.get(c, 0.0) - lo) / (hi - lo) for c in candidates}

    rn = normalized(rrf_scores)
    pn = normalized(ppr_doc_scores)
    combined = {c: weight * rn[c] + (1.0 - weight) * pn[c] for c in candidates}

    first_rank = {pid: r for r, (pid, _) in enumerate(rrf_list.items, start=1)}
    big = len(candidates) + 1
    items = sorted(
        combined.items(), key=lambda kv: (-kv[1], first_rank.get(kv[0], big), kv[0])
    )
    return RankedList(items=items)


def load_external_scores(path: str) -> dict[tuple[str, str], float]:
    """Scores from a JSONL file of {"query_id", "passage_id", "score"} lines."""
    out: dict[tuple[str, str], float] = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                out[(str(obj["query_id"]), str(obj["passage_id"]))] = float(obj["score"])
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"{path}:{lineno}: bad score line: {exc}") from exc
    return out


def external_rerank(
    candidates: RankedList,
    scores: dict[tuple[str, str], float],
    query_id: str,
    top_n: int = 100,
) -> RankedList:
    """Reorder the top_n candidates by externally supplied scores.

    Scored candidates sort by score descending (stable on the original
    order); unscored ones keep their original relative position below all
    scored pairs.  Candidates beyond top_n keep the tail order untouched.
    """
    head = candidates.items[:top_n]
    tail = candidates.items[top_n:]
    scored = [(pid, s) for pid, s in head if (query_id, pid) in scores]
    unscored = [(pid, s) for pid, s in head if (query_id, pid) not in scores]
    scored.sort(key=lambda it: -scores[(query_id, it[0])])
    reordered = [(pid, scores[(query_id, pid)]) for pid, _ in scored]
    reordered += unscored + tail
    return RankedList(
        items=reordered,
        seed_seconds=candidates.seed_seconds,
        traversal_seconds=candidates.traversal_seconds,
        total_seconds=candidates.total_seconds,
    )
