"""Retrieval metrics, paired bootstrap significance, latency percentiles,
and the index-scaling sweep."""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .corpus import Query, generate_synthetic
from .ranking import RankedList


@dataclass
class QueryMetrics:
    query_id: str
    recall: dict[int, float]
    hit: dict[int, float]
    reciprocal_rank: float
    seed_seconds: float = 0.0
    traversal_seconds: float = 0.0
    total_seconds: float = 0.0
    has_gold: bool = True


@dataclass
class EvalReport:
    per_query: list[QueryMetrics]
    aggregates: dict[str, float]
    fallback_rate: float = 0.0
    config_hash: str = ""
    n_empty_gold: int = 0

    def aggregate(self, name: str) -> float:
        return self.aggregates[name]


def compute_metrics(
    run: dict[str, RankedList], queries: list[Query], ks: tuple[int, ...] = (5, 10)
) -> EvalReport:
    """Recall@K, Hit@K, and reciprocal rank per query, plus arithmetic means.

    Queries missing from the run count as empty rankings.  Queries with no
    gold labels are kept in the per-query rows (flagged) but excluded from
    the aggregate means.
    """
    per_query: list[QueryMetrics] = []
    for q in queries:
        ranked = run.get(q.id, RankedList())
        ids = ranked.ids()
        gold = q.gold_ids
        recall: dict[int, float] = {}
        hit: dict[int, float] = {}
        for k in ks:
            inter = len(set(ids[:k]) & gold)
            recall[k] = inter / len(gold) if gold else 0.0
            hit[k] = 1.0 if inter > 0 else 0.0
        rr = 0.0
        for rank, pid in enumerate(ids, start=1):
            if pid in gold:
                rr = 1.0 / rank
                break
        per_query.append(
            QueryMetrics(
                query_id=q.id,
                recall=recall,
                hit=hit,
                reciprocal_rank=rr,
                seed_seconds=ranked.seed_seconds,
                traversal_seconds=ranked.traversal_seconds,
                total_seconds=ranked.total_seconds,
                has_gold=bool(gold),
            )
        )

    scored = [m for m in per_query if m.has_gold]
    n = len(scored)
    aggregates: dict[str, float] = {}
    for k in ks:
        aggregates[f"recall@{k}"] = sum(m.recall[k] for m in scored) / n if n else 0.0
        aggregates[f"hit@{k}"] = sum(m.hit[k] for m in scored) / n if n else 0.0
    aggregates["mrr"] = sum(m.reciprocal_rank for m in scored) / n if n else 0.0
    aggregates["qtime_total"] = sum(m.total_seconds for m in per_query)

    return EvalReport(
        per_query=per_query,
        aggregates=aggregates,
        n_empty_gold=len(per_query) - n,
    )


@dataclass
class BootstrapResult:
    delta_mean: float
    ci_low: float
    ci_high: float
    wins: int
    ties: int
    losses: int
    resamples: int
    rng_seed: int


def paired_bootstrap(
    run_a: dict[str, float],
    run_b: dict[str, float],
    resamples: int = 10000,
    confidence: float = 0.95,
    rng_seed: int = 0,
) -> BootstrapResult:
    """Percentile-interval bootstrap over per-query metric differences.

    Both runs must cover the identical query id set; mismatches are an
    error, never silently intersected.  Wins/ties/losses count the raw
    per-query deltas.
    """
    if set(run_a) != set(run_b):
        only_a = sorted(set(run_a) - set(run_b))[:5]
        only_b = sorted(set(run_b) - set(run_a))[:5]
        raise ValueError(
            f"query sets differ (only in a: {only_a}, only in b: {only_b})"
        )
    qids = sorted(run_a)
    delta = np.array([run_a[q] - run_b[q] for q in qids], dtype=np.float64)
    n = len(delta)
    if n == 0:
        raise ValueError("empty runs")

    rng = np.random.default_rng(rng_seed)
    means = np.empty(resamples, dtype=np.float64)
    chunk = 256  # fixed so results are bit-reproducible for a given seed
    done = 0
    while done < resamples:
        take = min(chunk, resamples - done)
        idx = rng.integers(0, n, size=(take, n))
        means[done: done + take] = delta[idx].mean(axis=1)
        done += take

    tail = (1.0 - confidence) / 2.0 * 100.0
    ci_low, ci_high = np.percentile(means, [tail, 100.0 - tail])
    return BootstrapResult(
        delta_mean=float(delta.mean()),
        ci_low=float(ci_low),
        ci_high=float(ci_high),
        wins=int((delta > 0).sum()),
        ties=int((delta == 0).sum()),
        losses=int((delta < 0).sum()),
        resamples=resamples,
        rng_seed=rng_seed,
    )


def latency_stats(samples: list[float]) -> dict[str, float]:
    """Nearest-rank p50/p95/p99 of per-query seconds."""
    if not samples:
        raise ValueError("latency_stats needs at least one sample")
    ordered = sorted(samples)
    n = len(ordered)

    def nearest(pct: float) -> float:
        return ordered[max(math.ceil(pct / 100.0 * n), 1) - 1]

    return {"p50": nearest(50), "p95": nearest(95), "p99": nearest(99)}


@dataclass
class ScalingRow:
    size: int
    index_seconds: float
    query_seconds: float
    ms_per_doc: float


@dataclass
class ScalingReport:
    rows: list[ScalingRow]
    r_squared: float
    per_doc_band: tuple[float, float] = field(default=(0.0, 0.0))


def scaling_sweep(
    sizes: list[int],
    index_fn,
    query_fn=None,
    trials: int = 1,
) -> ScalingReport:
    """Time ``index_fn(size)`` per corpus size and fit index time vs size.

    ``index_fn`` builds the index for a given size and returns an artifact;
    ``query_fn(artifact)``, when given, is timed once per size.  Per-size
    times are means over ``trials`` runs.  Returns rows plus the linear-fit
    R-squared of index seconds against size.
    """
    if len(sizes) < 2:
        raise ValueError("need at least two sizes for the linear fit")
    rows: list[ScalingRow] = []
    for size in sizes:
        elapsed = []
        artifact = None
        for _ in range(trials):
            t0 = time.perf_counter()
            artifact = index_fn(size)
            elapsed.append(time.perf_counter() - t0)
        index_seconds = sum(elapsed) / len(elapsed)
        query_seconds = 0.0
        if query_fn is not None:
            t0 = time.perf_counter()
            query_fn(artifact)
            query_seconds = time.perf_counter() - t0
        rows.append(
            ScalingRow(
                size=size,
                index_seconds=index_seconds,
                query_seconds=query_seconds,
                ms_per_doc=index_seconds / size * 1000.0,
            )
        )

    xs = np.array([r.size for r in rows], dtype=np.float64)
    ys = np.array([r.index_seconds for r in rows], dtype=np.float64)
    slope, intercept = np.polyfit(xs, ys, 1)
    pred = slope * xs + intercept
    ss_res = float(((ys - pred) ** 2).sum())
    ss_tot = float(((ys - ys.mean()) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    per_doc = [r.ms_per_doc for r in rows]
    return ScalingReport(rows=rows, r_squared=r2, per_doc_band=(min(per_doc), max(per_doc)))


def synthetic_index_fn(hops: int = 2, rng_seed: int = 7):
    """index_fn for scaling_sweep over generated corpora of constant density."""
    from .entities import mentions_for_passage
    from .graph import build_entity_graph

    def build(size: int):
        corpus, _ = generate_synthetic(
            n_docs=size, n_entities=max(size, 4), hops=hops, rng_seed=rng_seed
        )
        ner = [
            mentions_for_passage(p.text, d, mode="simple")
            for d, p in enumerate(corpus.passages)
        ]
        return build_entity_graph(corpus, ner)

    return build


# ---------------------------------------------------------------------------
# Report emission
# ---------------------------------------------------------------------------

REPORT_COLUMNS = ("Method", "R@5", "R@10", "Hit@10", "MRR", "QTime")


def report_row(method: str, report: EvalReport) -> str:
    a = report.aggregates
    return "\t".join(
        [
            method,
            f"{a.get('recall@5', 0.0):.3f}",
            f"{a.get('recall@10', 0.0):.3f}",
            f"{a.get('hit@10', 0.0):.3f}",
            f"{a.get('mrr', 0.0):.3f}",
            f"{a.get('qtime_total', 0.0):.1f}",
        ]
    )


def write_report_tsv(path: str, rows: list[str]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write("\t".join(REPORT_COLUMNS) + "\n")
        for row in rows:
            f.write(row + "\n")


def write_metrics_jsonl(path: str, report: EvalReport) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for m in report.per_query:
            f.write(
                json.dumps(
                    {
                        "query_id": m.query_id,
                        **{f"recall@{k}": v for k, v in m.recall.items()},
                        **{f"hit@{k}": v for k, v in m.hit.items()},
                        "reciprocal_rank": m.reciprocal_rank,
                        "seed_s": m.seed_seconds,
                        "traversal_s": m.traversal_seconds,
                        "total_s": m.total_seconds,
                        "has_gold": m.has_gold,
                    }
                )
                + "\n"
            )


def write_predictions_jsonl(path: str, run: dict[str, RankedList]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for qid in run:
            f.write(json.dumps({"query_id": qid, "ranked_ids": run[qid].ids()}) + "\n")


def load_predictions_jsonl(path: str) -> dict[str, list[str]]:
    out: dict[str, list[str]] = {}
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            out[str(obj["query_id"])] = [str(x) for x in obj["ranked_ids"]]
    return out


def recall_at_k_vector(
    predictions: dict[str, list[str]], queries: list[Query], k: int = 10
) -> dict[str, float]:
    """Per-query Recall@K for bootstrap comparisons; empty-gold queries skipped."""
    out: dict[str, float] = {}
    for q in queries:
        if not q.gold_ids:
            continue
        ids = predictions.get(q.id, [])[:k]
        out[q.id] = len(set(ids) & q.gold_ids) / len(q.gold_ids)
    return out
