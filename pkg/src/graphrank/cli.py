"""Configuration-driven command line: index, eval, ablate, bench, stats,
significance."""

from __future__ import annotations

import argparse
import hashlib
import itertools
import json
import logging
import os
import random
import sys
import time

import numpy as np

from . import evaluation, lexical, pipelines, ppr
from .config import (
    METHODS,
    ConfigError,
    apply_overrides,
    config_fingerprint,
    load_config,
    seed_k_for,
)
from .corpus import generate_synthetic
from .graph import graph_stats, load_graph, save_graph
from .ppr import SeedVector, available_backends

logger = logging.getLogger("graphrank")

GRAPH_FILE = "graph.bin"
INDEX_FILE = "inverted_index.json"
MANIFEST_FILE = "manifest.json"


def _sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _save_inverted_index(path: str, index: lexical.InvertedIndex) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(
            {
                "postings": {t: p for t, p in sorted(index.postings.items())},
                "doc_lengths": index.doc_lengths,
                "avgdl": index.avgdl,
                "N": index.N,
                "doc_ids": index.doc_ids,
            },
            f,
        )


def _load_inverted_index(path: str) -> lexical.InvertedIndex:
    with open(path, encoding="utf-8") as f:
        obj = json.load(f)
    return lexical.InvertedIndex(
        postings={t: [(int(d), int(tf)) for d, tf in p] for t, p in obj["postings"].items()},
        doc_lengths=obj["doc_lengths"],
        avgdl=obj["avgdl"],
        N=obj["N"],
        doc_ids=obj["doc_ids"],
    )


def cmd_index(cfg: dict) -> int:
    out = cfg["out_dir"]
    os.makedirs(out, exist_ok=True)
    corpus, queries = pipelines.load_dataset(cfg)
    logger.info("loaded %d passages, %d queries", len(corpus), len(queries))

    files: dict[str, str] = {}
    t0 = time.perf_counter()

    index = lexical.build_index(corpus)
    index_path = os.path.join(out, INDEX_FILE)
    _save_inverted_index(index_path, index)
    files[INDEX_FILE] = _sha256(index_path)

    if cfg["method"] in pipelines.GRAPH_METHODS or cfg["method"] == "tfidf_graph":
        g = pipelines.build_graph_for(cfg, corpus)
        graph_path = os.path.join(out, GRAPH_FILE)
        save_graph(graph_path, g)
        files[GRAPH_FILE] = _sha256(graph_path)
        s = graph_stats(g)
        logger.info(
            "graph: %d nodes, %d edges, p95 degree entity=%d doc=%d",
            s.nodes, s.edges, s.p95_entity_degree, s.p95_doc_degree,
        )

    if cfg["method"] in pipelines.DENSE_METHODS:
        v = cfg["vectors"]
        for key in ("passages_path", "queries_path"):
            path = v.get(key)
            if not path or not os.path.exists(path):
                raise FileNotFoundError(
                    f"method {cfg['method']!r} needs vectors.{key} (got {path!r})"
                )
            files[f"vectors:{key}"] = _sha256(path)

    manifest = {
        "config_hash": config_fingerprint(cfg),
        "method": cfg["method"],
        "index_seconds": round(time.perf_counter() - t0, 6),
        "files": files,
    }
    with open(os.path.join(out, MANIFEST_FILE), "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
    print(f"indexed -> {out} (config {manifest['config_hash']})")
    return 0


def _artifacts_for_eval(cfg: dict) -> tuple[pipelines.Artifacts, dict]:
    out = cfg["out_dir"]
    manifest_path = os.path.join(out, MANIFEST_FILE)
    if not os.path.exists(manifest_path):
        raise FileNotFoundError(f"no artifacts in {out!r}; run `graphrank index` first")
    with open(manifest_path, encoding="utf-8") as f:
        manifest = json.load(f)

    corpus, queries = pipelines.load_dataset(cfg)
    graph = None
    graph_path = os.path.join(out, GRAPH_FILE)
    if (cfg["method"] in pipelines.GRAPH_METHODS or cfg["method"] == "tfidf_graph"):
        if not os.path.exists(graph_path):
            raise FileNotFoundError(
                f"{graph_path} missing; re-run `graphrank index` with a graph method"
            )
        graph = load_graph(graph_path)
    art = pipelines.prepare_artifacts(cfg, corpus, queries, graph=graph)
    index_path = os.path.join(out, INDEX_FILE)
    if os.path.exists(index_path):
        art.index = _load_inverted_index(index_path)
    return art, manifest


def cmd_eval(cfg: dict) -> int:
    out = cfg["out_dir"]
    os.makedirs(out, exist_ok=True)
    art, _ = _artifacts_for_eval(cfg)

    output = pipelines.run_all(cfg, art)
    qs = art.queries[: int(cfg["queries_limit"])] if cfg["queries_limit"] else art.queries
    report = evaluation.compute_metrics(output.run, qs, ks=tuple(cfg["eval"]["ks"]))
    report.fallback_rate = output.fallback_count / len(qs) if qs else 0.0
    report.config_hash = config_fingerprint(cfg)

    row = evaluation.report_row(cfg["method"], report)
    evaluation.write_report_tsv(os.path.join(out, "report.tsv"), [row])
    evaluation.write_metrics_jsonl(os.path.join(out, "metrics.jsonl"), report)
    evaluation.write_predictions_jsonl(os.path.join(out, "predictions.jsonl"), output.run)

    print("\t".join(evaluation.REPORT_COLUMNS))
    print(row)
    print(
        f"fallback_rate={report.fallback_rate:.4f} "
        f"empty_gold={report.n_empty_gold} "
        f"mean_edge_traversals={output.mean_traversals:.0f} "
        f"peak_rss_mb={_peak_rss_mb():.0f}"
    )
    return 0


def _peak_rss_mb() -> float:
    """Peak resident set size; informational only (platform-dependent units)."""
    try:
        import resource

        kb = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss
        return kb / 1024.0  # Linux reports KiB
    except (ImportError, OSError):  # pragma: no cover
        return 0.0


def cmd_ablate(cfg: dict) -> int:
    out = cfg["out_dir"]
    os.makedirs(out, exist_ok=True)
    grid: dict = cfg["ablate"]["grid"]
    if not grid:
        raise ConfigError("ablate.grid is empty; nothing to sweep")

    corpus, queries = pipelines.load_dataset(cfg)
    size = min(int(cfg["ablate"]["subset_size"]), len(queries))
    rng = random.Random(int(cfg["ablate"]["subset_seed"]))
    subset = rng.sample(queries, size) if size < len(queries) else list(queries)

    keys = sorted(grid)
    rows: list[tuple[float, str]] = []
    header = ["NER", "k", "alpha", "it", "R@5", "R@10", "MRR", "QTime"]
    for combo in itertools.product(*(grid[k] for k in keys)):
        cell_cfg = apply_overrides(cfg, dict(zip(keys, combo)))
        art = pipelines.prepare_artifacts(cell_cfg, corpus, queries)
        output = pipelines.run_all(cell_cfg, art, queries=subset)
        report = evaluation.compute_metrics(output.run, subset, ks=tuple(cfg["eval"]["ks"]))
        a = report.aggregates
        row = "\t".join(
            [
                cell_cfg["ner"]["mode"],
                str(seed_k_for(cell_cfg)),
                f"{cell_cfg['ppr']['alpha']:.2f}",
                str(cell_cfg["ppr"]["max_iter"]),
                f"{a.get('recall@5', 0.0):.3f}",
                f"{a.get('recall@10', 0.0):.3f}",
                f"{a.get('mrr', 0.0):.3f}",
                f"{a.get('qtime_total', 0.0):.1f}",
            ]
        )
        rows.append((a.get("recall@10", 0.0), row))

    rows.sort(key=lambda r: -r[0])
    table_path = os.path.join(out, "ablate.tsv")
    with open(table_path, "w", encoding="utf-8") as f:
        f.write("\t".join(header) + "\n")
        for _, row in rows:
            f.write(row + "\n")
    print("\t".join(header))
    for _, row in rows:
        print(row)
    return 0


def _run_label(pred_path: str) -> str:
    """Human label for a predictions file; the run directory usually names the method."""
    stem = os.path.splitext(os.path.basename(pred_path))[0]
    if stem != "predictions":
        return stem
    parent = os.path.basename(os.path.dirname(os.path.abspath(pred_path)))
    return parent or stem


def cmd_significance(cfg: dict, pred_a: str, pred_b: str) -> int:
    corpus, queries = pipelines.load_dataset(cfg)
    a = evaluation.load_predictions_jsonl(pred_a)
    b = evaluation.load_predictions_jsonl(pred_b)
    va = evaluation.recall_at_k_vector(a, queries, k=10)
    vb = evaluation.recall_at_k_vector(b, queries, k=10)
    res = evaluation.paired_bootstrap(va, vb, rng_seed=int(cfg["rng_seed"]))

    name_a = _run_label(pred_a)
    name_b = _run_label(pred_b)
    header = ["Method", "Delta", "CI95", "W/T/L"]
    row = "\t".join(
        [
            f"{name_a} vs {name_b}",
            f"{res.delta_mean:.4f}",
            f"[{res.ci_low:.4f}, {res.ci_high:.4f}]",
            f"{res.wins}/{res.ties}/{res.losses}",
        ]
    )
    out = cfg["out_dir"]
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, "significance.tsv"), "w", encoding="utf-8") as f:
        f.write("\t".join(header) + "\n" + row + "\n")
    print("\t".join(header))
    print(row)
    return 0


def cmd_stats(cfg: dict) -> int:
    out = cfg["out_dir"]
    graph_path = os.path.join(out, GRAPH_FILE)
    if os.path.exists(graph_path):
        g = load_graph(graph_path)
        s = graph_stats(g)
        print("Nodes\tEdges\tDeg_p95(E)\tDeg_p95(D)")
        print(f"{s.nodes}\t{s.edges}\t{s.p95_entity_degree}\t{s.p95_doc_degree}")
    else:
        print(f"(no graph artifact at {graph_path})")

    metrics_path = os.path.join(out, "metrics.jsonl")
    if os.path.exists(metrics_path):
        totals = []
        with open(metrics_path, encoding="utf-8") as f:
            for line in f:
                if line.strip():
                    totals.append(json.loads(line)["total_s"])
        if totals:
            pct = evaluation.latency_stats(totals)
            print("p50\tp95\tp99")
            print(f"{pct['p50']:.6f}\t{pct['p95']:.6f}\t{pct['p99']:.6f}")
    return 0


def _bench_kernels(n_docs: int, rng_seed: int) -> list[str]:
    """Time power/push once per backend on one synthetic graph; check agreement."""
    from .entities import mentions_for_passage
    from .graph import build_entity_graph

    corpus, _ = generate_synthetic(n_docs=n_docs, n_entities=n_docs, hops=2, rng_seed=rng_seed)
    ner = [mentions_for_passage(p.text, d) for d, p in enumerate(corpus.passages)]
    g = build_entity_graph(corpus, ner)
    seed = SeedVector.from_masses([0], [1.0])

    rows = []
    results = {}
    for name, mod in available_backends().items():
        t0 = time.perf_counter()
        reps = 20
        for _ in range(reps):
            scores, _, trav = mod.power_iterate(
                g.fwd_indptr, g.fwd_indices, g.fwd_data, seed.indices, seed.values, 0.15, 5
            )
        power_ms = (time.perf_counter() - t0) / reps * 1000
        t0 = time.perf_counter()
        for _ in range(reps):
            p, res, pushes, _ = mod.push_sweep(
                g.fwd_indptr, g.fwd_indices, g.fwd_data, seed.indices, seed.values,
                0.15, 1e-6, ppr.MAX_PUSHES,
            )
        push_ms = (time.perf_counter() - t0) / reps * 1000
        results[name] = (scores, p)
        rows.append(f"{name}\t{g.n_edges}\t{power_ms:.3f}\t{push_ms:.3f}")

    if len(results) == 2:
        a, b = results["python"], results["compiled"]
        dp = float(np.abs(a[0] - b[0]).sum())
        du = float(np.abs(a[1] - b[1]).sum())
        rows.append(f"# backend agreement: power L1 diff {dp:.2e}, push L1 diff {du:.2e}")
    return rows


def cmd_bench(cfg: dict, sizes: list[int] | None, kernel_docs: int) -> int:
    out = cfg["out_dir"]
    os.makedirs(out, exist_ok=True)
    lines = ["backend\tedges\tpower_ms\tpush_ms"]
    lines += _bench_kernels(kernel_docs, int(cfg["rng_seed"]))
    for line in lines:
        print(line)

    if sizes:
        report = evaluation.scaling_sweep(
            sizes, evaluation.synthetic_index_fn(rng_seed=int(cfg["rng_seed"])), trials=1
        )
        lines.append("size\tindex_s\tms_per_doc")
        print("size\tindex_s\tms_per_doc")
        for r in report.rows:
            row = f"{r.size}\t{r.index_seconds:.4f}\t{r.ms_per_doc:.4f}"
            lines.append(row)
            print(row)
        lines.append(f"# linear fit R^2 = {report.r_squared:.4f}")
        print(f"# linear fit R^2 = {report.r_squared:.4f}")

    with open(os.path.join(out, "bench.tsv"), "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="graphrank",
        description="Entity-graph retrieval with seeded random walks, plus baselines",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="path to the JSON run config")
        p.add_argument("--method", help="override config method id")
        p.add_argument("--out", help="override config out_dir")
        p.add_argument("--queries-limit", type=int, help="evaluate only the first N queries")
        p.add_argument("--seed", type=int, help="override config rng_seed")

    p = sub.add_parser("index", help="build and persist index artifacts")
    common(p)
    p = sub.add_parser("eval", help="run the configured method and write reports")
    common(p)
    p = sub.add_parser("ablate", help="sweep the config grid on a fixed query subset")
    common(p)
    p = sub.add_parser("stats", help="print graph statistics and latency percentiles")
    common(p)
    p = sub.add_parser("bench", help="benchmark kernel backends and index scaling")
    common(p)
    p.add_argument("--sizes", help="comma-separated corpus sizes for the scaling sweep")
    p.add_argument("--kernel-docs", type=int, default=2000, help="synthetic corpus size for kernel timing")
    p = sub.add_parser("significance", help="paired bootstrap between two prediction files")
    common(p)
    p.add_argument("--pred-a", required=True)
    p.add_argument("--pred-b", required=True)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.method:
            if args.method not in METHODS:
                raise ConfigError(f"unknown method id: {args.method!r}")
            cfg = apply_overrides(cfg, {"method": args.method})
        if args.out:
            cfg = apply_overrides(cfg, {"out_dir": args.out})
        if args.queries_limit is not None:
            cfg = apply_overrides(cfg, {"queries_limit": args.queries_limit})
        if args.seed is not None:
            cfg = apply_overrides(cfg, {"rng_seed": args.seed})

        if args.command == "index":
            return cmd_index(cfg)
        if args.command == "eval":
            return cmd_eval(cfg)
        if args.command == "ablate":
            return cmd_ablate(cfg)
        if args.command == "stats":
            return cmd_stats(cfg)
        if args.command == "bench":
            sizes = [int(s) for s in args.sizes.split(",")] if args.sizes else None
            return cmd_bench(cfg, sizes, args.kernel_docs)
        if args.command == "significance":
            return cmd_significance(cfg, args.pred_a, args.pred_b)
        raise ConfigError(f"unknown command {args.command!r}")
    except (ConfigError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
