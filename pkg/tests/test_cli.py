import json
import os

import pytest

from graphrank.cli import main


def write_config(tmp_path, out_name="out", **overrides):
    cfg = {
        "dataset": {
            "synthetic": {"n_docs": 120, "n_entities": 100, "hops": 2, "rng_seed": 5}
        },
        "method": "graph_hybrid",
        "ppr": {"mode": "power"},
        "out_dir": str(tmp_path / out_name),
    }
    cfg.update(overrides)
    path = tmp_path / f"{out_name}.json"
    path.write_text(json.dumps(cfg))
    return str(path), cfg["out_dir"]


class TestIndex:
    def test_index_twice_identical_fingerprints(self, tmp_path):
        cfg_path, out = write_config(tmp_path)
        assert main(["index", "--config", cfg_path]) == 0
        m1 = json.load(open(os.path.join(out, "manifest.json")))
        assert main(["index", "--config", cfg_path]) == 0
        m2 = json.load(open(os.path.join(out, "manifest.json")))
        assert m1["files"] == m2["files"]
        assert m1["config_hash"] == m2["config_hash"]

    def test_tfidf_graph_indexes_term_graph(self, tmp_path):
        from graphrank.graph import load_graph

        cfg_path, out = write_config(tmp_path, method="tfidf_graph")
        assert main(["index", "--config", cfg_path]) == 0
        g = load_graph(os.path.join(out, "graph.bin"))
        assert g.kind == "term"

    def test_graph_dense_missing_vectors_errors(self, tmp_path):
        cfg_path, _ = write_config(tmp_path, method="graph_dense")
        assert main(["index", "--config", cfg_path]) != 0


class TestEval:
    def test_eval_requires_index(self, tmp_path):
        cfg_path, _ = write_config(tmp_path)
        assert main(["eval", "--config", cfg_path]) != 0

    def test_predictions_line_count_equals_queries(self, tmp_path):
        cfg_path, out = write_config(tmp_path)
        assert main(["index", "--config", cfg_path]) == 0
        assert main(["eval", "--config", cfg_path]) == 0
        with open(os.path.join(out, "predictions.jsonl")) as f:
            n_lines = sum(1 for _ in f)
        # 120 docs / (2*2 per chain) = 30 planted queries
        assert n_lines == 30

    def test_identical_config_identical_predictions(self, tmp_path):
        cfg_path, out = write_config(tmp_path)
        main(["index", "--config", cfg_path])
        main(["eval", "--config", cfg_path])
        p1 = open(os.path.join(out, "predictions.jsonl")).read()
        main(["eval", "--config", cfg_path])
        p2 = open(os.path.join(out, "predictions.jsonl")).read()
        assert p1 == p2

    def test_queries_limit(self, tmp_path):
        cfg_path, out = write_config(tmp_path)
        main(["index", "--config", cfg_path])
        assert main(["eval", "--config", cfg_path, "--queries-limit", "7"]) == 0
        with open(os.path.join(out, "predictions.jsonl")) as f:
            assert sum(1 for _ in f) == 7

    def test_report_columns(self, tmp_path, capsys):
        cfg_path, out = write_config(tmp_path)
        main(["index", "--config", cfg_path])
        main(["eval", "--config", cfg_path])
        header = open(os.path.join(out, "report.tsv")).readline().strip().split("\t")
        assert header == ["Method", "R@5", "R@10", "Hit@10", "MRR", "QTime"]

    def test_unknown_method_rejected(self, tmp_path):
        cfg_path, _ = write_config(tmp_path)
        assert main(["eval", "--config", cfg_path, "--method", "sorcery"]) == 2


class TestSignificance:
    def make_predictions(self, tmp_path):
        cfg_path, out = write_config(tmp_path, out_name="runA")
        main(["index", "--config", cfg_path])
        main(["eval", "--config", cfg_path])
        cfg_path_b, out_b = write_config(tmp_path, out_name="runB", method="bm25")
        main(["index", "--config", cfg_path_b])
        main(["eval", "--config", cfg_path_b])
        return cfg_path, os.path.join(out, "predictions.jsonl"), os.path.join(out_b, "predictions.jsonl")

    def test_same_file_delta_zero(self, tmp_path, capsys):
        cfg_path, pa, _ = self.make_predictions(tmp_path)
        assert main(["significance", "--config", cfg_path, "--pred-a", pa, "--pred-b", pa]) == 0
        out = capsys.readouterr().out
        row = out.strip().splitlines()[-1].split("\t")
        assert float(row[1]) == 0.0
        wins, ties, losses = map(int, row[3].split("/"))
        assert wins == 0 and losses == 0 and ties == 30

    def test_swap_negates_delta(self, tmp_path, capsys):
        cfg_path, pa, pb = self.make_predictions(tmp_path)
        main(["significance", "--config", cfg_path, "--pred-a", pa, "--pred-b", pb])
        row_ab = capsys.readouterr().out.strip().splitlines()[-1].split("\t")
        main(["significance", "--config", cfg_path, "--pred-a", pb, "--pred-b", pa])
        row_ba = capsys.readouterr().out.strip().splitlines()[-1].split("\t")
        assert float(row_ab[1]) == pytest.approx(-float(row_ba[1]))
        wtl_ab = row_ab[3].split("/")
        wtl_ba = row_ba[3].split("/")
        assert wtl_ab[0] == wtl_ba[2] and wtl_ab[2] == wtl_ba[0]


class TestAblate:
    def test_single_cell_matches_eval(self, tmp_path, capsys):
        cfg_path, out = write_config(
            tmp_path,
            ablate={"subset_size": 1000, "subset_seed": 0, "grid": {"ppr.alpha": [0.15]}},
        )
        # subset_size > query count -> full set, comparable to cmd_eval
        assert main(["ablate", "--config", cfg_path]) == 0
        table = open(os.path.join(out, "ablate.tsv")).read().strip().splitlines()
        assert len(table) == 2  # header + one cell
        cell = dict(zip(table[0].split("\t"), table[1].split("\t")))

        main(["index", "--config", cfg_path])
        main(["eval", "--config", cfg_path])
        report = open(os.path.join(out, "report.tsv")).read().strip().splitlines()
        rep = dict(zip(report[0].split("\t"), report[1].split("\t")))
        assert cell["R@10"] == rep["R@10"]
        assert cell["R@5"] == rep["R@5"]
        assert cell["MRR"] == rep["MRR"]

    def test_grid_sorted_by_recall(self, tmp_path):
        cfg_path, out = write_config(
            tmp_path,
            ablate={
                "subset_size": 10,
                "subset_seed": 3,
                "grid": {"ppr.alpha": [0.1, 0.2], "ppr.max_iter": [2, 5]},
            },
        )
        assert main(["ablate", "--config", cfg_path]) == 0
        lines = open(os.path.join(out, "ablate.tsv")).read().strip().splitlines()
        assert len(lines) == 5  # header + 4 cells
        recalls = [float(line.split("\t")[5]) for line in lines[1:]]
        assert recalls == sorted(recalls, reverse=True)

    def test_empty_grid_rejected(self, tmp_path):
        cfg_path, _ = write_config(tmp_path)
        assert main(["ablate", "--config", cfg_path]) == 2


class TestStatsAndBench:
    def test_stats_prints_graph_table(self, tmp_path, capsys):
        cfg_path, out = write_config(tmp_path)
        main(["index", "--config", cfg_path])
        main(["eval", "--config", cfg_path])
        capsys.readouterr()
        assert main(["stats", "--config", cfg_path]) == 0
        out_text = capsys.readouterr().out
        assert "Nodes" in out_text and "p50" in out_text

    def test_bench_kernel_table(self, tmp_path, capsys):
        cfg_path, out = write_config(tmp_path)
        assert main(["bench", "--config", cfg_path, "--kernel-docs", "200"]) == 0
        out_text = capsys.readouterr().out
        assert "backend" in out_text
        assert "python" in out_text
        assert os.path.exists(os.path.join(out, "bench.tsv"))

    def test_bench_scaling_sweep(self, tmp_path, capsys):
        cfg_path, out = write_config(tmp_path)
        assert main(
            ["bench", "--config", cfg_path, "--kernel-docs", "100", "--sizes", "200,400"]
        ) == 0
        out_text = capsys.readouterr().out
        assert "linear fit R^2" in out_text


def test_unknown_config_key_rejected(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"surprise": 1}))
    assert main(["eval", "--config", str(path)]) == 2
