import numpy as np
import pytest

from graphrank import evaluation, pipelines
from graphrank.corpus import Query


def run_report(cfg, corpus, queries, subset=None):
    art = pipelines.prepare_artifacts(cfg, corpus, queries)
    out = pipelines.run_all(cfg, art, queries=subset)
    rep = evaluation.compute_metrics(out.run, subset or queries)
    return out, rep


class TestMethods:
    def test_every_query_gets_results(self, synthetic_cfg):
        for method in ("bm25", "rm3", "bm25_2step", "graph", "graph_hybrid", "tfidf_graph"):
            cfg, corpus, queries = synthetic_cfg(method)
            out, rep = run_report(cfg, corpus, queries)
            assert len(out.run) == len(queries)

    def test_dense_methods(self, synthetic_cfg):
        for method in ("dense", "rrf", "graph_dense", "graph_rrf", "rrf_ppr_fusion"):
            cfg, corpus, queries = synthetic_cfg(method)
            out, rep = run_report(cfg, corpus, queries)
            assert len(out.run) == len(queries)
            assert all(len(r) > 0 for r in out.run.values())

    def test_hybrid_beats_bm25_on_planted_chains(self, synthetic_cfg):
        cfg_b, corpus, queries = synthetic_cfg("bm25")
        _, rep_b = run_report(cfg_b, corpus, queries)
        cfg_h, _, _ = synthetic_cfg("graph_hybrid")
        _, rep_h = run_report(cfg_h, corpus, queries)
        assert rep_h.aggregates["recall@10"] > rep_b.aggregates["recall@10"]

    def test_graph_no_entities_uniform_fallback_nonempty(self, synthetic_cfg):
        cfg, corpus, queries = synthetic_cfg("graph")
        art = pipelines.prepare_artifacts(cfg, corpus, queries)
        no_entity = Query(id="qx", question="nothing capitalized at all", gold_ids=frozenset())
        res = pipelines.run_query(cfg, art, no_entity)
        assert res.fallback_used
        assert len(res.ranked) > 0

    def test_fallback_rate_counts_empty_seed_queries(self, synthetic_cfg):
        cfg, corpus, queries = synthetic_cfg("graph")
        art = pipelines.prepare_artifacts(cfg, corpus, queries)
        blanks = [
            Query(id=f"b{i}", question="no caps here", gold_ids=frozenset()) for i in range(3)
        ]
        out = pipelines.run_all(cfg, art, queries=list(queries[:5]) + blanks)
        assert out.fallback_count == 3

    def test_graph_rrf_seed_time_recorded_separately(self, synthetic_cfg):
        cfg, corpus, queries = synthetic_cfg("graph_rrf")
        art = pipelines.prepare_artifacts(cfg, corpus, queries)
        res = pipelines.run_query(cfg, art, queries[0])
        assert res.ranked.seed_seconds > 0
        assert res.ranked.traversal_seconds > 0
        assert res.ranked.total_seconds >= res.ranked.seed_seconds

    def test_graph_dense_missing_vectors_fails_before_queries(self, synthetic_cfg):
        cfg, corpus, queries = synthetic_cfg("graph_hybrid")
        cfg["method"] = "graph_dense"  # no vector paths configured
        with pytest.raises(ValueError, match="vectors"):
            pipelines.prepare_artifacts(cfg, corpus, queries)

    def test_vector_store_reordered_to_corpus(self, synthetic_cfg, tmp_path):
        import numpy as np

        from graphrank.dense import load_vectors, write_vectors
        from graphrank.pipelines import _aligned_store

        cfg, corpus, queries = synthetic_cfg("bm25", n_docs=20, n_entities=18)
        rng = np.random.default_rng(0)
        vecs = rng.standard_normal((len(corpus), 8)).astype(np.float32)
        ids = list(corpus.passage_ids)
        perm = rng.permutation(len(ids))
        vp, ip = str(tmp_path / "s.bin"), str(tmp_path / "s.ids")
        write_vectors(vp, vecs[perm], ip, [ids[i] for i in perm])
        store = load_vectors(vp, ip)
        aligned = _aligned_store(store, corpus)
        assert aligned.ids == corpus.passage_ids
        # row i must be the normalized original vector of passage ordinal i
        norms = vecs / np.linalg.norm(vecs, axis=1, keepdims=True)
        assert np.allclose(aligned.vectors, norms, atol=1e-6)

    def test_vector_store_missing_id_errors(self, synthetic_cfg, tmp_path):
        import numpy as np

        from graphrank.dense import load_vectors, write_vectors
        from graphrank.pipelines import _aligned_store

        cfg, corpus, queries = synthetic_cfg("bm25", n_docs=10, n_entities=9)
        vecs = np.ones((3, 4), dtype=np.float32)
        vp, ip = str(tmp_path / "m.bin"), str(tmp_path / "m.ids")
        write_vectors(vp, vecs, ip, ["x1", "x2", "x3"])
        with pytest.raises(ValueError, match="missing"):
            _aligned_store(load_vectors(vp, ip), corpus)

    def test_tfidf_graph_uses_term_graph(self, synthetic_cfg):
        cfg, corpus, queries = synthetic_cfg("tfidf_graph")
        art = pipelines.prepare_artifacts(cfg, corpus, queries)
        assert art.graph.kind == "term"

    def test_push_and_power_modes_run(self, synthetic_cfg):
        for mode in ("power", "push"):
            cfg, corpus, queries = synthetic_cfg("graph_hybrid")
            cfg["ppr"]["mode"] = mode
            out, rep = run_report(cfg, corpus, queries, subset=list(queries[:10]))
            assert rep.aggregates["recall@10"] > 0

    def test_deterministic_run(self, synthetic_cfg):
        cfg, corpus, queries = synthetic_cfg("graph_hybrid")
        out1, _ = run_report(cfg, corpus, queries)
        out2, _ = run_report(cfg, corpus, queries)
        assert {q: r.ids() for q, r in out1.run.items()} == {
            q: r.ids() for q, r in out2.run.items()
        }

    def test_workers_match_serial(self, synthetic_cfg):
        cfg, corpus, queries = synthetic_cfg("graph_hybrid")
        art = pipelines.prepare_artifacts(cfg, corpus, queries)
        serial = pipelines.run_all(cfg, art)
        cfg["workers"] = 4
        threaded = pipelines.run_all(cfg, art)
        assert {q: r.ids() for q, r in serial.run.items()} == {
            q: r.ids() for q, r in threaded.run.items()
        }

    def test_rerank_method(self, synthetic_cfg, tmp_path):
        import json

        cfg, corpus, queries = synthetic_cfg("bm25")
        base_art = pipelines.prepare_artifacts(cfg, corpus, queries)
        # filler vocabulary words hit many documents
        probe = Query(id="probe", question="valley river stone", gold_ids=frozenset())
        base = pipelines.run_query(cfg, base_art, probe).ranked
        assert len(base) >= 2
        scores_path = tmp_path / "scores.jsonl"
        # reverse the top 2 of the lexical ranking for this query
        with open(scores_path, "w") as f:
            for rank, (pid, _) in enumerate(base.items[:2]):
                f.write(json.dumps({
                    "query_id": probe.id, "passage_id": pid, "score": float(rank)
                }) + "\n")
        cfg["method"] = "bm25_rerank"
        cfg["rerank"]["scores_path"] = str(scores_path)
        art = pipelines.prepare_artifacts(cfg, corpus, queries)
        out = pipelines.run_query(cfg, art, probe).ranked
        assert out.ids()[:2] == [base.items[1][0], base.items[0][0]]


class TestVariants:
    def test_all_variant_runs_and_holds_recall(self, synthetic_cfg):
        from graphrank.config import apply_variant

        cfg, corpus, queries = synthetic_cfg("graph_hybrid", n_docs=400, n_entities=360)
        subset = list(queries[:30])
        _, rep_base = run_report(cfg, corpus, queries, subset=subset)

        cfg_all = dict(cfg, variant="+ALL")
        cfg_all = apply_variant(cfg_all)
        assert cfg_all["graph"]["alias"] and cfg_all["seeds"]["mixing"] == "adaptive"
        _, rep_all = run_report(cfg_all, corpus, queries, subset=subset)
        assert rep_all.aggregates["recall@10"] >= rep_base.aggregates["recall@10"] - 0.05


class TestPruneIntegration:
    def test_prune_reduces_traversals_preserves_recall(self, synthetic_cfg):
        import copy

        cfg, corpus, queries = synthetic_cfg("graph_hybrid", n_docs=400, n_entities=360)
        subset = list(queries[:40])
        out_base, rep_base = run_report(cfg, corpus, queries, subset=subset)

        cfg_p = copy.deepcopy(cfg)
        cfg_p["graph"]["prune"] = {"hub_top_pct": 0.01, "outdegree_cap": 64}
        out_p, rep_p = run_report(cfg_p, corpus, queries, subset=subset)

        assert out_p.mean_traversals < out_base.mean_traversals
        assert abs(
            rep_p.aggregates["recall@10"] - rep_base.aggregates["recall@10"]
        ) <= 0.01
