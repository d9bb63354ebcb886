import hashlib

import numpy as np
import pytest

from graphrank import pipelines
from graphrank.config import resolve_config
from graphrank.dense import write_vectors


def pseudo_embed(texts, dim=24):
    """Deterministic stand-in embeddings: token-hash bag-of-features."""
    out = np.zeros((len(texts), dim), dtype=np.float32)
    for i, text in enumerate(texts):
        for tok in text.lower().split():
            h = int.from_bytes(hashlib.md5(tok.encode()).digest()[:4], "little")
            out[i, h % dim] += 1.0
        if not out[i].any():
            out[i, 0] = 1.0
    return out


@pytest.fixture
def synthetic_cfg(tmp_path):
    """Config over a small planted-chain corpus with vector sidecars."""

    def build(method="graph_hybrid", n_docs=120, n_entities=100, **extra):
        user = {
            "dataset": {
                "synthetic": {"n_docs": n_docs, "n_entities": n_entities, "hops": 2, "rng_seed": 5}
            },
            "method": method,
            "ppr": {"mode": "power"},
            "out_dir": str(tmp_path / "out"),
        }
        for key, value in extra.items():
            if isinstance(value, dict):
                user.setdefault(key, {}).update(value)
            else:
                user[key] = value
        cfg = resolve_config(user)
        corpus, queries = pipelines.load_dataset(cfg)

        if method in pipelines.DENSE_METHODS:
            pv = str(tmp_path / "p.vec")
            pi = str(tmp_path / "p.ids")
            qv = str(tmp_path / "q.vec")
            qi = str(tmp_path / "q.ids")
            write_vectors(pv, pseudo_embed([p.text for p in corpus.passages]), pi, corpus.passage_ids)
            write_vectors(qv, pseudo_embed([q.question for q in queries]), qi, [q.id for q in queries])
            cfg["vectors"].update(
                {
                    "passages_path": pv,
                    "passages_ids_path": pi,
                    "queries_path": qv,
                    "queries_ids_path": qi,
                }
            )
            cfg["vectors"]["ann"]["enabled"] = False
        return cfg, corpus, queries

    return build
