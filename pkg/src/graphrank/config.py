"""Run configuration: a single JSON document with strict key validation,
dataset default bundles, and dotted-key overrides for ablation grids."""

from __future__ import annotations

import copy
import hashlib
import json
from typing import Any

METHODS = (
    "bm25",
    "rm3",
    "bm25_2step",
    "dense",
    "rrf",
    "graph",
    "graph_hybrid",
    "graph_dense",
    "graph_rrf",
    "rrf_ppr_fusion",
    "tfidf_graph",
    "bm25_rerank",
    "rrf_rerank",
)

VARIANTS = ("+EL", "+PRUNE", "+MIX", "+ALL")

DEFAULT_CONFIG: dict[str, Any] = {
    "defaults": None,  # "hotpot" | "2wiki" | None
    "method": "graph_hybrid",
    "variant": None,  # one of VARIANTS, layered on top of the config
    "out_dir": "runs/latest",
    "rng_seed": 0,
    "queries_limit": None,
    "workers": 1,
    "dataset": {
        "path": None,
        "format": "generic_jsonl",
        "synthetic": None,  # {"n_docs", "n_entities", "hops", "rng_seed"}
    },
    "ner": {
        "mode": "regex",  # "regex" | "external"
        "normalization": "simple",
        "min_entity_len": 2,
        "entities_path": None,
    },
    "graph": {
        "min_entity_df": 1,
        "max_entity_df_ratio": 1.0,
        "hub_penalty": 0.5,
        "alias": False,
        "prune": {"hub_top_pct": 0.0, "outdegree_cap": None},
        "term": {"min_df": 3, "max_df_ratio": 0.1},
    },
    "ppr": {"mode": "power", "alpha": 0.15, "max_iter": 5, "epsilon": 1e-4},
    "seeds": {
        "k": None,  # resolved per method/bundle when unset
        "weighting": "rank",
        "q": 0.5,
        "mixing": "mass_proportional",
        "fallback": "uniform",
    },
    "bm25": {"k1": 1.5, "b": 0.75},
    "rm3": {"fb_docs": 10, "fb_terms": 10, "lambda": 0.5},
    "two_step": {"k1_stage": 10, "m_entities": 3},
    "rrf": {"k": 60.0, "depth": 100},
    "fusion": {"weight": 0.5},
    "rerank": {"scores_path": None, "top_n": 100},
    "vectors": {
        "passages_path": None,
        "passages_ids_path": None,
        "queries_path": None,
        "queries_ids_path": None,
        "ann": {
            "enabled": True,
            "M": 32,
            "ef_construction": 200,
            "ef_search": 64,
            "rng_seed": 0,
        },
    },
    "eval": {"ks": [5, 10], "depth": 100},
    "ablate": {"subset_size": 500, "subset_seed": 0, "grid": {}},
}

# tuned per-dataset settings; seed k stays method-dependent (see seed_k_for)
BUNDLES: dict[str, dict[str, Any]] = {
    "hotpot": {
        "ppr": {"mode": "push"},
        "seeds": {"q": 0.5},
        "ner": {"normalization": "simple"},
    },
    "2wiki": {
        "ppr": {"mode": "power"},
        "seeds": {"q": 1.0},
        "ner": {"normalization": "lower"},
    },
}

_SEED_K = {
    ("hotpot", "graph_hybrid"): 10,
    ("hotpot", "graph_dense"): 5,
    ("hotpot", "graph_rrf"): 10,
    ("hotpot", "rrf_ppr_fusion"): 10,
    ("2wiki", "graph_hybrid"): 5,
    ("2wiki", "graph_dense"): 3,
    ("2wiki", "graph_rrf"): 5,
    ("2wiki", "rrf_ppr_fusion"): 5,
}


class ConfigError(ValueError):
    pass


def _merge(base: dict, override: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        here = f"{path}.{key}" if path else key
        if key not in base:
            raise ConfigError(f"unknown config key: {here}")
        if isinstance(base[key], dict) and key not in ("grid", "synthetic"):
            if not isinstance(value, dict):
                raise ConfigError(f"{here} must be an object")
            out[key] = _merge(base[key], value, here)
        else:
            out[key] = copy.deepcopy(value)
    return out


def resolve_config(user: dict[str, Any]) -> dict[str, Any]:
    """Merge user config over defaults (and over the named bundle, if any).

    Unknown keys are rejected with their dotted path.
    """
    bundle_name = user.get("defaults")
    base = DEFAULT_CONFIG
    if bundle_name is not None:
        if bundle_name not in BUNDLES:
            raise ConfigError(f"unknown defaults bundle: {bundle_name!r}")
        base = _merge(DEFAULT_CONFIG, BUNDLES[bundle_name])
        base["defaults"] = bundle_name
    cfg = _merge(base, user)

    if cfg["method"] not in METHODS:
        raise ConfigError(f"unknown method id: {cfg['method']!r}")
    if cfg["variant"] is not None and cfg["variant"] not in VARIANTS:
        raise ConfigError(f"unknown variant: {cfg['variant']!r} (expected one of {VARIANTS})")
    cfg = apply_variant(cfg)
    validate_config(cfg)
    return cfg


def apply_variant(cfg: dict[str, Any]) -> dict[str, Any]:
    """Layer the +EL/+PRUNE/+MIX/+ALL enhancement toggles onto a config."""
    variant = cfg.get("variant")
    if not variant:
        return cfg
    cfg = copy.deepcopy(cfg)
    if variant in ("+EL", "+ALL"):
        cfg["graph"]["alias"] = True
    if variant in ("+PRUNE", "+ALL"):
        cfg["graph"]["prune"]["hub_top_pct"] = 0.01
    if variant in ("+MIX", "+ALL"):
        cfg["seeds"]["mixing"] = "adaptive"
    return cfg


def validate_config(cfg: dict[str, Any]) -> None:
    """Range/enum checks for every field a module will later rely on.

    Catching bad values here means a long run cannot die halfway through on
    a precondition that was knowable at parse time.
    """
    from .entities import NORMALIZATION_MODES
    from .seeds import FALLBACKS, MIXINGS, WEIGHTINGS

    def need(cond: bool, msg: str) -> None:
        if not cond:
            raise ConfigError(msg)

    ds = cfg["dataset"]
    need(
        ds["format"] in ("hotpot_json", "wiki2_json", "generic_jsonl"),
        f"dataset.format: unknown format {ds['format']!r}",
    )

    ner = cfg["ner"]
    need(ner["mode"] in ("regex", "external"), f"ner.mode: unknown mode {ner['mode']!r}")
    need(ner["normalization"] in NORMALIZATION_MODES, f"ner.normalization: {ner['normalization']!r}")
    need(ner["min_entity_len"] >= 1, "ner.min_entity_len must be >= 1")

    g = cfg["graph"]
    need(g["min_entity_df"] >= 0, "graph.min_entity_df must be >= 0")
    need(0 < g["max_entity_df_ratio"] <= 1, "graph.max_entity_df_ratio must be in (0, 1]")
    need(g["hub_penalty"] >= 0, "graph.hub_penalty must be >= 0")
    need(0 <= g["prune"]["hub_top_pct"] < 1, "graph.prune.hub_top_pct must be in [0, 1)")
    cap = g["prune"]["outdegree_cap"]
    need(cap is None or cap >= 1, "graph.prune.outdegree_cap must be >= 1 or null")
    need(g["term"]["min_df"] >= 0, "graph.term.min_df must be >= 0")
    need(0 < g["term"]["max_df_ratio"] <= 1, "graph.term.max_df_ratio must be in (0, 1]")

    p = cfg["ppr"]
    need(p["mode"] in ("power", "push"), f"ppr.mode: unknown mode {p['mode']!r}")
    need(0 < p["alpha"] < 1, "ppr.alpha must be in (0, 1)")
    need(p["max_iter"] >= 1, "ppr.max_iter must be >= 1")
    need(p["epsilon"] > 0, "ppr.epsilon must be > 0")

    s = cfg["seeds"]
    need(s["k"] is None or s["k"] >= 1, "seeds.k must be >= 1 or null")
    need(s["weighting"] in WEIGHTINGS, f"seeds.weighting: {s['weighting']!r}")
    need(s["q"] >= 0, "seeds.q must be >= 0")
    need(s["mixing"] in MIXINGS, f"seeds.mixing: {s['mixing']!r}")
    need(s["fallback"] in FALLBACKS, f"seeds.fallback: {s['fallback']!r}")

    need(cfg["bm25"]["k1"] > 0, "bm25.k1 must be > 0")
    need(0 <= cfg["bm25"]["b"] <= 1, "bm25.b must be in [0, 1]")
    need(cfg["rm3"]["fb_docs"] >= 0, "rm3.fb_docs must be >= 0")
    need(cfg["rm3"]["fb_terms"] >= 0, "rm3.fb_terms must be >= 0")
    need(0 <= cfg["rm3"]["lambda"] <= 1, "rm3.lambda must be in [0, 1]")
    need(cfg["two_step"]["k1_stage"] >= 1, "two_step.k1_stage must be >= 1")
    need(cfg["two_step"]["m_entities"] >= 0, "two_step.m_entities must be >= 0")
    need(cfg["rrf"]["k"] > 0, "rrf.k must be > 0")
    need(cfg["rrf"]["depth"] >= 1, "rrf.depth must be >= 1")
    need(0 <= cfg["fusion"]["weight"] <= 1, "fusion.weight must be in [0, 1]")
    need(cfg["rerank"]["top_n"] >= 0, "rerank.top_n must be >= 0")

    ann = cfg["vectors"]["ann"]
    need(ann["M"] >= 2, "vectors.ann.M must be >= 2")
    need(ann["ef_construction"] >= 1, "vectors.ann.ef_construction must be >= 1")
    need(ann["ef_search"] >= 1, "vectors.ann.ef_search must be >= 1")

    ks = cfg["eval"]["ks"]
    need(bool(ks) and all(int(k) >= 1 for k in ks), "eval.ks must be nonempty positive ints")
    need(cfg["eval"]["depth"] >= max(int(k) for k in ks), "eval.depth must cover max(eval.ks)")
    need(cfg["workers"] >= 1, "workers must be >= 1")
    limit = cfg["queries_limit"]
    need(limit is None or int(limit) >= 1, "queries_limit must be >= 1 or null")
    need(cfg["ablate"]["subset_size"] >= 1, "ablate.subset_size must be >= 1")


def load_config(path: str) -> dict[str, Any]:
    with open(path, encoding="utf-8") as f:
        user = json.load(f)
    if not isinstance(user, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    return resolve_config(user)


def apply_overrides(cfg: dict[str, Any], overrides: dict[str, Any]) -> dict[str, Any]:
    """Apply flat dotted-key overrides, e.g. {"ppr.alpha": 0.2}."""
    cfg = copy.deepcopy(cfg)
    for dotted, value in overrides.items():
        parts = dotted.split(".")
        node = cfg
        for i, part in enumerate(parts[:-1]):
            if not isinstance(node, dict) or part not in node:
                raise ConfigError(f"unknown override path: {dotted}")
            node = node[part]
        leaf = parts[-1]
        if not isinstance(node, dict) or leaf not in node:
            raise ConfigError(f"unknown override path: {dotted}")
        node[leaf] = value
    return cfg


def seed_k_for(cfg: dict[str, Any]) -> int:
    """Seed passage count: explicit value, else the bundle/method default."""
    if cfg["seeds"]["k"] is not None:
        return int(cfg["seeds"]["k"])
    bundle = cfg.get("defaults")
    if bundle is not None:
        k = _SEED_K.get((bundle, cfg["method"]))
        if k is not None:
            return k
    return 10


def config_fingerprint(cfg: dict[str, Any]) -> str:
    canon = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:16]
