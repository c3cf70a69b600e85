"""Built-in named experiments: one canned config per acceptance check."""

from __future__ import annotations

from typing import Any

_GOLDEN_MEAN_SFT = [[1, 1], [1, 0]]
_GOLDEN_MEAN_P = [["3/4", "1/4"], ["1", "0"]]
_GOLDEN_MEAN_PI = ["4/5", "1/5"]

_PERTURBED_BERNOULLI = {
    "type": "bernoulli",
    "kind": "compact",
    "base": ["1/2", "1/2"],
    "window": {"-2": ["3/4", "1/4"], "0": ["2/3", "1/3"], "3": ["1/4", "3/4"]},
}

CATALOG: dict[str, dict[str, Any]] = {
    "bernoulli-cocycle": {
        "description": "chain rule for the shift cocycle, fuzzed over points and steps",
        "config": {
            "schema": "v1",
            "seed": "2026",
            "system": _PERTURBED_BERNOULLI,
            "operation": {"name": "cocycle_fuzz", "cases": 1000, "span": 8},
        },
    },
    "bernoulli-kakutani": {
        "description": "equivalence sum on the alternating family (certified divergent)",
        "config": {
            "schema": "v1",
            "seed": "2026",
            "system": {
                "type": "bernoulli",
                "kind": "periodic",
                "sites": [["3/4", "1/4"], ["1/4", "3/4"]],
            },
            "operation": {"name": "kakutani_sum", "horizon": 1000},
        },
    },
    "bernoulli-homoclinic-bounds": {
        "description": "two-sided cocycle ratio bounds over rewired pairs, exhaustive",
        "config": {
            "schema": "v1",
            "seed": "2026",
            "system": _PERTURBED_BERNOULLI,
            "operation": {"name": "homoclinic_scan", "radius_max": 3, "n_max": 8},
        },
    },
    "poisson-mixing-gap": {
        "description": "cylinder-event correlation gap vs twice the support overlap",
        "config": {
            "schema": "v1",
            "seed": "2026",
            "system": {
                "type": "poisson",
                "ground": "weighted",
                "weights": {
                    "0": "1",
                    "1": "1/2",
                    "2": "2",
                    "3": "3/4",
                    "4": "1",
                    "5": "1/3",
                    "6": "5/4",
                    "7": "1/2",
                },
            },
            "operation": {"name": "mixing_gap_fuzz", "cases": 500, "points": 8},
        },
    },
    "poisson-variance-decay": {
        "description": "block-average variance along a spaced subsequence scales like 1/N",
        "config": {
            "schema": "v1",
            "seed": "2026",
            "system": {"type": "poisson", "ground": "translation", "step": 1},
            "operation": {
                "name": "variance_decay",
                "region": list(range(10)),
                "k": 0,
                "blocks": [16, 64, 256],
                "runs": 10000,
            },
        },
    },
    "ergodicity-probe-iid": {
        "description": "two-subsequence divergence hypothesis on the fair-coin shift",
        "config": {
            "schema": "v1",
            "seed": "2026",
            "system": {"type": "bernoulli", "kind": "iid", "base": ["1/2", "1/2"]},
            "operation": {
                "name": "two_subsequence_probe",
                "f": [{"coef": "1", "word": [1], "left": 0}],
                "blocks": [256, 512, 1024, 2048, 4096],
                "times_rule": "all",
                "alpha": "1",
                "runs": 400,
            },
        },
    },
    "ergodicity-probe-poisson": {
        "description": "two-subsequence hypothesis on the suspension, null-subsequence times",
        "config": {
            "schema": "v1",
            "seed": "2026",
            "system": {"type": "poisson", "ground": "translation", "step": 1},
            "operation": {
                "name": "two_subsequence_probe",
                "f": [{"coef": "1", "constraints": [[list(range(10)), 0]]}],
                "blocks": [16, 64, 256],
                "times_rule": "spaced",
                "spacing": 10,
                "alpha": "1",
                "runs": 10000,
            },
        },
    },
    "markov-coupling": {
        "description": "hub-state coupling certificates for all cylinder pairs, golden mean",
        "config": {
            "schema": "v1",
            "seed": "2026",
            "system": {
                "type": "markov",
                "sft": _GOLDEN_MEAN_SFT,
                "transition": _GOLDEN_MEAN_P,
                "marginal": _GOLDEN_MEAN_PI,
            },
            "operation": {"name": "coupling_scan", "n": 1},
        },
    },
    "markov-martingale": {
        "description": "restricted-derivative martingale property by exact enumeration",
        "config": {
            "schema": "v1",
            "seed": "2026",
            "system": {
                "type": "markov",
                "sft": _GOLDEN_MEAN_SFT,
                "transition": _GOLDEN_MEAN_P,
                "marginal": _GOLDEN_MEAN_PI,
                "transition_window": {"0": [["1/2", "1/2"], ["1", "0"]]},
            },
            "operation": {"name": "martingale_check", "radius": 4},
        },
    },
    "hurewicz-sanity": {
        "description": "dual-weighted ratio averages converge to the set mass (iid)",
        "config": {
            "schema": "v1",
            "seed": "2026",
            "system": {"type": "bernoulli", "kind": "iid", "base": ["1/2", "1/2"]},
            "operation": {
                "name": "ratio_series",
                "f": [{"coef": "1", "word": [1], "left": 0}],
                "horizon": 100000,
            },
        },
    },
    "zd-box-average": {
        "description": "planar box ratio averages of a letter indicator (LLN check)",
        "config": {
            "schema": "v1",
            "seed": "2026",
            "system": {"type": "zd", "kind": "iid", "dimension": 2, "base": ["1/2", "1/2"]},
            "operation": {
                "name": "box_ratio_average",
                "f": [{"coef": "1", "pattern": {"0,0": 1}}],
                "n_max": 64,
            },
        },
    },
    "determinism-audit": {
        "description": "re-runs seeded sub-experiments and compares reports field by field",
        "config": {
            "schema": "v1",
            "seed": "2026",
            "system": {"type": "bernoulli", "kind": "iid", "base": ["1/2", "1/2"]},
            "operation": {"name": "determinism_audit"},
        },
    },
}


def list_experiments(filter_text: str = "") -> list[tuple[str, str]]:
    """(name, description) pairs, optionally substring-filtered."""
    return [
        (name, entry["description"])
        for name, entry in sorted(CATALOG.items())
        if filter_text in name
    ]


def get_config(name: str) -> dict[str, Any]:
    if name not in CATALOG:
        raise KeyError(f"unknown experiment {name!r}")
    import copy

    return copy.deepcopy(CATALOG[name]["config"])
