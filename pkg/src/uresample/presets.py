"""Built-in experiment configurations for the command line.

Each preset is a complete config dict in the CLI schema, sized to finish
in minutes on one core. The grids bake in the adversarial directions the
uniformity checks exist for: success probabilities drifting to one at the
boundary rate, means drifting toward the clamp at the root's own rate, and
correlation patterns that stress the max statistics.
"""

from __future__ import annotations

import copy

from .families import boundary_theta

__all__ = ["PRESETS", "preset_config", "render_presets"]

_BOUNDARY_THETA = boundary_theta(0.1, 100)

PRESETS: dict = {
    "bernoulli-boundary": {
        "description": (
            "Bootstrap two-sided intervals for a Bernoulli mean collapse when "
            "the success probability is so close to one that the sample is all "
            "ones with probability 0.9; coverage drops to about 0.1."
        ),
        "config": {
            "kind": "failure-demo",
            "family": "bernoulli",
            "grid": [{"theta": _BOUNDARY_THETA}, {"theta": 0.5}],
            "n": 100,
            "replicates": 2000,
            "draws": 2000,
            "root": "mean",
            "methods": ["bootstrap"],
            "options": {"alpha_pairs": [[0.025, 0.025]]},
            "seed": 11,
        },
    },
    "normal-drift": {
        "description": (
            "Clamped-mean root under a mean drifting toward zero from above: "
            "lower one-sided subsampling coverage at alpha1=0.25 breaks down, "
            "while the alpha1=0.75 quantile estimate stays near 0.6745 "
            "(rerun with --override alpha1=0.75 to see the stable side)."
        ),
        "config": {
            "kind": "drift-demo",
            "family": "normal-drift",
            "grid": [{"h": 0.0}, {"h": 0.3}, {"h": 1.0}, {"h": 3.0}],
            "n": 400,
            "b": 3,
            "replicates": 2000,
            "draws": 2000,
            "alpha1": 0.25,
            "root": "constrained-mean",
            "seed": 13,
        },
    },
    "moment-size": {
        "description": (
            "Rejection rate of the two moment-inequality tests (subsampled max "
            "statistic and the adjusted quadratic form with bootstrap critical "
            "values) over null mean patterns, plus one violation point for power."
        ),
        "config": {
            "kind": "size",
            "family": "normal",
            "grid": [
                {"mu": [0.0, 0.0], "rho": 0.0},
                {"mu": [0.0, 0.0], "rho": 0.5},
                {"mu": [0.0, -1.0], "rho": 0.0},
                {"mu": [-1.0, -1.0], "rho": 0.0},
                {"mu": [0.5, 0.0], "rho": 0.0},
            ],
            "n": 200,
            "replicates": 1000,
            "draws": 2000,
            "alpha": 0.05,
            "eps": 0.05,
            "methods": ["subsampling", "bootstrap-aqlr"],
            "seed": 17,
        },
    },
    "stepdown-fwer": {
        "description": (
            "Familywise error of the stepdown max-statistic procedure across "
            "truth patterns with different null sets, for subsampling and "
            "bootstrap critical values, with per-replicate trace audits."
        ),
        "config": {
            "kind": "fwer",
            "family": "normal",
            "grid": [
                {"mu": [0.0, 0.0, 0.0, 0.0], "rho": 0.0},
                {"mu": [0.0, 0.0, 1.0, 1.0], "rho": 0.0},
                {"mu": [-1.0, -1.0, -1.0, -1.0], "rho": 0.0},
            ],
            "n": 200,
            "replicates": 1000,
            "draws": 2000,
            "alpha": 0.05,
            "methods": ["subsampling", "bootstrap"],
            "seed": 19,
        },
    },
    "dkw": {
        "description": (
            "Frequency with which the subsampling estimate strays from the "
            "exact size-b root law by more than epsilon, against the "
            "(1/eps)*sqrt(2*pi/floor(n/b)) block bound."
        ),
        "config": {
            "kind": "dkw-check",
            "family": "bernoulli",
            "grid": [{"theta": 0.5}],
            "n": 400,
            "b": 20,
            "replicates": 2000,
            "draws": 2000,
            "epsilons": [0.3, 0.6],
            "root": "mean",
            "seed": 23,
        },
    },
    "ustat-coverage": {
        "description": (
            "Two-sided coverage for a variance target through the pairwise "
            "half-squared-difference kernel on normal and rescaled-Bernoulli "
            "data; the true-centered subsampling law and the bootstrap sit "
            "near nominal at n=200 while the plug-in recentered subsampling "
            "variant visibly under-covers."
        ),
        "config": {
            "kind": "coverage",
            "family": "normal",
            "grid": [
                {"family": "normal"},
                {"family": "standardized-bernoulli", "p": 0.2},
            ],
            "n": 200,
            "replicates": 2000,
            "draws": 2000,
            "root": "u-variance",
            "methods": ["subsampling-feasible", "subsampling-oracle", "bootstrap"],
            "options": {"alpha_pairs": [[0.025, 0.025]]},
            "seed": 29,
        },
    },
    "ks-coverage": {
        "description": (
            "Coverage of the scaled sup-distance root between the empirical "
            "CDF and the truth, on a continuous family and Bernoulli families "
            "across success probabilities."
        ),
        "config": {
            "kind": "coverage",
            "family": "uniform",
            "grid": [
                {"family": "uniform"},
                {"family": "bernoulli", "theta": 0.3},
                {"family": "bernoulli", "theta": 0.5},
                {"family": "bernoulli", "theta": 0.7},
            ],
            "n": 400,
            "replicates": 2000,
            "draws": 2000,
            "root": "ks",
            "methods": ["subsampling-feasible", "bootstrap"],
            "options": {"alpha_pairs": [[0.025, 0.025]]},
            "seed": 31,
        },
    },
    "maxmean-coverage": {
        "description": (
            "Worst-case coverage of the studentized max-mean root over a grid "
            "of correlation structures and a skewed two-point family, for "
            "feasible subsampling, truth-centered subsampling, and bootstrap, "
            "at three one- and two-sided level splits."
        ),
        "config": {
            "kind": "coverage",
            "family": "normal",
            "grid": [
                {"family": "normal"},
                {"family": "normal", "mu": [0.0, 0.0, 0.0], "rho": 0.0},
                {"family": "normal", "mu": [0.0, 0.0, 0.0], "rho": 0.5},
                {"family": "standardized-bernoulli", "p": 0.4},
            ],
            "n": 200,
            "replicates": 2000,
            "draws": 2000,
            "root": "studentized-max-mean",
            "methods": ["subsampling-feasible", "subsampling-oracle", "bootstrap"],
            "options": {"alpha_pairs": [[0.0, 0.05], [0.05, 0.0], [0.025, 0.025]]},
            "seed": 37,
        },
    },
}


def preset_config(name: str) -> dict:
    """Deep copy of a preset's config dict, ready for overrides."""
    if name not in PRESETS:
        known = ", ".join(sorted(PRESETS))
        raise KeyError(f"unknown preset {name!r}; known presets: {known}")
    return copy.deepcopy(PRESETS[name]["config"])


def render_presets() -> str:
    lines = []
    for name in sorted(PRESETS):
        entry = PRESETS[name]
        cfg = entry["config"]
        lines.append(name)
        lines.append(f"  {entry['description']}")
        lines.append(
            f"  kind={cfg['kind']} family={cfg['family']} n={cfg.get('n')} "
            f"replicates={cfg.get('replicates')} grid points={len(cfg['grid'])}"
        )
        lines.append("")
    return "\n".join(lines).rstrip() + "\n"
