"""Shared fixtures: real report files produced by the uresample CLI.

The plotting package must consume reports exactly as the harness writes
them, so every fixture CSV comes out of a subprocess run of the primary
command line, never out of hand-built rows.
"""

import json
import subprocess
import sys

import pytest

CONFIGS = {
    "coverage": {
        "kind": "coverage", "family": "bernoulli",
        "grid": [{"theta": 0.3}, {"theta": 0.5}, {"theta": 0.7}],
        "n": 40, "b": 6, "replicates": 120, "draws": 200,
        "methods": ["subsampling-feasible", "bootstrap"], "root": "mean",
        "seed": 5, "options": {"alpha_pairs": [[0.025, 0.025]]},
    },
    "coverage-single": {
        "kind": "coverage", "family": "normal", "grid": [{"family": "normal"}],
        "n": 40, "b": 6, "replicates": 100, "draws": 200,
        "methods": ["subsampling-feasible"], "root": "mean",
        "seed": 6, "options": {"alpha_pairs": [[0.0, 0.05]]},
    },
    "size": {
        "kind": "size", "family": "normal",
        "grid": [{"mu": [0.0, 0.0]}, {"mu": [0.8, 0.8]}],
        "n": 60, "b": 7, "replicates": 100, "draws": 200, "alpha": 0.05,
        "methods": ["subsampling", "bootstrap-aqlr"], "seed": 7,
    },
    "fwer": {
        "kind": "fwer", "family": "normal", "grid": [{"mu": [0.0, 0.0]}],
        "n": 60, "b": 7, "replicates": 100, "draws": 200, "alpha": 0.05,
        "methods": ["subsampling", "bootstrap"], "seed": 8,
    },
    "dkw": {
        "kind": "dkw-check", "family": "bernoulli", "grid": [{"theta": 0.5}],
        "n": 40, "b": 4, "replicates": 100, "draws": 200,
        "epsilons": [0.4, 0.7], "root": "mean", "seed": 9,
    },
    "drift": {
        "kind": "drift-demo", "family": "normal-drift",
        "grid": [{"h": 0.0}, {"h": 0.3}],
        "n": 60, "b": 3, "replicates": 100, "draws": 200, "alpha1": 0.25,
        "root": "constrained-mean", "seed": 10,
    },
}


@pytest.fixture(scope="session")
def report_csvs(tmp_path_factory):
    """Mapping of config name -> CSV path, one harness run per config."""
    root = tmp_path_factory.mktemp("reports")
    out = {}
    for name, config in CONFIGS.items():
        cfg_path = root / f"{name}.json"
        cfg_path.write_text(json.dumps(config))
        proc = subprocess.run(
            [sys.executable, "-m", "uresample.cli", "run", str(cfg_path),
             "--out", str(root), "--stem", name],
            capture_output=True, text=True)
        assert proc.returncode == 0, f"{name}: {proc.stderr}"
        out[name] = root / f"{name}.csv"
        assert out[name].exists()
    return out


@pytest.fixture()
def corrupted_csv(report_csvs, tmp_path):
    """Copy of a real report whose header line was altered."""
    lines = report_csvs["coverage"].read_text().splitlines(keepends=True)
    lines[0] = "uniform-resample-report v2\n"
    bad = tmp_path / "bad.csv"
    bad.write_text("".join(lines))
    return bad
