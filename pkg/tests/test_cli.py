import json
import subprocess
import sys

import pytest

from uresample.cli import EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, main
from uresample.harness import SCHEMA_HEADER
from uresample.presets import PRESETS, preset_config

TINY = {
    "kind": "coverage",
    "family": "normal",
    "grid": [{"family": "normal"}],
    "n": 40,
    "b": 6,
    "replicates": 200,
    "draws": 200,
    "methods": ["subsampling-feasible"],
    "root": "mean",
    "seed": 3,
}


def _write_config(tmp_path, name="cfg.json", **changes):
    cfg = dict(TINY, **changes)
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return path


def test_run_produces_reports(tmp_path, capsys):
    cfg = _write_config(tmp_path)
    out = tmp_path / "reports"
    code = main(["run", str(cfg), "--out", str(out)])
    assert code == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    csv_path, json_path = lines
    assert csv_path.endswith("cfg.csv") and json_path.endswith("cfg.json")
    text = (out / "cfg.csv").read_text()
    assert text.splitlines()[0] == SCHEMA_HEADER
    payload = json.loads((out / "cfg.json").read_text())
    assert payload["kind"] == "coverage"
    assert payload["seed"] == 3


def test_run_is_deterministic(tmp_path, capsys):
    cfg = _write_config(tmp_path)
    assert main(["run", str(cfg), "--out", str(tmp_path / "a")]) == EXIT_OK
    assert main(["run", str(cfg), "--out", str(tmp_path / "b"),
                 "--threads", "4"]) == EXIT_OK
    capsys.readouterr()
    a = (tmp_path / "a" / "cfg.csv").read_text()
    b = (tmp_path / "b" / "cfg.csv").read_text()
    assert a == b


def test_seed_override_changes_rows(tmp_path, capsys):
    cfg = _write_config(tmp_path)
    main(["run", str(cfg), "--out", str(tmp_path / "a")])
    main(["run", str(cfg), "--out", str(tmp_path / "b"), "--seed", "99"])
    capsys.readouterr()
    assert (tmp_path / "a" / "cfg.csv").read_text() != (tmp_path / "b" / "cfg.csv").read_text()


def test_override_flags(tmp_path, capsys):
    cfg = _write_config(tmp_path)
    code = main(["run", str(cfg), "--out", str(tmp_path / "o"), "--stem", "alt",
                 "--override", "replicates=100",
                 "--override", "options.alpha_pairs=[[0.0, 0.1]]"])
    assert code == EXIT_OK
    capsys.readouterr()
    payload = json.loads((tmp_path / "o" / "alt.json").read_text())
    assert payload["config"]["replicates"] == 100
    assert payload["config"]["options"]["alpha_pairs"] == [[0.0, 0.1]]


def test_config_errors(tmp_path, capsys):
    missing = main(["run", str(tmp_path / "nope.json")])
    assert missing == EXIT_CONFIG
    bad_levels = _write_config(tmp_path, name="levels.json", alpha1=0.6, alpha2=0.5)
    assert main(["run", str(bad_levels)]) == EXIT_CONFIG
    unknown_key = _write_config(tmp_path, name="extra.json", bandwidth=2)
    assert main(["run", str(unknown_key)]) == EXIT_CONFIG
    err = capsys.readouterr().err
    assert "bandwidth" in err
    bad_family = _write_config(tmp_path, name="fam.json",
                               grid=[{"family": "two-point", "lo": 1.0, "hi": 1.0, "p": 0.5}])
    assert main(["run", str(bad_family)]) == EXIT_CONFIG
    not_a_preset = main(["run", "no-such-preset"])
    assert not_a_preset == EXIT_CONFIG
    not_json = tmp_path / "broken.json"
    not_json.write_text("{nope")
    assert main(["run", str(not_json)]) == EXIT_CONFIG


def test_numerical_failure_exit(tmp_path, capsys):
    cfg = _write_config(tmp_path, name="abort.json", kind="dkw-check",
                        grid=[{"family": "normal"}], epsilons=[0.3])
    code = main(["run", str(cfg), "--out", str(tmp_path / "r")])
    assert code == EXIT_NUMERICAL
    err = capsys.readouterr().err
    assert "every grid point aborted" in err


def test_presets_listing(capsys):
    assert main(["presets"]) == EXIT_OK
    out = capsys.readouterr().out
    assert len(PRESETS) >= 6
    for name, entry in PRESETS.items():
        assert name in out
        assert entry["description"].strip()
    cfg = preset_config("dkw")
    assert cfg["kind"] == "dkw-check"
    with pytest.raises(KeyError):
        preset_config("nope")


def test_preset_run_with_overrides(tmp_path, capsys):
    code = main(["run", "dkw", "--out", str(tmp_path),
                 "--override", "replicates=100",
                 "--override", "n=60", "--override", "b=6",
                 "--override", "draws=200"])
    assert code == EXIT_OK
    capsys.readouterr()
    payload = json.loads((tmp_path / "dkw.json").read_text())
    assert payload["config"]["replicates"] == 100


def test_version_subcommand(capsys):
    assert main(["version"]) == EXIT_OK
    assert capsys.readouterr().out.strip() == "0.1.0"


def test_console_script_installed():
    proc = subprocess.run([sys.executable, "-m", "uresample.cli", "version"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.strip() == "0.1.0"
