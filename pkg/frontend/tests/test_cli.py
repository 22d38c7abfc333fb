import subprocess
import sys

from uresample_plots.cli import main

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"

# which subcommand serves each report kind the harness can produce
COMMAND_FOR = {
    "coverage": "coverage",
    "coverage-single": "coverage",
    "drift": "coverage",
    "fwer": "fwer",
    "size": "fwer",
    "dkw": "dkw",
}


def test_coverage_command_prints_output_path(report_csvs, tmp_path, capsys):
    out = tmp_path / "cov.png"
    assert main(["coverage", str(report_csvs["coverage"]), "-o", str(out)]) == 0
    assert str(out) in capsys.readouterr().out
    assert out.read_bytes()[:8] == PNG_MAGIC


def test_every_report_kind_has_a_working_command(report_csvs, tmp_path):
    for name, csv in report_csvs.items():
        out = tmp_path / f"{name}.png"
        rc = main([COMMAND_FOR[name], str(csv), "-o", str(out)])
        assert rc == 0, name
        assert out.read_bytes()[:8] == PNG_MAGIC, name


def test_corrupted_header_fails_every_command(report_csvs, tmp_path, capsys):
    for name, csv in report_csvs.items():
        lines = csv.read_text().splitlines(keepends=True)
        lines[0] = "totally-not-a-report\n"
        bad = tmp_path / f"bad-{name}.csv"
        bad.write_text("".join(lines))
        out = tmp_path / f"bad-{name}.png"
        rc = main([COMMAND_FOR[name], str(bad), "-o", str(out)])
        err = capsys.readouterr().err
        assert rc == 2, name
        assert "bad header" in err
        assert not out.exists()


def test_missing_input_file_exits_nonzero(tmp_path, capsys):
    rc = main(["coverage", str(tmp_path / "ghost.csv"), "-o", str(tmp_path / "x.png")])
    assert rc == 2
    assert "error:" in capsys.readouterr().err


def test_module_entrypoint(report_csvs, tmp_path):
    out = tmp_path / "mod.png"
    proc = subprocess.run(
        [sys.executable, "-m", "uresample_plots.cli", "fwer",
         str(report_csvs["fwer"]), "-o", str(out)],
        capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert out.exists()
