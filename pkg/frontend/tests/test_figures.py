import pytest

from uresample_plots import SchemaError, file_sha256, plot_coverage, plot_dkw, plot_fwer

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


def _check_png(path):
    assert path.exists()
    assert path.read_bytes()[:8] == PNG_MAGIC


def test_coverage_line_plot_leaves_input_untouched(report_csvs, tmp_path):
    csv = report_csvs["coverage"]
    before = file_sha256(csv)
    out = plot_coverage(csv, tmp_path / "cov.png")
    _check_png(out)
    assert file_sha256(csv) == before


def test_coverage_single_row(report_csvs, tmp_path):
    out = plot_coverage(report_csvs["coverage-single"], tmp_path / "one.png")
    _check_png(out)


def test_drift_report_plots_as_coverage(report_csvs, tmp_path):
    # alpha1-only report: nominal line is 1 - alpha1
    out = plot_coverage(report_csvs["drift"], tmp_path / "drift.png")
    _check_png(out)


def test_coverage_missing_columns_are_named(report_csvs, tmp_path):
    with pytest.raises(SchemaError, match="missing columns: coverage"):
        plot_coverage(report_csvs["fwer"], tmp_path / "nope.png")


def test_fwer_bars(report_csvs, tmp_path):
    out = plot_fwer(report_csvs["fwer"], tmp_path / "fwer.png")
    _check_png(out)


def test_fwer_accepts_size_reports(report_csvs, tmp_path):
    out = plot_fwer(report_csvs["size"], tmp_path / "size.png")
    _check_png(out)


def test_fwer_missing_columns_are_named(report_csvs, tmp_path):
    with pytest.raises(SchemaError, match="missing columns: fwer"):
        plot_fwer(report_csvs["coverage"], tmp_path / "nope.png")


def test_fwer_rejects_empty_rows(report_csvs, tmp_path):
    lines = report_csvs["fwer"].read_text().splitlines(keepends=True)
    empty = tmp_path / "empty.csv"
    empty.write_text("".join(lines[:2]))
    with pytest.raises(SchemaError, match="no data rows"):
        plot_fwer(empty, tmp_path / "nope.png")


def test_dkw_plot(report_csvs, tmp_path):
    out = plot_dkw(report_csvs["dkw"], tmp_path / "dkw.png")
    _check_png(out)


def test_dkw_missing_columns_are_named(report_csvs, tmp_path):
    with pytest.raises(SchemaError, match="missing columns: epsilon"):
        plot_dkw(report_csvs["coverage"], tmp_path / "nope.png")


def test_bad_header_raises_before_any_output(corrupted_csv, tmp_path):
    out = tmp_path / "never.png"
    with pytest.raises(SchemaError):
        plot_coverage(corrupted_csv, out)
    assert not out.exists()
