"""Figure rendering over v1 report files.

Every function here is a pure view of one CSV: it reads the file, draws,
and re-hashes the input afterwards to prove nothing was recomputed into
it or mutated along the way.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .report import ReportFile, SchemaError

__all__ = ["plot_coverage", "plot_fwer", "plot_dkw"]

_BAND = 3.0  # half-width of shaded/error ranges, in SEs


def _load_nonempty(report_csv, required) -> ReportFile:
    rep = ReportFile.load(report_csv)
    rep.require_columns(required)
    if not rep.rows:
        raise SchemaError(f"{rep.path}: no data rows")
    return rep


def _param_columns(rep: ReportFile) -> list:
    # the v1 layout puts sweep parameters first, then the sample sizes
    cols = []
    for c in rep.columns:
        if c == "n":
            break
        cols.append(c)
    return cols


def _numeric(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _x_column(rep: ReportFile, params) -> str | None:
    """First sweep column that is numeric in every row and actually varies."""
    for c in params + ["n", "b"]:
        if c not in rep.columns:
            continue
        vals = [row[c] for row in rep.rows]
        if all(_numeric(v) for v in vals) and len(set(vals)) > 1:
            return c
    return None


def _param_label(row, params) -> str:
    bits = [f"{c}={row[c]}" for c in params if row.get(c) not in ("", None)]
    return ", ".join(bits) if bits else "point"


def _row_label(row, params) -> str:
    label = _param_label(row, params)
    if "method" in row:
        label = f"{label}, {row['method']}" if label != "point" else str(row["method"])
    return label


def _finish(fig, rep: ReportFile, out_image) -> Path:
    out = Path(out_image)
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    plt.close(fig)
    if not rep.unchanged():
        raise RuntimeError(f"{rep.path} changed while plotting; output is suspect")
    return out


def plot_coverage(report_csv, out_image) -> Path:
    """Coverage per configuration with the nominal level and a 3 SE band.

    Rows are grouped by method and level pair. When a single sweep column
    varies numerically the groups are drawn as lines over it with shaded
    bands; otherwise each configuration becomes a labeled point with error
    bars.
    """
    rep = _load_nonempty(report_csv, ("coverage", "se"))
    params = _param_columns(rep)
    x_col = _x_column(rep, params)

    groups: dict = {}
    for row in rep.rows:
        key = (row.get("method"), row.get("alpha1"), row.get("alpha2"))
        groups.setdefault(key, []).append(row)

    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    width = max(len(groups), 1)
    for gi, (key, rows) in enumerate(sorted(groups.items(), key=lambda kv: str(kv[0]))):
        method, a1, a2 = key
        label = " ".join(str(p) for p in (method, _pair_text(a1, a2)) if p)
        if x_col is not None:
            rows = sorted(rows, key=lambda r: r[x_col])
            xs = [r[x_col] for r in rows]
            ys = [r["coverage"] for r in rows]
            es = [_BAND * r["se"] for r in rows]
            ax.plot(xs, ys, marker="o", label=label or None)
            ax.fill_between(xs, [y - e for y, e in zip(ys, es)],
                            [y + e for y, e in zip(ys, es)], alpha=0.2)
        else:
            offs = (gi - (width - 1) / 2.0) * 0.15
            xs = [i + offs for i in range(len(rows))]
            ax.errorbar(xs, [r["coverage"] for r in rows],
                        yerr=[_BAND * r["se"] for r in rows],
                        fmt="o", capsize=3, label=label or None)
            if gi == 0:
                ax.set_xticks(range(len(rows)))
                ax.set_xticklabels([_param_label(r, params) for r in rows],
                                   rotation=30, ha="right", fontsize=8)

    for nominal in sorted({_nominal(r) for r in rep.rows} - {None}):
        ax.axhline(nominal, color="gray", linestyle="--", linewidth=1,
                   label=f"nominal {nominal:g}")
    ax.set_xlabel(x_col if x_col is not None else "configuration")
    ax.set_ylabel("coverage")
    ax.set_title(rep.path.stem)
    ax.legend(fontsize=8)
    return _finish(fig, rep, out_image)


def _pair_text(a1, a2):
    if a1 is None and a2 is None:
        return ""
    if a2 is None:
        return f"alpha1={a1:g}"
    return f"({a1:g},{a2:g})"


def _nominal(row):
    a1 = row.get("alpha1")
    if a1 is None:
        return None
    a2 = row.get("alpha2", 0.0) or 0.0
    return 1.0 - a1 - a2


def plot_fwer(report_csv, out_image) -> Path:
    """Error-rate bars per configuration with the target level line.

    Accepts both the stepdown reports (``fwer`` column) and the test-size
    reports (``reject_rate``).
    """
    rep = ReportFile.load(report_csv)
    value = next((c for c in ("fwer", "reject_rate") if c in rep.columns), None)
    missing = ([] if value else ["fwer"]) + [c for c in ("alpha", "se")
                                             if c not in rep.columns]
    if missing:
        raise SchemaError(f"{rep.path}: missing columns: {', '.join(missing)}")
    if not rep.rows:
        raise SchemaError(f"{rep.path}: no data rows")
    params = _param_columns(rep)

    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    xs = range(len(rep.rows))
    ax.bar(xs, [r[value] for r in rep.rows],
           yerr=[_BAND * r["se"] for r in rep.rows], capsize=3, color="#4878a8")
    ax.set_xticks(list(xs))
    ax.set_xticklabels([_row_label(r, params) for r in rep.rows],
                       rotation=30, ha="right", fontsize=8)
    for alpha in sorted({r["alpha"] for r in rep.rows}):
        ax.axhline(alpha, color="crimson", linestyle="--", linewidth=1,
                   label=f"alpha={alpha:g}")
    ax.set_ylabel(value)
    ax.set_title(rep.path.stem)
    ax.legend(fontsize=8)
    return _finish(fig, rep, out_image)


def plot_dkw(report_csv, out_image) -> Path:
    """Observed tail-deviation frequency against its block bound, per row."""
    rep = _load_nonempty(report_csv, ("epsilon", "violation_rate", "bound", "se"))
    params = _param_columns(rep)

    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    xs = list(range(len(rep.rows)))
    ax.bar(xs, [r["violation_rate"] for r in rep.rows],
           yerr=[_BAND * r["se"] for r in rep.rows], capsize=3,
           color="#4878a8", label="violation rate")
    ax.plot(xs, [r["bound"] for r in rep.rows], "_", color="black",
            markersize=22, label="bound")
    ax.set_xticks(xs)
    ax.set_xticklabels([_row_label(r, params) + f", eps={r['epsilon']:g}"
                        for r in rep.rows], rotation=30, ha="right", fontsize=8)
    ax.set_ylabel("frequency")
    ax.set_title(rep.path.stem)
    ax.legend(fontsize=8)
    return _finish(fig, rep, out_image)
