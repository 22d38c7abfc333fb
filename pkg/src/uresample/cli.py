"""Config-driven command line: run experiments, list presets, print the version.

One JSON config file describes one experiment; flags supply the common
overrides (seed, threads, output directory) and ``--override key=value``
reaches any config key, with dots descending into nested dicts. Nothing
runs on an invalid config: unknown keys, unreadable files, and violated
invariants exit with status 2 before any sampling starts. Numerical
failures during a run exit with status 3.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import fields
from importlib import metadata
from pathlib import Path

from .harness import ExperimentSpec, _family_at, run_experiment, write_report
from .presets import PRESETS, preset_config, render_presets

__all__ = ["main", "run", "list_presets"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

SPEC_KEYS = tuple(f.name for f in fields(ExperimentSpec))

#: config keys handled by the CLI rather than the experiment spec
CLI_KEYS = ("out", "threads", "log_level", "stem")


class ConfigError(Exception):
    pass


def _parse_value(raw: str):
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def _apply_override(config: dict, item: str) -> None:
    key, sep, raw = item.partition("=")
    if not sep or not key:
        raise ConfigError(f"override must look like key=value, got {item!r}")
    target = config
    parts = key.split(".")
    for part in parts[:-1]:
        node = target.setdefault(part, {})
        if not isinstance(node, dict):
            raise ConfigError(f"cannot descend into {part!r} in override {item!r}")
        target = node
    target[parts[-1]] = _parse_value(raw)


def _load_config(source: str) -> tuple[dict, str]:
    """Resolve a config path or preset name to (config dict, report stem)."""
    path = Path(source)
    if path.exists():
        try:
            config = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {source}: {exc}") from exc
        if not isinstance(config, dict):
            raise ConfigError(f"config {source} must be a JSON object")
        return config, path.stem
    if source in PRESETS:
        return preset_config(source), source
    raise ConfigError(f"no config file or preset named {source!r}")


def _default_threads() -> int:
    raw = os.environ.get("URESAMPLE_THREADS", "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _build_spec(config: dict) -> tuple[ExperimentSpec, dict]:
    cli = {k: config.pop(k) for k in CLI_KEYS if k in config}
    unknown = sorted(set(config) - set(SPEC_KEYS))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    try:
        spec = ExperimentSpec(**config)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    # fail fast on unbuildable grid points before any sampling starts
    for point in spec.grid:
        try:
            _family_at(spec, point)
        except (TypeError, ValueError, KeyError) as exc:
            raise ConfigError(f"grid point {point}: {exc}") from exc
    return spec, cli


def run(config_path: str, overrides=(), *, seed=None, threads=None,
        out=None, stem=None) -> int:
    """Run one experiment from a config file or preset name; returns the exit code."""
    try:
        config, default_stem = _load_config(config_path)
        for item in overrides:
            _apply_override(config, item)
        if seed is not None:
            config["seed"] = seed
        level = str(config.get("log_level", "warning")).upper()
        logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                            format="%(levelname)s %(name)s: %(message)s")
        spec, cli = _build_spec(config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    n_threads = threads if threads is not None else cli.get("threads", _default_threads())
    out_dir = out if out is not None else cli.get("out", "reports")
    report_stem = stem if stem is not None else cli.get("stem", default_stem)
    try:
        report = run_experiment(spec, threads=int(n_threads))
    except Exception as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    aborted = report.summary.get("aborted_points", [])
    if not report.rows:
        for diag in aborted:
            print(f"numerical failure at {diag['point']}: {diag['error']}", file=sys.stderr)
        print("numerical failure: every grid point aborted", file=sys.stderr)
        return EXIT_NUMERICAL
    csv_path, json_path = write_report(report, out_dir, report_stem)
    for diag in aborted:
        print(f"warning: grid point {diag['point']} aborted: {diag['error']}", file=sys.stderr)
    print(csv_path)
    print(json_path)
    return EXIT_OK


def list_presets() -> str:
    return render_presets()


def _version() -> str:
    try:
        return metadata.version("uresample")
    except metadata.PackageNotFoundError:
        return "unknown"


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="uresample",
        description="Resampling-based inference experiments with worst-case reports.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment from a config file or preset")
    p_run.add_argument("config", help="path to a JSON config, or a preset name")
    p_run.add_argument("--seed", type=int, default=None, help="master seed override")
    p_run.add_argument("--threads", type=int, default=None, help="worker thread count")
    p_run.add_argument("--out", default=None, help="report output directory")
    p_run.add_argument("--stem", default=None, help="report file stem")
    p_run.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                       help="set a config key (JSON value; dots descend into dicts)")

    sub.add_parser("presets", help="list built-in experiment presets")
    sub.add_parser("version", help="print the package version")

    args = parser.parse_args(argv)
    if args.command == "run":
        return run(args.config, args.override, seed=args.seed,
                   threads=args.threads, out=args.out, stem=args.stem)
    if args.command == "presets":
        print(list_presets(), end="")
        return EXIT_OK
    if args.command == "version":
        print(_version())
        return EXIT_OK
    parser.error(f"unknown command {args.command!r}")  # pragma: no cover
    return EXIT_CONFIG  # pragma: no cover


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
