"""Command-line front end.

Exit codes: 0 on success, 1 on configuration errors (bad file, bad
values, conflicting flags), 2 on runtime failures (simulation crash,
unwritable output directory).

Output directory resolution: ``--out`` flag, else the ``NBSIM_OUT``
environment variable, else ``./out``.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from .config import parse_config, serialize_config
from .engine import ConfigError, run_campaign, validate_config
from .outputs import write_outputs
from .presets import PRESETS, expand_preset

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2

log = logging.getLogger("nbsim")


@dataclass(frozen=True)
class RunRequest:
    """Everything one ``run`` invocation needs, decoupled from argv."""

    config_path: str | None = None
    preset: str | None = None
    seed: int | None = None
    out_dir: str | None = None
    format: str = "csv"
    trace: bool = False
    overrides: tuple[str, ...] = ()
    verbosity: int = 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nbsim",
        description="Deterministic system-level simulator for NB-IoT heterogeneous networks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a simulation campaign and write an output bundle")
    run.add_argument("--config", metavar="PATH", help="TOML scenario file")
    run.add_argument(
        "--preset",
        metavar="NAME",
        help=f"built-in scenario, one of: {', '.join(sorted(PRESETS))}",
    )
    run.add_argument("--seed", type=int, metavar="U64", help="override the scenario seed")
    run.add_argument("--out", metavar="DIR", help="output directory (default: $NBSIM_OUT or ./out)")
    run.add_argument("--format", choices=("csv", "json"), default="csv", help="table format")
    run.add_argument("--trace", action="store_true", help="also write per-drop attach trace logs")
    run.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override a config value by dotted path (repeatable), e.g. --set ue.count=500",
    )
    run.add_argument("-v", "--verbose", action="count", default=0, help="increase log detail")
    return parser


def _parse_overrides(items: tuple[str, ...]) -> dict[str, str]:
    overrides: dict[str, str] = {}
    errors = []
    for item in items:
        key, sep, value = item.partition("=")
        if not sep or not key:
            errors.append(f"--set '{item}': expected KEY=VALUE")
        else:
            overrides[key] = value
    if errors:
        raise ConfigError(errors)
    return overrides


def _load_config(req: RunRequest):
    if (req.config_path is None) == (req.preset is None):
        raise ConfigError(["exactly one of --config and --preset is required"])
    overrides = _parse_overrides(req.overrides)
    if req.config_path is not None:
        try:
            text = Path(req.config_path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError([f"config: cannot read '{req.config_path}': {exc}"]) from exc
        cfg = parse_config(text, overrides)
    else:
        cfg = expand_preset(req.preset, overrides)
    if req.seed is not None:
        cfg = dataclasses.replace(cfg, seed=req.seed)
        errors = validate_config(cfg)
        if errors:
            raise ConfigError(errors)
    return cfg


def execute(req: RunRequest) -> int:
    """Run one request end to end; returns the process exit code."""
    try:
        cfg = _load_config(req)
    except ConfigError as exc:
        for msg in exc.errors:
            print(f"config error: {msg}", file=sys.stderr)
        return EXIT_CONFIG

    out_dir = req.out_dir or os.environ.get("NBSIM_OUT") or "out"
    try:
        report = run_campaign(cfg)
    except ConfigError as exc:
        for msg in exc.errors:
            print(f"config error: {msg}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # simulation crash → runtime failure
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME

    for drop in report.drops:
        m = drop.metrics
        log.info(
            "drop %d: coverage=%.4f mean_tx=%s redirect_rate=%s",
            drop.drop_index,
            m.coverage_probability,
            "none" if m.mean_tx_power_dbm is None else f"{m.mean_tx_power_dbm:.2f}",
            "none" if m.redirect_rate is None else f"{m.redirect_rate:.4f}",
        )

    try:
        written = write_outputs(
            report,
            req.format,
            out_dir,
            traces=req.trace,
            resolved_config_text=serialize_config(cfg),
        )
    except Exception as exc:
        print(f"runtime failure: cannot write outputs: {exc}", file=sys.stderr)
        return EXIT_RUNTIME

    print(f"wrote {len(written)} files to {out_dir}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    level = logging.WARNING
    if args.verbose == 1:
        level = logging.INFO
    elif args.verbose >= 2:
        level = logging.DEBUG
    logging.basicConfig(level=level, format="%(message)s")
    log.setLevel(level)
    req = RunRequest(
        config_path=args.config,
        preset=args.preset,
        seed=args.seed,
        out_dir=args.out,
        format=args.format,
        trace=args.trace,
        overrides=tuple(args.overrides),
        verbosity=args.verbose,
    )
    return execute(req)


if __name__ == "__main__":
    raise SystemExit(main())
