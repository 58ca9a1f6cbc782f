"""Command-line entry point.

    qsqueeze simulate <scenario> [--out DIR] [--cutoff N] [--threads K]
    qsqueeze simulate custom <config.yaml> [...]
    qsqueeze sweep <config.yaml> --axis <field> --values v1,v2,... [...]

Exit codes: 0 when everything succeeded, 2 when some curves or sweep points
failed (outputs and manifest are still written), 1 on fatal errors such as a
bad config, unknown scenario, or bad usage.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import ConfigError, parse_config
from .model import ParameterError
from .runner import run_many, run_sweep, write_manifest, write_result_files, write_sweep_csv
from .scenarios import SCENARIO_NAMES, build_scenario


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qsqueeze",
        description="Feedback-stabilized mechanical squeezing simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser(
        "simulate",
        help="run a preset scenario (%s) or a custom config" % ", ".join(SCENARIO_NAMES),
    )
    sim.add_argument("scenario", help="scenario name, or 'custom' followed by a config path")
    sim.add_argument("config", nargs="?", help="config path when scenario is 'custom'")
    _common_options(sim)

    swp = sub.add_parser("sweep", help="sweep one parameter of a custom config")
    swp.add_argument("config", help="base experiment config (YAML)")
    swp.add_argument("--axis", required=True, help="field to sweep (e.g. n_th, dt_measure)")
    swp.add_argument(
        "--values", required=True, help="comma-separated numeric values, e.g. 0.2,0.3,0.4"
    )
    _common_options(swp)
    return parser


def _common_options(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--out", default="qsqueeze_out", help="output directory (default: %(default)s)")
    sub.add_argument("--cutoff", type=int, default=None, help="override the Fock cutoff")
    sub.add_argument("--threads", type=int, default=1, help="worker processes (default: 1)")


def _parse_values(text: str) -> list[float]:
    items = [tok for tok in text.replace(",", " ").split() if tok]
    try:
        return [float(tok) for tok in items]
    except ValueError as exc:
        raise ConfigError(f"--values must be numeric, got {text!r}") from exc


def _cmd_simulate(args) -> int:
    scenario = args.scenario
    if scenario.startswith("custom:"):
        scenario, args.config = "custom", scenario.split(":", 1)[1]
    if scenario == "custom":
        if not args.config:
            raise ConfigError("simulate custom needs a config path")
        configs = [parse_config(args.config).with_cutoff(args.cutoff)]
        name = f"custom:{args.config}"
        sweep = None
    else:
        if args.config is not None:
            raise ConfigError(f"unexpected extra argument {args.config!r} for scenario {scenario}")
        spec = build_scenario(scenario)
        configs = [cfg.with_cutoff(args.cutoff) for cfg in spec.configs]
        sweep = spec.sweep
        name = scenario

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    failures = []

    if sweep is not None:
        rows = run_sweep(
            sweep.base.with_cutoff(args.cutoff), sweep.axis, sweep.values, threads=args.threads
        )
        path = out_dir / f"{sweep.stem}.csv"
        write_sweep_csv(path, sweep.axis, rows)
        entries.append((path, sweep.base))
        failures.extend(
            (f"{sweep.stem}[{sweep.axis}={value:g}]", error)
            for value, _, error in rows
            if error is not None
        )

    outcomes = run_many(configs, threads=args.threads)
    for cfg, (status, payload) in zip(configs, outcomes):
        if status == "ok":
            for path in write_result_files(out_dir, payload):
                entries.append((path, cfg))
        else:
            failures.append((cfg.label, payload))

    manifest = write_manifest(out_dir, name, entries, failures)
    for path, _ in entries:
        print(f"wrote {path}")
    for label, message in failures:
        print(f"FAILED {label}: {message}", file=sys.stderr)
    print(f"wrote {manifest}")
    return 2 if failures else 0


def _cmd_sweep(args) -> int:
    cfg = parse_config(args.config).with_cutoff(args.cutoff)
    values = _parse_values(args.values)
    rows = run_sweep(cfg, args.axis, values, threads=args.threads)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{cfg.label}_sweep_{args.axis}.csv"
    write_sweep_csv(path, args.axis, rows)
    failures = [(f"{args.axis}={value:g}", error) for value, _, error in rows if error is not None]
    manifest = write_manifest(out_dir, f"sweep:{args.axis}", [(path, cfg)], failures)
    print(f"wrote {path}")
    for label, message in failures:
        print(f"FAILED {label}: {message}", file=sys.stderr)
    print(f"wrote {manifest}")
    return 2 if failures else 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage errors; --help exits 0
        return 0 if exc.code == 0 else 1
    try:
        if args.command == "simulate":
            return _cmd_simulate(args)
        return _cmd_sweep(args)
    except (ConfigError, ParameterError, KeyError, OSError) as exc:
        message = exc.args[0] if exc.args else exc
        print(f"error: {message}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
