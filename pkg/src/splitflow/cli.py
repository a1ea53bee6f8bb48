"""Command-line interface: simulate, sweep, convergence, coupling, validate.

Exit codes: 0 success, 1 configuration error, 2 numerical failure
(non-finite state), 3 validation failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import ConfigError, SweepSpec, parse_config
from .reports import (slope_payload, summary_json, write_run_outputs,
                      write_sweep_outputs)
from .runner import NumericalError, run_convergence, run_coupling, run_simulation, run_sweep

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2
EXIT_VALIDATION = 3


def _add_common(parser):
    parser.add_argument("--config", required=True, help="key-value config file")
    parser.add_argument("--override", "-O", action="append", default=[],
                        metavar="KEY=VALUE", help="override a config key")
    parser.add_argument("--seed", type=int, default=None, help="override the seed")
    parser.add_argument("--workers", type=int, default=None,
                        help="worker processes (results never depend on this)")
    parser.add_argument("--out", type=Path, required=True, help="output directory")


def _values_list(text: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise ConfigError(f"cannot parse value list {text!r}")


def _load_config(args):
    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        raise ConfigError(f"config file: {exc}")
    overrides = list(args.override)
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    return parse_config(text, overrides)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="splitflow",
        description="Stochastic splitting integrators and Monte Carlo "
                    "effective diffusivities for periodic flows.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one ensemble and estimate K")
    _add_common(p)

    p = sub.add_parser("sweep", help="run a one-parameter sweep with a power-law fit")
    _add_common(p)
    p.add_argument("--param", required=True, choices=("sigma", "tau", "corr_time", "dt"))
    p.add_argument("--values", required=True, help="comma-separated sweep values")
    p.add_argument("--fit-entry", default="k11", choices=("k11", "k22"))

    p = sub.add_parser("convergence", help="strong-order study against a refined reference")
    _add_common(p)
    p.add_argument("--dt-list", required=True, help="comma-separated step sizes")

    p = sub.add_parser("coupling", help="passive vs inertial coupled-error study over tau")
    _add_common(p)
    p.add_argument("--tau-list", required=True, help="comma-separated Stokes numbers")

    p = sub.add_parser("validate", help="run the oracle suite")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "validate":
            return _do_validate()
        cfg = _load_config(args)
        if args.command == "simulate":
            result = run_simulation(cfg, workers=args.workers)
            write_run_outputs(result, args.out)
        elif args.command == "sweep":
            spec = SweepSpec(parameter=args.param,
                             values=tuple(_values_list(args.values)),
                             fit_entry=args.fit_entry)
            sweep = run_sweep(cfg, spec, workers=args.workers)
            write_sweep_outputs(sweep, args.out)
        elif args.command == "convergence":
            report = run_convergence(cfg, _values_list(args.dt_list), workers=args.workers)
            args.out.mkdir(parents=True, exist_ok=True)
            (args.out / "summary.json").write_text(summary_json(slope_payload(report)))
        elif args.command == "coupling":
            report = run_coupling(cfg, _values_list(args.tau_list), workers=args.workers)
            args.out.mkdir(parents=True, exist_ok=True)
            (args.out / "summary.json").write_text(summary_json(slope_payload(report)))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def _do_validate() -> int:
    from .validation import run_validation

    results = run_validation()
    failed = 0
    for res in results:
        status = "PASS" if res.passed else "FAIL"
        print(f"[{status}] {res.name}: {res.detail}")
        failed += 0 if res.passed else 1
    if failed:
        print(f"{failed}/{len(results)} checks failed", file=sys.stderr)
        return EXIT_VALIDATION
    print(f"all {len(results)} checks passed")
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
