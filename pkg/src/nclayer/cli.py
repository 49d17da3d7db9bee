"""Command-line entry point: ``nclayer sweep|fairness|run|verify``.

Exit codes: 0 success, 1 a self-check failed, 2 bad configuration,
3 a file could not be read or written.
"""
from __future__ import annotations

import argparse
import logging
import sys

from . import experiments as ex
from .checks import run_checks
from .errors import ConfigError, IoError
from .scenario import ScenarioConfig, load_config

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_IO = 3


def _per_list(text: str) -> list[float]:
    try:
        return [float(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nclayer", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log protocol warnings")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="scenario file with key = value lines")
        p.add_argument("--seed", type=int, help="override the configured seed")
        p.add_argument("--out", help="CSV output path (default: stdout)")

    p = sub.add_parser("sweep", help="NC vs plain TCP throughput over erasure rates")
    common(p)
    p.add_argument("--per", type=_per_list, help="comma-separated erasure rates")
    p.add_argument("--workers", type=int, default=1, help="parallel simulations")

    p = sub.add_parser("fairness", help="two flows sharing the bottleneck")
    common(p)
    p.add_argument("--scenario", default="NC_VS_NC", help="NC_VS_TCP, NC_VS_NC or TCP_VS_TCP")
    p.add_argument("--per", type=_per_list, help="erasure rate (one value)")

    p = sub.add_parser("run", help="run the configured scenario, print binned throughput")
    common(p)
    p.add_argument("--per", type=_per_list, help="erasure rate (one value)")
    p.add_argument("--summary", action="store_true", help="per-flow summary instead of bins")

    sub.add_parser("verify", help="codec self-checks")
    return parser


def _config(args, default: ScenarioConfig) -> ScenarioConfig:
    cfg = load_config(args.config) if args.config else default
    if args.seed is not None:
        cfg = cfg.replace(seed=args.seed)
    return cfg


def _single_per(args, cfg: ScenarioConfig) -> ScenarioConfig:
    if args.per is None:
        return cfg
    if len(args.per) != 1:
        raise ConfigError("--per takes a single value for this command")
    return cfg.replace(per=args.per[0])


def _write(table: ex.Table, out: str | None):
    if out is None:
        ex.write_csv(table, sys.stdout)
    else:
        ex.emit_csv(table, out)


def _verify() -> int:
    ok = True
    for name, passed, detail in run_checks():
        print(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")
        ok &= passed
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.verbose else logging.ERROR)
    try:
        if args.command == "verify":
            return _verify()
        if args.command == "sweep":
            cfg = _config(args, ScenarioConfig())
            pers = ex.DEFAULT_PER_GRID if args.per is None else args.per
            table = ex.run_throughput_sweep(cfg, pers, workers=args.workers)
        elif args.command == "fairness":
            cfg = _single_per(args, _config(args, ScenarioConfig(per=ex.FAIRNESS_PER)))
            table = ex.run_fairness(cfg, args.scenario)
        else:
            cfg = _single_per(args, _config(args, ScenarioConfig()))
            metrics = ex.run_scenario(cfg)
            table = ex.summary_table(metrics, cfg.warmup) if args.summary else ex.throughput_table(metrics)
        _write(table, args.out)
    except IoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
