"""``tbq`` command line.

Exit status is 0 on success, 2 on a configuration error and 1 on any
runtime failure.
"""
import argparse
import dataclasses
import sys

from .experiments import ConfigError, emit_histograms, load_config, run_experiment
from .scalar_quantizer import format_quantizer, lloyd_max_gaussian, uniform_quantizer


def _bits(text):
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not values or any(v < 1 for v in values):
        raise argparse.ArgumentTypeError("bit budgets must be integers >= 1")
    return values


def _parser():
    parser = argparse.ArgumentParser(prog="tbq", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def experiment_flags(p):
        p.add_argument("--config", required=True, help="JSON experiment config")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--runs", type=int, help="override Monte Carlo runs")
        p.add_argument("--seed", type=int, help="override master seed")
        p.add_argument("--workers", type=int, help="worker threads (results do not depend on it)")

    run = sub.add_parser("run", help="all systems over the configured bit budgets")
    experiment_flags(run)
    sweep = sub.add_parser("sweep", help="proposed design for the configured quantizer only")
    experiment_flags(sweep)
    sweep.add_argument("--bits", type=_bits, help="comma-separated total-bit budgets")

    quant = sub.add_parser("quantizer", help="print a scalar quantizer")
    quant.add_argument("--levels", type=int, required=True)
    quant.add_argument("--dist", choices=["gaussian"], default="gaussian")
    quant.add_argument("--kind", choices=["lloyd", "uniform"], default="lloyd")
    quant.add_argument("--variance", type=float, default=1.0)

    hist = sub.add_parser("hist", help="histograms of the analog branch outputs")
    hist.add_argument("--config", required=True)
    hist.add_argument("--out", required=True)
    hist.add_argument("--draws", type=int, default=1_000_000)
    return parser


def _overrides(config, args):
    changes = {}
    for name in ("runs", "seed", "workers"):
        value = getattr(args, name, None)
        if value is not None:
            changes[name] = value
    if getattr(args, "bits", None):
        changes["bit_budgets"] = args.bits
    if changes.get("runs", 100) < 100:
        raise ConfigError("--runs must be at least 100")
    return dataclasses.replace(config, **changes)


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        if args.command == "quantizer":
            if args.levels < 1 or args.variance <= 0:
                raise ConfigError("--levels must be >= 1 and --variance positive")
            make = lloyd_max_gaussian if args.kind == "lloyd" else uniform_quantizer
            sys.stdout.write(format_quantizer(make(args.levels, args.variance)))
            return 0
        config = _overrides(load_config(args.config), args)
        if args.command == "run":
            run_experiment(config, args.out)
        elif args.command == "sweep":
            run_experiment(config, args.out, systems=(f"proposed-{config.quantizer}",))
        else:
            emit_histograms(config, args.out, args.draws)
    except ConfigError as exc:
        print(f"tbq: config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - exit code contract
        print(f"tbq: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
