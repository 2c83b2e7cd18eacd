"""Command-line entry point.

    moderr run --config exp.cfg [--seed 42] [--out runs/r8] [--plot]
    moderr compare --a runs/r3 --b runs/r8 [--out ratios.json] [--plot fig.png]
    moderr plot --run runs/r8

Exit codes: 0 success, 1 I/O failure, 2 configuration error, 3 numerical failure.
"""

import argparse
import json
import logging
import sys

from . import harness
from .errors import ConfigError, NumericalError, ValidationError

EXIT_OK, EXIT_IO, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3

log = logging.getLogger("moderr")


def _seed(text):
    value = int(text, 0)
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return value


def build_parser():
    parser = argparse.ArgumentParser(
        prog="moderr",
        description="Estimate model-error moments from 3DVar analyses of a Lorenz 96 "
                    "twin experiment and certify the analysis-accuracy bounds.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one twin experiment and write its diagnostics")
    run.add_argument("--config", help="key = value config file (defaults apply when omitted)")
    run.add_argument("--seed", type=_seed, help="override the config seed")
    run.add_argument("--out", help="output directory (overrides output_dir)")
    run.add_argument("--plot", action="store_true", help="also render figures into OUT/figures")

    cmp_ = sub.add_parser("compare", help="ratio summary of two finished runs (a / b)")
    cmp_.add_argument("--a", required=True, help="run directory a")
    cmp_.add_argument("--b", required=True, help="run directory b")
    cmp_.add_argument("--out", help="write the ratio summary JSON here as well")
    cmp_.add_argument("--plot", help="write side-by-side Hovmoller figure to this path")

    plot = sub.add_parser("plot", help="render figures from a finished run directory")
    plot.add_argument("--run", required=True, help="run directory")
    plot.add_argument("--out", help="figure directory (default RUN/figures)")
    plot.add_argument("--format", default="png")
    return parser


def cmd_run(args):
    cfg = harness.parse_config(args.config) if args.config else harness.ExperimentConfig()
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.out:
        changes["output_dir"] = args.out
    if changes:
        cfg = harness.with_overrides(cfg, **changes)
    log.info("running N=%d steps=%d R=%g seed=%d", cfg.N, cfg.steps, cfg.R_variance, cfg.seed)
    result = harness.run_twin_experiment(cfg)
    manifest = harness.write_outputs(result, cfg.output_dir)
    summary = harness.summarize(result)
    print(json.dumps({
        "output_dir": str(cfg.output_dir),
        "files": len(manifest["files"]),
        "lipschitz": summary["lipschitz"]["L"],
        "analysis_error": summary["analysis_error"],
        "max_abs": summary["max_abs"],
        "all_certificates_passed": summary["all_certificates_passed"],
    }, indent=2))
    if args.plot:
        from .plotting import render_run
        for path in render_run(cfg.output_dir):
            log.info("wrote %s", path)
    return EXIT_OK


def cmd_compare(args):
    ratios = harness.compare(args.a, args.b)
    text = json.dumps(ratios, indent=2)
    print(text)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    if args.plot:
        from .plotting import render_comparison
        render_comparison(args.a, args.b, args.plot, labels=(args.a, args.b))
    return EXIT_OK


def cmd_plot(args):
    from .plotting import render_run
    for path in render_run(args.run, args.out, args.format):
        print(path)
    return EXIT_OK


COMMANDS = {"run": cmd_run, "compare": cmd_compare, "plot": cmd_plot}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, ValidationError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
