"""
Communication vs. search experiments
Command-line entry point: solve, sweep and simulate, writing CSV + JSON tables
"""

import argparse
import json
import logging
import sys

from commsearch import __version__
from commsearch.errors import CommSearchError, ConfigError, DomainError, NumericFailure, SamplerFailure
from commsearch.harness import SCHEMAS, ExperimentConfig, ExperimentKind, run
from commsearch.hparams import hparams_debug_string

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_SAMPLER = 0, 2, 3, 4

# subcommand -> (experiment kind, [(flag, parameter key, help)])
COMMANDS = {
    "solve-joint": (ExperimentKind.ASYMPTOTIC_SOLVE, [
        ("--c-s", "c_s", "scaled search cost(s), e.g. 0.5,1,2 or 0.2:2:10"),
        ("--c-c", "c_c", "scaled communication cost(s)"),
        ("--dim", "dim", "also map the solution to (kappa, n) at this dimension"),
    ]),
    "heatmap": (ExperimentKind.ASYMPTOTIC_HEATMAP, [
        ("--c-s", "c_s", "search cost grid"),
        ("--c-c", "c_c", "communication cost grid"),
        ("--gain", "gain", "append pure-policy values and the joint gain (true/false)"),
    ]),
    "solve-tilted": (ExperimentKind.TILTED_SOLVE, [
        ("--c-s", "c_s", "search cost(s)"),
        ("--c-c", "c_c", "communication cost(s)"),
    ]),
    "compare-tilt": (ExperimentKind.TILTED_COMPARE, [
        ("--c-s", "c_s", "search cost(s)"),
        ("--c-c", "c_c", "communication cost(s)"),
    ]),
    "simulate": (ExperimentKind.SIMULATE, [
        ("--dim", "dim", "sphere dimension d"),
        ("--kappa", "kappa", "message precision(s)"),
        ("--n", "n", "recommendation set size(s)"),
        ("--lambda-s", "lambda_s", "per-dimension search cost"),
        ("--lambda-c", "lambda_c", "per-dimension communication cost"),
    ]),
    "optimize": (ExperimentKind.OPTIMIZE, [
        ("--dim", "dim", "sphere dimension d"),
        ("--c-s", "c_s", "scaled search cost(s)"),
        ("--c-c", "c_c", "scaled communication cost(s)"),
    ]),
    "gap": (ExperimentKind.GAP_SWEEP, [
        ("--c-s", "c_s", "scaled search cost"),
        ("--c-c", "c_c", "scaled communication cost"),
        ("--dims", "dims", "dimensions, e.g. 10,20,40"),
        ("--mode", "mode", "Joint, SearchOnly or CommOnly"),
    ]),
    "finite-sweep": (ExperimentKind.FINITE_SWEEP, [
        ("--c-s", "c_s", "scaled search cost"),
        ("--c-c", "c_c", "communication cost grid"),
        ("--dims", "dims", "dimensions"),
    ]),
    "weighted": (ExperimentKind.WEIGHTED_SOLVE, [
        ("--mu", "mu", "weight of the first subspace, in (0, 1)"),
        ("--d1", "d1", "dimension of the first subspace"),
        ("--d2", "d2", "dimension of the second subspace"),
        ("--lambda-s", "lambda_s", "per-dimension search cost"),
        ("--lambda-1c", "lambda_1c", "communication cost in the first subspace"),
        ("--lambda-2c", "lambda_2c", "communication cost in the second subspace"),
        ("--simulate", "simulate", "also estimate the payoff by Monte Carlo (true/false)"),
    ]),
    "switching-curve": (ExperimentKind.SWITCHING_CURVE, [
        ("--c-s", "c_s", "sorted search cost grid"),
        ("--mode", "mode", "Posterior or Tilted"),
    ]),
}


def build_parser():
    parser = argparse.ArgumentParser(description="Trade-offs between describing a preference and searching recommendations.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (kind, flags) in COMMANDS.items():
        p = sub.add_parser(name, help=f"{kind.value} experiment")
        for flag, key, help_text in flags:
            p.add_argument(flag, dest=key, default=None, help=help_text)
        p.add_argument("--out", default=f"results/{name}.csv", help="Output CSV path (a .json sidecar is written next to it)")
        p.add_argument("--config", default=None, help="key = value config file; command-line values win")
        p.add_argument("--seed", default=None, help="Base seed for the replication streams")
        p.add_argument("--reps", default=None, help="Monte Carlo replications")
        p.add_argument("--workers", default=None, help="Worker threads for the simulations")
        p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                       help="Override any config key; may be repeated")
        p.add_argument("--quiet", action="store_true", help="No progress bars")
        p.add_argument("--verbose", action="store_true", help="INFO logging and the numeric defaults")
    return parser


def collect_parameters(args, kind):
    """--set over named flags over the config file."""
    schema = SCHEMAS[kind]
    cli = {key: getattr(args, key) for _, key, _ in COMMANDS[args.command][1] if getattr(args, key) is not None}
    for flag, key in (("seed", "seed"), ("reps", "replications"), ("workers", "workers")):
        value = getattr(args, flag)
        if value is None:
            continue
        if key in schema:
            cli[key] = value
        else:
            logging.warning("--%s has no effect on %s", flag, kind.value)
    if not args.quiet:
        cli["progress"] = "true"
    for item in args.overrides:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}", key=item)
        key, value = item.split("=", 1)
        cli[key.strip()] = value.strip()

    if args.config:
        return ExperimentConfig.from_file(args.config, kind=kind, overrides=cli)
    return ExperimentConfig(kind, cli)


def error_record(exc):
    context = getattr(exc, "context", {})
    return json.dumps({"error": type(exc).__name__, "message": str(exc), "context": context}, default=str)


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    if args.verbose:
        logging.info(hparams_debug_string())

    kind = COMMANDS[args.command][0]
    try:
        config = collect_parameters(args, kind)
        print(f"🔄 Running {kind.value}...")
        table = run(config)
        csv_path, meta_path = table.write(args.out)
    except ConfigError as exc:
        print(error_record(exc), file=sys.stderr)
        return EXIT_CONFIG
    except SamplerFailure as exc:
        print(error_record(exc), file=sys.stderr)
        return EXIT_SAMPLER
    except (NumericFailure, DomainError) as exc:
        print(error_record(exc), file=sys.stderr)
        return EXIT_NUMERIC
    except CommSearchError as exc:
        print(error_record(exc), file=sys.stderr)
        return EXIT_NUMERIC

    print(f"✅ Wrote {len(table.rows)} rows to {csv_path}")
    print(f"✅ Metadata saved to {meta_path}")
    return EXIT_OK


# ------------------------------
# CLI ENTRY POINT
# ------------------------------
if __name__ == "__main__":
    sys.exit(main())
