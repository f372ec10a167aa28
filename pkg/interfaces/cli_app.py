# Command-line application: run experiment files, generate datasets, self-test the prox
# operators and run the benchmark suites.

import argparse
import logging
import sys

from prettytable import PrettyTable

from config import suites
from config.settings import DATA_DIR, OUTPUT_DIR, VERSION, configure_logging
from core.data_handler import dataset_path, gen_randn, save_libsvm
from core.exceptions import ConfigError, FractionalError
from interfaces.experiment import load_summary, parse_config, run_experiment, suite_specs
from interfaces.selftest import run_prox_selftest

logger = logging.getLogger(__name__)


def display_report(summary, title):
    """
    Displays the per-variant summary of an experiment in a formatted table.
    """
    if summary is None or len(summary) == 0:
        print("\nNo runs were recorded.")
        return

    table = PrettyTable()
    table.field_names = ["Instance", "Variant", "Status", "Iterations", "Final F", "||Ax-y||", "Flagged"]
    table.align = "l"
    for column in ("Iterations", "Final F", "||Ax-y||", "Flagged"):
        table.align[column] = "r"

    for row in summary.itertuples(index=False):
        table.add_row([row.instance, row.variant, row.status if not row.reason else f"{row.status} ({row.reason})",
                       row.iterations, _fmt(row.final_objective), _fmt(row.final_residual), row.flagged])

    print(f"\n--- {title} ---")
    print(table)
    print("-" * (len(title) + 8))


def display_selftest(results):
    table = PrettyTable()
    table.field_names = ["Operator", "Trials", "Worst gap", "Result"]
    table.align = "l"
    table.align["Trials"] = "r"
    table.align["Worst gap"] = "r"
    for res in results:
        table.add_row([res.name, res.trials, f"{res.worst_gap:.3e}", "ok" if res.passed else "FAILED"])
    print("\n--- Prox Self-Test ---")
    print(table)


def _fmt(value):
    try:
        return f"{float(value):.6g}"
    except (TypeError, ValueError):
        return str(value) or "-"


def _progress(current, total):
    print(f"\r  {current}/{total} runs", end="" if current < total else "\n", flush=True)


def cmd_run(args):
    try:
        with open(args.config, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise ConfigError("config", None, f"cannot read {args.config}: {e.strerror}") from None
    spec = parse_config(text)
    print(f"Running '{spec.app}' on {spec.dataset} with {', '.join(spec.variants)}...")
    run_experiment(spec, data_dir=args.data_dir, progress_callback=_progress)
    display_report(load_summary(spec.output_dir), f"Results in {spec.output_dir}")
    return 0


def cmd_gen_data(args):
    ds = gen_randn(args.m, args.n, args.seed)
    path = save_libsvm(ds, dataset_path(args.name, args.data_dir))
    print(f"Wrote {args.m}x{args.n} dataset to {path}")
    return 0


def cmd_selftest(args):
    results = run_prox_selftest(seed=args.seed, trials=args.trials)
    display_selftest(results)
    return 0 if all(res.passed for res in results) else 1


def cmd_bench(args):
    specs = suite_specs(args.suite, args.out, seed=args.seed, iterations=args.iters, seconds=args.seconds)
    for spec in specs:
        print(f"\nBenchmark {args.suite} on {spec.dataset} -> {spec.output_dir}")
        run_experiment(spec, data_dir=args.data_dir, progress_callback=_progress)
        display_report(load_summary(spec.output_dir), f"{args.suite} / {spec.dataset}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="main.py", description="Fractional ADMM toolkit")
    parser.add_argument("--version", action="version", version=f"%(prog)s {VERSION}")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    parser.add_argument("--data-dir", default=DATA_DIR, help="dataset cache directory")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment file")
    p_run.add_argument("config")
    p_run.set_defaults(func=cmd_run)

    p_gen = sub.add_parser("gen-data", help="write a randn dataset to the cache")
    p_gen.add_argument("name")
    p_gen.add_argument("m", type=int)
    p_gen.add_argument("n", type=int)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.set_defaults(func=cmd_gen_data)

    p_self = sub.add_parser("prox-selftest", help="check the prox operators against brute force")
    p_self.add_argument("--seed", type=int, default=0)
    p_self.add_argument("--trials", type=int, default=200)
    p_self.set_defaults(func=cmd_selftest)

    p_bench = sub.add_parser("bench", help="run a benchmark suite")
    p_bench.add_argument("--suite", choices=sorted(suites.suite_datasets), required=True)
    p_bench.add_argument("--out", default=OUTPUT_DIR)
    p_bench.add_argument("--seed", type=int, default=0)
    budget = p_bench.add_mutually_exclusive_group()
    budget.add_argument("--iters", type=int)
    budget.add_argument("--seconds", type=float)
    p_bench.set_defaults(func=cmd_bench)
    return parser


def run_cli(argv=None):
    """
    Main function to run the console app. Returns the process exit status.
    """
    args = build_parser().parse_args(argv)
    configure_logging(logging.DEBUG if args.verbose else logging.INFO)
    try:
        return args.func(args)
    except FractionalError as e:
        print(f"Error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(run_cli())
