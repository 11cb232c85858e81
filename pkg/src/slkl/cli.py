"""Command line entry point: ``slkl run`` and ``slkl sweep``.

Exit codes: 0 success, 1 configuration error, 2 runtime failure.
"""
import argparse
import logging
import sys

from ._accel import backend_name
from .bench import ConfigError, ExperimentConfig, config_from_mapping, load_config, render_table, run_experiment, sweep_m0

log = logging.getLogger("slkl")

# flag -> config key; every flag defaults to None so unset flags never override the file
FLAGS = [
    ("--dataset", "dataset", "sinc or delimited"),
    ("--data-file", "data_file", "delimited input file"),
    ("--target-col", "target_col", "target column (0-based, negative counts from the end)"),
    ("--delimiter", "delimiter", "field separator, 'whitespace' for runs of blanks"),
    ("--categorical", "categorical", "comma list of columns to one-hot encode"),
    ("--standardize", "standardize", "standardize delimited features (true/false)"),
    ("--n-train", "n_train", "training set size"),
    ("--n-test", "n_test", "test set size"),
    ("--snr-db", "snr_db", "sinc training noise level in dB"),
    ("--sigma2", "sigma2", "Gaussian kernel width sigma^2"),
    ("--methods", "methods", "comma list from slkl,krrn,krrm,unif"),
    ("--m-values", "m_values", "comma list of candidate set sizes M"),
    ("--nu", "nu", "1-norm penalty (comma list allowed)"),
    ("--lambda", "lam", "ridge parameter"),
    ("--epsilon", "epsilon", "relative stopping tolerance"),
    ("--runs", "runs", "number of seeded runs"),
    ("--seed", "seed", "base seed; run r uses seed + r"),
    ("--max-iters", "max_iters", "iteration cap (default 100 M)"),
    ("--column-mode", "column_mode", "precompute or on_the_fly"),
    ("--newton-denominator", "newton_denominator", "second_derivative or half_second_derivative"),
    ("--unif-weight", "unif_weight", "weight given to every column by the Unif baseline"),
    ("--krrn-cap", "krrn_cap", "largest n for the dense KRRn baseline"),
    ("--outdir", "outdir", "output directory"),
    ("--jobs", "jobs", "parallel worker processes"),
]


def build_parser():
    parser = argparse.ArgumentParser(prog="slkl", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (("run", "run a seeded multi-run experiment"),
                            ("sweep", "grid of mean final m0 over M and nu")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="key = value config file")
        p.add_argument("--section", help="config file section (default: the first one)")
        p.add_argument("--header", action="store_const", const="true", default=None,
                       help="skip the first line of the data file")
        for flag, key, help_text in FLAGS:
            p.add_argument(flag, dest=key, default=None, help=help_text)
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config, args.section) if args.config else ExperimentConfig()
        overrides = {key: getattr(args, key) for _, key, _ in FLAGS}
        overrides["header"] = args.header
        cfg = config_from_mapping(overrides, cfg).validate()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1

    log.info("backend: %s", backend_name())
    try:
        if args.command == "run":
            report = run_experiment(cfg)
            sys.stdout.write(render_table(report))
        else:
            grid, notes = sweep_m0(cfg)
            for (M, nu), m0 in sorted(grid.items()):
                print(f"M={M} nu={nu:g} mean_m0={m0:.2f}")
            for note in notes:
                print(f"note: {note}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - the exit code is the contract
        log.debug("run failed", exc_info=True)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
