"""Command line entry point.

Exit codes: 0 success, 1 usage error, 2 config/validation error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .bandit import ValidationError, dump_instance, make_reference_instances
from .harness import ExperimentConfig, load_config, report_text, run_experiment, write_config

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="assistive-bandit",
                     description="Assistive multi-armed bandit experiments with a CPT-biased human.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run a paired UCB / RAB UCB / HR team experiment")
    run.add_argument("--config", required=True, type=Path, help="experiment INI file")
    run.add_argument("--out", type=Path, help="output directory (overrides the config)")
    run.add_argument("--seed", type=int, help="master seed (overrides the config)")
    run.add_argument("--trials", type=int, help="number of trials (overrides the config)")
    run.add_argument("--horizon", type=int, help="steps per trial (overrides the config)")
    run.add_argument("--workers", type=int, help="parallel worker processes")

    ref = sub.add_parser("reference", help="write the two reference instances and default configs")
    ref.add_argument("--out", type=Path, default=Path("."), help="directory to write into")

    sub.add_parser("selftest", help="run the built-in analytic and property checks")
    return parser


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    overrides = {}
    if args.out is not None:
        overrides["output_dir"] = args.out
    if args.seed is not None:
        overrides["master_seed"] = args.seed
    if args.trials is not None:
        overrides["trials"] = args.trials
    if args.horizon is not None:
        overrides["horizon"] = args.horizon
    if args.workers is not None:
        overrides["workers"] = args.workers
    if overrides:
        cfg = replace(cfg, **overrides)
    if cfg.output_dir is None:
        cfg = replace(cfg, output_dir=Path("results"))
    summary = run_experiment(cfg)
    sys.stdout.write(report_text(summary, cfg.alpha))
    return EXIT_OK


def cmd_reference(args) -> int:
    out: Path = args.out
    out.mkdir(parents=True, exist_ok=True)
    d1, d2 = make_reference_instances()
    for inst, stem in ((d1, "risky-better"), (d2, "safe-better")):
        dump_instance(inst, out / f"{stem}.ini")
        cfg = ExperimentConfig(inst, output_dir=Path(f"results-{stem}"))
        write_config(cfg, out / f"experiment-{stem}.ini", instance_file=f"{stem}.ini")
    write_config(ExperimentConfig(d1, output_dir=Path("results")), out / "experiment.ini",
                 instance_file="risky-better.ini")
    print(f"wrote reference instances and configs to {out}")
    return EXIT_OK


def cmd_selftest(args) -> int:
    from .selftest import run_selftest
    return EXIT_OK if run_selftest() else EXIT_RUNTIME


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError:
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"run": cmd_run, "reference": cmd_reference, "selftest": cmd_selftest}[args.command]
    try:
        return handler(args)
    except (ValidationError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001
        logging.getLogger(__name__).debug("runtime failure", exc_info=True)
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
