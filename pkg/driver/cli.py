"""
Command-line interface

    python -m driver.cli run cases/loam_column.case [--parts P] [--threads N]
    python -m driver.cli validate gardner [--cells N] [--fluxes q1,q2,...]
    python -m driver.cli partition-check cases/loam_column.case --parts 1,2,4
    python -m driver.cli scaling cases/slope_3d.case --parts 1,2,4 [--mode strong|weak]

Exit status: 0 success, 1 solver failure or failed check, 2 usage error
"""

import argparse
import sys
from typing import List, Optional

from richards.errors import CaseParseError, ConfigurationError, InvalidInputError, InvalidSpecError, RichardsError

from .case_file import load_case
from .config import Settings

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


def _int_list(text: str) -> List[int]:
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of integers, got {text!r}") from None
    if not values or any(v < 1 for v in values):
        raise argparse.ArgumentTypeError(f"part counts must be >= 1, got {text!r}")
    return values


def _float_list(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="richards", description="Parallel 3D Richards equation solver")
    parser.add_argument("--quiet", action="store_true", help="no progress output")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="transient solve of a case file")
    run.add_argument("case")
    run.add_argument("--parts", type=int, help="number of subdomains (default: run.parts of the case, else RICHARDS_PARTS)")
    run.add_argument("--threads", type=int, help="worker thread pool size, >= parts (default: parts)")
    run.add_argument("--output", help="output directory")
    run.add_argument("--t-end", type=float, dest="t_end", help="override run.t_end [s]")

    val = sub.add_parser("validate", help="analytical validation studies")
    val.add_argument("study", choices=["gardner"])
    val.add_argument("--cells", type=int, default=100)
    val.add_argument("--fluxes", type=_float_list, help="outward top fluxes [m/s], comma separated")
    val.add_argument("--tolerance", type=float, default=5e-3, help="max |h_num - h_exact| [m]")
    val.add_argument("--output", help="directory for gardner_validation.csv")

    part = sub.add_parser("partition-check", help="compare runs across part counts")
    part.add_argument("case")
    part.add_argument("--parts", type=_int_list, required=True)
    part.add_argument("--t-end", type=float, dest="t_end")

    scale = sub.add_parser("scaling", help="strong or weak scaling study")
    scale.add_argument("case")
    scale.add_argument("--parts", type=_int_list, required=True)
    scale.add_argument("--mode", choices=["strong", "weak"], default="strong")
    scale.add_argument("--t-end", type=float, dest="t_end")
    scale.add_argument("--output", help="directory for scaling.csv and scaling.html")
    return parser


def _run(args, settings: Settings, verbose: bool) -> int:
    from .pipeline import SimulationPipeline

    spec = load_case(args.case)
    pipeline = SimulationPipeline(spec, parts=args.parts, threads=args.threads, output_dir=args.output,
                                  settings=settings, verbose=verbose)
    pipeline.run(t_end=args.t_end)
    return EXIT_OK


def _validate(args, settings: Settings, verbose: bool) -> int:
    from analysis.validation import GardnerValidator

    validator = GardnerValidator(cells=args.cells, fluxes=args.fluxes, tolerance=args.tolerance,
                                 settings=settings, verbose=verbose)
    report = validator.run()
    if args.output:
        validator.save(report, args.output)
    return EXIT_OK if report.passed else EXIT_FAILURE


def _partition_check(args, settings: Settings, verbose: bool) -> int:
    from analysis.validation import PartitionChecker

    checker = PartitionChecker(load_case(args.case), args.parts, t_end=args.t_end,
                               settings=settings, verbose=verbose)
    return EXIT_OK if checker.run().passed else EXIT_FAILURE


def _scaling(args, settings: Settings, verbose: bool) -> int:
    from analysis.scaling import ScalingStudy

    study = ScalingStudy(load_case(args.case), args.parts, mode=args.mode, t_end=args.t_end,
                         output_dir=args.output, settings=settings, verbose=verbose)
    report = study.run()
    return EXIT_OK if report.completed else EXIT_FAILURE


COMMANDS = {"run": _run, "validate": _validate, "partition-check": _partition_check, "scaling": _scaling}


def cli(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE

    try:
        settings = Settings.from_env()
    except ConfigurationError as err:
        print(f"❌ {err}", file=sys.stderr)
        return EXIT_USAGE
    verbose = settings.verbose and not args.quiet

    try:
        return COMMANDS[args.command](args, settings, verbose)
    except (CaseParseError, InvalidSpecError, ConfigurationError, InvalidInputError, FileNotFoundError) as err:
        print(f"❌ {err}", file=sys.stderr)
        return EXIT_USAGE
    except RichardsError as err:
        print(f"❌ {type(err).__name__}: {err}", file=sys.stderr)
        return EXIT_FAILURE


def main():
    sys.exit(cli())


if __name__ == "__main__":
    main()
