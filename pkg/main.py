import argparse
import logging
import sys
import time
from pathlib import Path

from dotenv import load_dotenv

from src.engine.algebra import MAX_DIM, MIN_DIM
from src.errors import GeometricCalculusError
from src.pipeline import FIELDS, PATCHES, SCENARIOS, RunConfig, run_command
from src.utils import load_config, setup_logger

logger = setup_logger("Entrypoint")


def dimension(value: str) -> int:
    dim = int(value)
    if not MIN_DIM <= dim <= MAX_DIM:
        raise argparse.ArgumentTypeError(f"dimension must lie in [{MIN_DIM}, {MAX_DIM}], got {dim}")
    return dim


def eps_list(value: str) -> list:
    try:
        epsilons = [float(item) for item in value.split(",") if item.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {value!r}") from exc
    if not epsilons or any(e <= 0 for e in epsilons):
        raise argparse.ArgumentTypeError("the ε sweep needs positive values")
    return epsilons


def build_parser() -> argparse.ArgumentParser:
    """
    Command line:
    python main.py verify-algebra --dim 4 --seed 42 --trials 1000
    python main.py run-scenario disk --radius 1 --eps-sweep 1e-1,1e-2,1e-3
    """
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--dim", type=dimension, help=f"Algebra dimension ({MIN_DIM}..{MAX_DIM})")
    common.add_argument("--seed", type=int, help="Random seed (default from config)")
    common.add_argument("--trials", type=int, help="Random trials, or sample points for verify-table")
    common.add_argument("--tol", type=float, help="Override the tolerance of the command")
    common.add_argument("--cells", type=int, help="Quadrature cells per axis")
    common.add_argument("--out", type=Path, help="Write the JSON report to this path")
    common.add_argument("--config", type=str, help="Alternate YAML config (default: config/config.yaml)")
    common.add_argument("--verbose", action="store_true", help="Increase output verbosity to DEBUG")

    parser = argparse.ArgumentParser(description="Geometric-calculus integration engine")
    commands = parser.add_subparsers(dest="command", required=True)
    commands.add_parser("verify-algebra", parents=[common], help="Property suite of the Clifford algebra")
    commands.add_parser("verify-table", parents=[common], help="Derivative checks of the antiderivative table")

    scenario = commands.add_parser("run-scenario", parents=[common], help="Boundary-method integration of a scenario")
    scenario.add_argument("scenario", choices=SCENARIOS)
    scenario.add_argument("--radius", type=float)
    scenario.add_argument("--height", type=float)
    incision = scenario.add_mutually_exclusive_group()
    incision.add_argument("--chamfer", type=float, help="Single incision size ε (no sweep)")
    incision.add_argument("--eps-sweep", type=eps_list, help="Comma-separated incision sizes, e.g. 1e-1,1e-2,1e-3")
    scenario.add_argument("--no-oracle", action="store_true", help="Skip the quadrature cross-check")

    for name, text in (("oracle", "Directed quadrature of a field"), ("check-ftc", "Fundamental theorem check")):
        sub = commands.add_parser(name, parents=[common], help=text)
        sub.add_argument("--field", choices=FIELDS, default="half-x-squared" if name == "check-ftc" else "constant")
        sub.add_argument("--patch", choices=PATCHES, default="unit-square")
    return parser


def to_run_config(args: argparse.Namespace, config: dict) -> RunConfig:
    return RunConfig(
        command=args.command,
        config=config,
        dim=args.dim,
        seed=args.seed,
        trials=args.trials,
        scenario=getattr(args, "scenario", None),
        radius=getattr(args, "radius", None),
        height=getattr(args, "height", None),
        chamfer=getattr(args, "chamfer", None),
        eps_sweep=getattr(args, "eps_sweep", None),
        with_oracle=not getattr(args, "no_oracle", False),
        field_name=getattr(args, "field", "half-x-squared"),
        patch=getattr(args, "patch", "unit-square"),
        cells=args.cells,
        tol=args.tol,
        out=args.out,
    )


def main(argv=None) -> int:
    start_time = time.time()
    args = build_parser().parse_args(argv)

    load_dotenv()

    if args.verbose:
        logging.getLogger().setLevel(logging.DEBUG)
        logger.debug("Debug mode enabled.")

    try:
        run = to_run_config(args, load_config(args.config))
        code = run_command(run)
        elapsed = time.time() - start_time
        status = "passed" if code == 0 else "FAILED"
        logger.info(f"{args.command} {status} in {elapsed:.2f} seconds.")
        return code

    except KeyboardInterrupt:
        logger.warning("Run interrupted by user.")
        return 130

    except GeometricCalculusError as e:
        logger.error(f"{args.command} failed: {type(e).__name__}: {e}")
        return 1

    except Exception as e:
        logger.critical(f"{args.command} failed with critical error: {e}", exc_info=True)
        return 1


if __name__ == "__main__":
    sys.exit(main())
