from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from .engine.algebra import AlgebraSignature, Multivector
from .engine.antiderivatives import catalog, table_entry
from .engine.boundary_method import BoundaryMethod, IntegrationChain
from .engine.calculus import VectorField
from .engine.manifolds import ImplicitManifold, flat
from .engine.quadrature import ManifoldPatch, QuadratureOracle, disk_polar, unit_box
from .engine.scenarios import cylinder_oracle, cylinder_scenario, disk_oracle, disk_scenario
from .engine.suites import algebra_suite, table_suite
from .errors import ParameterError
from .report import (
    SCHEMA_VERSION,
    algebra_payload,
    derivative_check_table,
    incision_table,
    integral_to_dict,
    print_table,
    residual_table,
    scenario_payload,
    sweep_table,
    table_payload,
)
from .utils import config_section, setup_logger, write_json

logger = setup_logger("Pipeline")

SCENARIOS = ("disk", "cylinder")
PATCHES = ("unit-square", "unit-cube", "unit-disk")
FIELDS = ("constant", "x", "half-x-squared", "ax", "ax-row")


@dataclass
class RunConfig:
    """One command-line run: the subcommand, its parameters and the loaded YAML config."""

    command: str
    config: dict = field(default_factory=dict)
    dim: Optional[int] = None
    seed: Optional[int] = None
    trials: Optional[int] = None
    scenario: Optional[str] = None
    radius: Optional[float] = None
    height: Optional[float] = None
    chamfer: Optional[float] = None
    eps_sweep: Optional[List[float]] = None
    with_oracle: bool = True
    field_name: str = "half-x-squared"
    patch: str = "unit-square"
    cells: Optional[int] = None
    tol: Optional[float] = None
    out: Optional[Path] = None

    def default(self, key: str, fallback):
        return config_section(self.config, "defaults").get(key, fallback)

    def tolerance(self, key: str, fallback: float) -> float:
        if self.tol is not None:
            return float(self.tol)
        return float(config_section(self.config, "tolerances").get(key, fallback))

    @property
    def resolved_seed(self) -> int:
        return int(self.seed if self.seed is not None else self.default("seed", 42))


def _emit(run: RunConfig, payload: dict):
    if run.out is not None:
        write_json(payload, Path(run.out))
        logger.info(f"Report written to {run.out}")


# --- verify-algebra -------------------------------------------------------------


def cmd_verify_algebra(run: RunConfig) -> int:
    dim = int(run.dim if run.dim is not None else run.default("dim", 4))
    trials = int(run.trials if run.trials is not None else run.default("trials", 1000))
    tol = run.tolerance("algebra", 1e-10)
    if trials <= 0:
        logger.warning("verify-algebra ran zero trials; the pass is vacuous")
    result = algebra_suite(dim, run.resolved_seed, max(trials, 0), tol)
    print_table(residual_table(result.residuals, tol), f"Algebra properties (d={dim}, {result.trials} trials)")
    _emit(run, algebra_payload(result))
    for name, value in result.violations.items():
        logger.error(f"Property {name} violated: worst residual {value:.3e} > {tol:.1e}")
    return 0 if result.passed else 1


# --- verify-table ---------------------------------------------------------------


def cmd_verify_table(run: RunConfig) -> int:
    dims = [int(run.dim)] if run.dim is not None else [int(d) for d in run.default("table_dims", [2, 3, 4])]
    points = int(run.trials if run.trials is not None else run.default("table_points", 100))
    tol = run.tolerance("derivative_check", 1e-6)
    result = table_suite(dims, run.resolved_seed, points, tol)
    print_table(derivative_check_table(result.checks), "Antiderivative derivative checks")
    _emit(run, table_payload(result, catalog(dims)))
    for check in result.checks:
        if not check.passed:
            logger.error(f"{check.entry}: derivative residual {check.max_residual:.3e} > {check.tol:.1e}")
    return 0 if result.passed else 1


# --- run-scenario ---------------------------------------------------------------


def _scenario_builder(run: RunConfig) -> Tuple[Callable[[float], IntegrationChain], Multivector, float]:
    """(ε ↦ chain, expected value, tolerance on the extrapolated coefficient)."""
    radius = float(run.radius if run.radius is not None else run.default("radius", 1.0))
    if run.scenario == "disk":
        algebra = AlgebraSignature(2)
        x0 = Multivector.basis_vector(algebra, 0)
        expected = Multivector.blade(algebra, 0b11) * (np.pi * radius**2)
        return (lambda eps: disk_scenario(radius, x0, eps)), expected, run.tolerance("scenario_disk", 1e-6)
    if run.scenario == "cylinder":
        height = float(run.height if run.height is not None else run.default("height", 2.0))
        algebra = AlgebraSignature(3)
        expected = Multivector.pseudoscalar(algebra) * (np.pi * radius**2 * height)
        return (
            (lambda eps: cylinder_scenario(radius, height, chamfer=eps)),
            expected,
            run.tolerance("scenario_cylinder", 1e-4),
        )
    raise ParameterError(f"Unknown scenario {run.scenario!r}; expected one of {', '.join(SCENARIOS)}")


def _scenario_oracle(run: RunConfig, oracle: QuadratureOracle, chain: IntegrationChain):
    cells = config_section(run.config, "defaults").get("oracle_cells", {})
    subdivisions = _cells(run, int(cells.get(run.scenario, 512 if run.scenario == "disk" else 64)))
    if run.scenario == "disk":
        x0 = Multivector.basis_vector(chain.pseudoscalar.algebra, 0)
        return disk_oracle(oracle, chain.params["radius"], x0, subdivisions=subdivisions)
    return cylinder_oracle(oracle, chain.params["radius"], chain.params["height"], subdivisions=subdivisions)


def cmd_run_scenario(run: RunConfig) -> int:
    if run.chamfer is not None and run.eps_sweep is not None:
        raise ParameterError("Give either a single chamfer or an ε sweep, not both")
    build, expected, tol = _scenario_builder(run)
    oracle = QuadratureOracle(run.config)
    method = BoundaryMethod(run.config, oracle)

    if run.chamfer is not None:
        epsilons = [float(run.chamfer)]
    else:
        epsilons = [float(e) for e in (run.eps_sweep or run.default("eps_sweep", [1e-1, 1e-2, 1e-3, 1e-4]))]
    finest = build(min(epsilons))
    reference = _scenario_oracle(run, oracle, finest) if run.with_oracle else None

    if len(epsilons) == 1:
        report = method.run_chain(finest.with_oracle(reference))
    else:
        report = method.run_sweep(build, epsilons, reference)
    jump = method.verify_branch_cut_necessity(finest)

    expected_coefficient = finest.coefficient(expected)
    estimate = report.extrapolated_coefficient if report.extrapolated_coefficient is not None else report.coefficient
    deviation = abs(estimate - expected_coefficient)
    within = deviation <= tol if report.extrapolated_coefficient is not None else deviation <= report.error_bound + tol

    print_table(incision_table(report.incisions), f"Incisions ({run.scenario}, ε={min(epsilons):g})")
    if report.sweep:
        print_table(sweep_table(report), f"ε sweep ({run.scenario})")
    logger.info(f"{run.scenario}: estimate {estimate:.12g}, expected {expected_coefficient:.12g}, |Δ| = {deviation:.3e}")

    payload = scenario_payload(report)
    payload.update(
        {
            "expected_coefficient": float(expected_coefficient),
            "deviation": float(deviation),
            "tol": float(tol),
            "cut_jump": float(finest.coefficient(jump)),
            "passed": bool(report.passed and within),
        }
    )
    _emit(run, payload)
    if not within:
        logger.error(f"{run.scenario}: estimate misses πr²{'h' if run.scenario == 'cylinder' else ''} by {deviation:.3e}")
    return 0 if payload["passed"] else 1


# --- oracle / check-ftc ---------------------------------------------------------


def named_patch(name: str, cells: int) -> Tuple[ManifoldPatch, ImplicitManifold]:
    """Parameter patch and the flat manifold it spans (the algebra matches the patch dimension)."""
    if name == "unit-square":
        algebra = AlgebraSignature(2)
        return unit_box(algebra, 2, cells), flat(algebra, 0.0, 1.0)
    if name == "unit-cube":
        algebra = AlgebraSignature(3)
        return unit_box(algebra, 3, cells), flat(algebra, 0.0, 1.0)
    if name == "unit-disk":
        algebra = AlgebraSignature(2)
        e1, e2 = Multivector.basis_vector(algebra, 0), Multivector.basis_vector(algebra, 1)
        return disk_polar(algebra, 1.0, e1, e2, cells), flat(algebra)
    raise ParameterError(f"Unknown patch {name!r}; expected one of {', '.join(PATCHES)}")


def named_field(name: str, algebra: AlgebraSignature) -> VectorField:
    if name == "constant":
        return VectorField.constant(Multivector.scalar(algebra, 1.0), "1")
    if name == "x":
        return table_entry("x", algebra.dim).integrand
    if name == "half-x-squared":
        return table_entry("x", algebra.dim).antiderivative
    if name == "ax":
        return table_entry("ax", algebra.dim).integrand
    if name == "ax-row":
        return table_entry("ax", algebra.dim).antiderivative
    raise ParameterError(f"Unknown field {name!r}; expected one of {', '.join(FIELDS)}")


def _cells(run: RunConfig, fallback: int) -> int:
    cells = int(run.cells if run.cells is not None else fallback)
    if cells < 1:
        raise ParameterError(f"--cells must be positive, got {cells}")
    return cells


def cmd_oracle(run: RunConfig) -> int:
    patch, _ = named_patch(run.patch, _cells(run, 64))
    f = named_field(run.field_name, patch.algebra)
    oracle = QuadratureOracle(run.config)
    result = oracle.directed_integral(patch, f, tol=run.tol)
    logger.info(f"∫ d^{patch.dim}x {f.name} over {patch.name} = {result.value!r} (±{result.estimated_error:.3e})")
    payload = {
        "schema": SCHEMA_VERSION,
        "command": "oracle",
        "patch": patch.name,
        "field": run.field_name,
        "integral": integral_to_dict(result),
        "passed": result.converged,
    }
    _emit(run, payload)
    return 0 if result.converged else 1


def cmd_check_ftc(run: RunConfig) -> int:
    patch, manifold = named_patch(run.patch, _cells(run, 64))
    F = named_field(run.field_name, patch.algebra)
    oracle = QuadratureOracle(run.config)
    interior, boundary = oracle.fundamental_theorem_sides(patch, F, manifold)
    residual = float((interior.value - boundary.value).norm())
    tol = run.tolerance("ftc_residual", 1e-6)
    logger.info(f"Fundamental theorem on {patch.name} with {F.name}: residual {residual:.3e} (tol {tol:.1e})")
    payload = {
        "schema": SCHEMA_VERSION,
        "command": "check-ftc",
        "patch": patch.name,
        "field": run.field_name,
        "interior": integral_to_dict(interior),
        "boundary": integral_to_dict(boundary),
        "residual": residual,
        "tol": tol,
        "passed": residual <= tol,
    }
    _emit(run, payload)
    return 0 if residual <= tol else 1


COMMANDS: Dict[str, Callable[[RunConfig], int]] = {
    "verify-algebra": cmd_verify_algebra,
    "verify-table": cmd_verify_table,
    "run-scenario": cmd_run_scenario,
    "oracle": cmd_oracle,
    "check-ftc": cmd_check_ftc,
}


def run_command(run: RunConfig) -> int:
    """Dispatches a parsed run to its command."""
    try:
        command = COMMANDS[run.command]
    except KeyError as exc:
        raise ParameterError(f"Unknown command {run.command!r}") from exc
    logger.info(f" {run.command.upper()} ")
    return command(run)
