"""Seeded verification suites behind the verify-algebra and verify-table commands."""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from ..utils import setup_logger
from .algebra import (
    AlgebraSignature,
    Multivector,
    geometric_product,
    grade_select,
    inverse,
    left_contraction,
    outer_product,
    reverse,
    right_contraction,
)
from .antiderivatives import SCENARIO_ENTRIES, TABLE_ROWS, DerivativeCheck, scenario_entry, table_entry
from .calculus import LinearMap, project, reject

logger = setup_logger(__name__)

# Batched products build (batch, 2^d, 2^d) intermediates; keep them near 32 MB
PRODUCT_BUDGET = 2**22


@dataclass(frozen=True)
class AlgebraSuiteResult:
    dim: int
    seed: int
    trials: int
    tol: float
    residuals: Dict[str, float] = field(default_factory=dict)

    @property
    def violations(self) -> Dict[str, float]:
        return {name: value for name, value in self.residuals.items() if not value <= self.tol}

    @property
    def passed(self) -> bool:
        return not self.violations


def _relative(difference: Multivector, scale) -> np.ndarray:
    return np.sqrt(np.sum(difference.coeffs**2, axis=-1)) / np.maximum(1.0, scale)


def _sizes(a: Multivector) -> np.ndarray:
    return np.sqrt(np.sum(a.coeffs**2, axis=-1))


def _random_vectors(rng: np.random.Generator, algebra: AlgebraSignature, count: int) -> Multivector:
    return Multivector.vector(algebra, rng.standard_normal((count, algebra.dim)))


def _random_blade(rng: np.random.Generator, algebra: AlgebraSignature, count: int, grade: int) -> Multivector:
    blade = Multivector.scalar(algebra, np.ones(count))
    for _ in range(grade):
        vectors = _random_vectors(rng, algebra, count)
        blade = outer_product(blade, vectors / _sizes(vectors))
    return blade


def _chunk_residuals(rng: np.random.Generator, algebra: AlgebraSignature, count: int) -> Dict[str, float]:
    size = algebra.size
    A, B, C = (Multivector(algebra, rng.standard_normal((count, size))) for _ in range(3))
    scale = _sizes(A) * _sizes(B) * _sizes(C)
    pair = _sizes(A) * _sizes(B)
    residuals = {}

    residuals["associativity"] = _relative(
        geometric_product(geometric_product(A, B), C) - geometric_product(A, geometric_product(B, C)), scale
    )
    residuals["reverse_anti_automorphism"] = _relative(
        reverse(geometric_product(A, B)) - geometric_product(reverse(B), reverse(A)), pair
    )
    norm_squared = np.sum(A.coeffs**2, axis=-1)
    self_product = grade_select(geometric_product(A, reverse(A)), 0).coeffs[..., 0]
    residuals["norm_positivity"] = np.maximum(-norm_squared, 0.0) + np.abs(norm_squared - self_product) / np.maximum(
        1.0, norm_squared
    )
    completeness = sum((grade_select(A, k) for k in range(algebra.dim + 1)), Multivector.zeros(algebra, (count,)))
    residuals["grade_completeness"] = _relative(completeness - A, _sizes(A))
    residuals["contraction_identity"] = np.maximum(
        _relative(right_contraction(A, right_contraction(B, C)) - right_contraction(outer_product(A, B), C), scale),
        _relative(left_contraction(left_contraction(C, B), A) - left_contraction(C, outer_product(B, A)), scale),
    )

    vectors = _random_vectors(rng, algebra, count)
    versors = vectors
    for _ in range(2):
        versors = geometric_product(versors, _random_vectors(rng, algebra, count))
    one = Multivector.scalar(algebra, np.ones(count))
    residuals["inverse"] = np.maximum(
        _sizes(geometric_product(inverse(vectors), vectors) - one),
        _sizes(geometric_product(inverse(versors), versors) - one),
    )

    grade = int(rng.integers(1, algebra.dim))
    blade = _random_blade(rng, algebra, count, grade)
    a = _random_vectors(rng, algebra, count)
    projected = project(blade, a)
    residuals["projection_idempotence"] = _relative(project(blade, projected) - projected, _sizes(a))
    residuals["projection_split"] = _relative(projected + reject(blade, a) - a, _sizes(a))

    matrix = rng.standard_normal((algebra.dim, algebra.dim))
    linear = LinearMap(algebra, matrix)
    b = _random_vectors(rng, algebra, count)
    residuals["outermorphism"] = _relative(
        linear(outer_product(a, b)) - outer_product(linear(a), linear(b)), _sizes(linear(a)) * _sizes(linear(b))
    )
    return {name: float(np.max(values)) for name, values in residuals.items()}


def algebra_suite(dim: int, seed: int, trials: int, tol: float = 1e-10) -> AlgebraSuiteResult:
    """Random-trial checks of the algebra axioms; reports the worst residual per property."""
    algebra = AlgebraSignature(dim)
    rng = np.random.default_rng(seed)
    chunk = max(1, PRODUCT_BUDGET // algebra.size**2)
    worst: Dict[str, float] = {}
    done = 0
    while done < trials:
        count = min(chunk, trials - done)
        for name, value in _chunk_residuals(rng, algebra, count).items():
            worst[name] = max(worst.get(name, 0.0), value)
        done += count
    logger.info(f"Algebra suite d={dim}: {trials} trials, worst residual {max(worst.values(), default=0.0):.3e}")
    return AlgebraSuiteResult(dim, seed, trials, tol, worst)


@dataclass(frozen=True)
class TableSuiteResult:
    checks: List[DerivativeCheck]
    gauge_deltas: Dict[str, float]
    cross_checks: Dict[str, float]
    tol: float
    gauge_tol: float

    @property
    def passed(self) -> bool:
        return (
            all(check.passed for check in self.checks)
            and all(delta <= self.gauge_tol for delta in self.gauge_deltas.values())
            and all(value <= self.tol for value in self.cross_checks.values())
        )


def table_suite(
    dims: Sequence[int],
    seed: int,
    points: int = 100,
    tol: float = 1e-6,
    gauge_tol: float = 1e-8,
    include_scenarios: bool = True,
    rows: Optional[Sequence[str]] = None,
) -> TableSuiteResult:
    """
    Derivative checks of every table row in each dimension (and of the
    scenario entries), a gauge check with a random constant added to F, and
    the radial row with g = 1 against the constant row.
    """
    rng = np.random.default_rng(seed)
    checks, gauge_deltas, cross_checks = [], {}, {}
    for dim in dims:
        algebra = AlgebraSignature(dim)
        direction = rng.standard_normal(dim)
        a = Multivector.vector(algebra, direction / np.linalg.norm(direction))
        for row in rows or TABLE_ROWS:
            entry = table_entry(row, dim, a=a if row == "ax" else None)
            check = entry.derivative_check(points, seed, tol)
            checks.append(replace_name(check, f"{row}[d={dim}]"))
            if points <= 0:
                continue
            constant = Multivector(algebra, rng.standard_normal(algebra.size))
            sample = entry.sample_points(points, seed)
            delta = np.max(np.abs(entry.with_gauge(constant).residuals(sample) - entry.residuals(sample)))
            gauge_deltas[f"{row}[d={dim}]"] = float(delta)

        if points <= 0:
            continue
        radial = table_entry("radial", dim, radial=lambda s: np.ones_like(s))
        const = table_entry("const", dim)
        sample = radial.sample_points(points, seed)
        gap = np.asarray((radial.antiderivative(sample) - const.antiderivative(sample)).norm())
        cross_checks[f"radial-vs-const[d={dim}]"] = float(np.max(gap))

    if include_scenarios:
        for name in SCENARIO_ENTRIES:
            checks.append(scenario_entry(name).derivative_check(points, seed, tol))
    logger.info(f"Table suite: {len(checks)} derivative checks, {sum(not c.passed for c in checks)} failing")
    return TableSuiteResult(checks, gauge_deltas, cross_checks, tol, gauge_tol)


def replace_name(check: DerivativeCheck, name: str) -> DerivativeCheck:
    return DerivativeCheck(name, check.points, check.max_residual, check.tol)
