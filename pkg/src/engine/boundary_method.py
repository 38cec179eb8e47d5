"""
Integration by iterated antiderivatives and boundary incisions.

A chain N_m ⊃ … ⊃ N_1 ⊃ N_0 carries one antiderivative per piece of each
level. The integral over N_m is the signed sum of the last level's
antiderivative over the finite point set N_0, up to the cost of the incisions
that were cut to create boundaries and avoid branch cuts.
"""

from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import (
    BoundUnavailable,
    ChainInvalid,
    OnBranchCut,
    OrientationError,
    ParameterError,
    VerificationError,
)
from ..utils import config_section, setup_logger
from .algebra import Multivector, exp_even, geometric_product, grade_select, inverse, log_spinor, norm, scalar_product
from .antiderivatives import AntiderivativeEntry
from .calculus import VectorField, differential
from .extrapolation import convergence_order, extrapolate_to_zero
from .manifolds import TWO_PI, CutCircle
from .quadrature import DirectedIntegralResult, QuadratureOracle, pairwise_sum, segment

logger = setup_logger(__name__)

PointSampler = Callable[[int], Multivector]
BRANCH_LIMIT = 1e-10
CUT_MARGIN = 1e-4


@dataclass(frozen=True)
class Incision:
    """
    A bounded region E cut from level `level`. `integrand` is the function
    integrated over that level, sampled on the region for its sup-norm
    unless a closed-form sup is known.
    """

    level: int
    name: str
    volume: float
    integrand: Optional[VectorField] = None
    sampler: Optional[PointSampler] = field(default=None, repr=False)
    closed_form_sup: Optional[float] = None

    def __post_init__(self):
        if not np.isfinite(self.volume) or self.volume < 0.0:
            raise ParameterError(f"Incision {self.name} has invalid volume {self.volume}")


@dataclass(frozen=True)
class IncisionBound:
    incision: Incision
    sup: float
    sup_bound: float
    estimated: bool

    @property
    def bound(self) -> float:
        return self.incision.volume * self.sup_bound


@dataclass(frozen=True)
class ChainPiece:
    """One connected manifold of a chain level, with its antiderivative."""

    name: str
    entry: AntiderivativeEntry
    parent: Optional[str] = None
    circle: Optional[CutCircle] = None
    outward: Optional[Callable[[Multivector], Multivector]] = field(default=None, repr=False)


@dataclass(frozen=True)
class ChainLevel:
    dim: int
    pieces: Tuple[ChainPiece, ...]


@dataclass(frozen=True)
class SignedPoint:
    point: Multivector
    sign: int
    piece: str
    side: str


@dataclass(frozen=True)
class IntegrationChain:
    scenario: str
    params: Dict[str, float]
    levels: Tuple[ChainLevel, ...]
    points: Tuple[SignedPoint, ...]
    incisions: Tuple[Incision, ...]
    pseudoscalar: Multivector
    expected: Optional[Multivector] = None
    oracle: Optional[DirectedIntegralResult] = None

    @property
    def dim(self) -> int:
        return self.levels[0].dim

    def pieces(self) -> List[ChainPiece]:
        return [piece for level in self.levels for piece in level.pieces]

    def piece(self, name: str) -> ChainPiece:
        for candidate in self.pieces():
            if candidate.name == name:
                return candidate
        raise ChainInvalid(f"No piece named {name!r} in the {self.scenario} chain")

    def with_oracle(self, oracle: Optional[DirectedIntegralResult]) -> "IntegrationChain":
        return replace(self, oracle=oracle)

    def coefficient(self, value: Multivector) -> float:
        """Coefficient of value along the chain's unit pseudoscalar."""
        return float(scalar_product(value, self.pseudoscalar))


@dataclass(frozen=True)
class SweepPoint:
    epsilon: float
    result: Multivector
    coefficient: float
    error_bound: float
    total_volume: float
    oracle_delta: Optional[float] = None
    theorem_holds: Optional[bool] = None


@dataclass(frozen=True)
class IntegrationReport:
    scenario: str
    params: Dict[str, float]
    result: Multivector
    coefficient: float
    error_bound: float
    incisions: Tuple[IncisionBound, ...]
    derivative_residual: float
    continuity_ratio: float
    expected: Optional[Multivector] = None
    oracle_value: Optional[Multivector] = None
    oracle_error: Optional[float] = None
    oracle_delta: Optional[float] = None
    theorem_holds: Optional[bool] = None
    sweep: Tuple[SweepPoint, ...] = ()
    extrapolated: Optional[Multivector] = None
    extrapolated_coefficient: Optional[float] = None
    convergence_order: Optional[float] = None
    bound_slope: Optional[float] = None
    linear_bound_holds: Optional[bool] = None

    @property
    def passed(self) -> bool:
        checks = [self.theorem_holds, self.linear_bound_holds] + [p.theorem_holds for p in self.sweep]
        return all(check is not False for check in checks)


@dataclass(frozen=True)
class ChangeOfVariables:
    point: Multivector
    y: Multivector
    tangent: Multivector
    dy: Multivector
    dx_closed: Multivector
    dx_pullback: Multivector
    residual: float
    ratio: float
    branch_start: float


class BoundaryMethod:
    """Runs integration chains and their verification ledger; settings from `boundary_method`."""

    def __init__(self, config: Optional[dict] = None, oracle: Optional[QuadratureOracle] = None):
        settings = config_section(config, "boundary_method")
        tolerances = config_section(config, "tolerances")
        self.safety_factor = float(settings.get("safety_factor", 1.1))
        self.sup_samples = int(settings.get("sup_samples", 257))
        self.continuity_samples = int(settings.get("continuity_samples", 1000))
        self.continuity_factor = float(settings.get("continuity_factor", 10.0))
        self.check_points = int(settings.get("check_points", 16))
        self.seed = int(config_section(config, "defaults").get("seed", 42))
        self.derivative_tol = float(tolerances.get("derivative_check", 1e-6))
        self.consistency_tol = float(tolerances.get("level_consistency", 1e-9))
        self.change_of_variables_tol = float(tolerances.get("change_of_variables", 1e-6))
        self.oracle = oracle if oracle is not None else QuadratureOracle(config)

    # --- incision bounds -------------------------------------------------------

    def incision_bound(self, incision: Incision, f: Optional[VectorField] = None) -> IncisionBound:
        if incision.volume == 0.0:
            return IncisionBound(incision, 0.0, 0.0, False)
        if f is None and incision.closed_form_sup is not None:
            sup = float(incision.closed_form_sup)
            return IncisionBound(incision, sup, sup * self.safety_factor, False)
        f = f if f is not None else incision.integrand
        if f is None or incision.sampler is None:
            raise BoundUnavailable(f"Incision {incision.name} has no integrand or sampler to bound")
        sizes = np.atleast_1d(np.asarray(norm(f(incision.sampler(self.sup_samples)))))
        if sizes.size == 0 or not np.all(np.isfinite(sizes)):
            raise BoundUnavailable(f"Integrand is not finite on incision {incision.name}")
        sup = float(np.max(sizes))
        return IncisionBound(incision, sup, sup * self.safety_factor, True)

    def lemma1_bound(self, incision: Incision, f: Optional[VectorField] = None) -> float:
        """vol(E) × sup_E ‖f‖ × safety factor; sampled unless a closed-form sup is attached."""
        return self.incision_bound(incision, f).bound

    @staticmethod
    def error_bound(bounds: Sequence[IncisionBound]) -> float:
        """max_i sup_i × Σ_i vol(E_i)."""
        if not bounds:
            return 0.0
        return max(b.sup_bound for b in bounds) * sum(b.incision.volume for b in bounds)

    # --- chain checks ---------------------------------------------------------

    def _check_structure(self, chain: IntegrationChain):
        if not chain.levels:
            raise ChainInvalid("Chain has no levels")
        names = set()
        for depth, level in enumerate(chain.levels):
            if level.dim != chain.dim - depth:
                raise ChainInvalid(f"Level {depth} has dimension {level.dim}, expected {chain.dim - depth}")
            for piece in level.pieces:
                if piece.entry.manifold.dim != level.dim:
                    raise ChainInvalid(f"Piece {piece.name} is {piece.entry.manifold.dim}-dimensional on level {level.dim}")
                if depth > 0 and piece.parent not in {p.name for p in chain.levels[depth - 1].pieces}:
                    raise ChainInvalid(f"Piece {piece.name} has no parent on the level above")
                names.add(piece.name)
        if chain.levels[-1].dim != 1:
            raise ChainInvalid("The last level of a chain must be one-dimensional")
        if not chain.points:
            raise ChainInvalid("N_0 is empty")
        terminal = {p.name for p in chain.levels[-1].pieces}
        for signed in chain.points:
            if signed.sign not in (1, -1):
                raise ChainInvalid(f"Sign {signed.sign} at {signed.piece} is not ±1")
            if signed.piece not in terminal:
                raise ChainInvalid(f"Point on {signed.piece} does not belong to the last level")
        for incision in chain.incisions:
            if not 1 <= incision.level <= chain.dim:
                raise ChainInvalid(f"Incision {incision.name} on level {incision.level} outside the chain")

    def _check_derivatives(self, chain: IntegrationChain) -> float:
        worst = 0.0
        for piece in chain.pieces():
            check = piece.entry.derivative_check(self.check_points, self.seed, self.derivative_tol)
            if not check.passed:
                raise ChainInvalid(f"Antiderivative on {piece.name} fails its derivative check ({check.max_residual:.3e})")
            worst = max(worst, check.max_residual)
        return worst

    def _check_consistency(self, chain: IntegrationChain):
        """Each piece integrates the antiderivative of its parent."""
        for piece in chain.pieces():
            if piece.parent is None:
                continue
            parent = chain.piece(piece.parent)
            points = piece.entry.sample_points(self.check_points, self.seed)
            expected = parent.entry.antiderivative(points)
            actual = piece.entry.integrand(points)
            gap = np.asarray(norm(actual - expected)) / np.maximum(1.0, np.asarray(norm(expected)))
            if np.max(gap) > self.consistency_tol:
                raise ChainInvalid(f"{piece.name} does not integrate the antiderivative of {parent.name}")

    def check_continuity(self, piece: ChainPiece) -> float:
        """
        Samples the antiderivative along the arc between the cut edges. An
        adjacent difference exceeding continuity_factor times both of its
        neighbours is a branch jump. Returns the largest neighbour ratio.
        """
        if piece.circle is None:
            return 0.0
        values = piece.entry.antiderivative(piece.circle.point(piece.circle.arc_angles(self.continuity_samples))).coeffs
        steps = np.sqrt(np.sum(np.diff(values, axis=0) ** 2, axis=-1))
        neighbours = np.maximum(np.concatenate([steps[1:2], steps[:-1]]), np.concatenate([steps[1:], steps[-2:-1]]))
        floor = 1e-12 * max(1.0, float(np.max(np.sqrt(np.sum(values**2, axis=-1)))))
        jumps = steps > self.continuity_factor * neighbours + floor
        if np.any(jumps):
            index = int(np.argmax(jumps))
            raise ChainInvalid(f"{piece.name}: antiderivative jumps by {steps[index]:.3e} inside the incised arc")
        ratios = np.divide(steps, neighbours, out=np.zeros_like(steps), where=neighbours > floor)
        return float(np.max(ratios)) if ratios.size else 0.0

    def traversal_sign(self, chain: IntegrationChain, piece: ChainPiece, phi: float) -> int:
        """
        Direction of I_face n at the circle point φ relative to the
        counterclockwise tangent, I_face the parent piece's pseudoscalar.
        """
        if piece.circle is None or piece.outward is None or piece.parent is None:
            raise OrientationError(f"{piece.name} carries no boundary orientation data")
        point = piece.circle.point(phi)
        face = chain.piece(piece.parent).entry.manifold.pseudoscalar(point)
        direction = grade_select(geometric_product(face, piece.outward(point)), 1)
        overlap = float(scalar_product(direction, piece.circle.ccw_tangent(phi)))
        if abs(overlap) < 1e-9:
            raise OrientationError(f"{piece.name}: boundary direction is not tangent to the circle")
        return 1 if overlap > 0 else -1

    def _check_signs(self, chain: IntegrationChain):
        for piece in chain.levels[-1].pieces:
            circle = piece.circle
            if circle is None:
                raise OrientationError(f"{piece.name} has no cut circle")
            for phi in circle.endpoint_angles:
                if self.traversal_sign(chain, piece, phi) != circle.traversal:
                    raise OrientationError(f"{piece.name}: declared traversal disagrees with I_M n")
            expected = dict(zip(("a", "b"), circle.endpoint_signs()))
            supplied = {p.side: p.sign for p in chain.points if p.piece == piece.name}
            if supplied != expected:
                raise OrientationError(f"{piece.name}: endpoint signs {supplied} should be {expected}")

    # --- evaluation -----------------------------------------------------------

    def evaluate(self, chain: IntegrationChain) -> Multivector:
        """Σ s_i F(x_i) over N_0, each F the antiderivative of the point's piece."""
        terms = [
            chain.piece(signed.piece).entry.antiderivative(signed.point).coeffs * signed.sign for signed in chain.points
        ]
        return Multivector(chain.pseudoscalar.algebra, pairwise_sum(np.stack(terms)))

    def run_chain(self, chain: IntegrationChain) -> IntegrationReport:
        self._check_structure(chain)
        residual = self._check_derivatives(chain)
        self._check_consistency(chain)
        ratio = max([self.check_continuity(piece) for piece in chain.levels[-1].pieces] + [0.0])
        self._check_signs(chain)

        result = self.evaluate(chain)
        bounds = tuple(self.incision_bound(incision) for incision in chain.incisions)
        error_bound = self.error_bound(bounds)
        report = IntegrationReport(
            chain.scenario,
            dict(chain.params),
            result,
            chain.coefficient(result),
            error_bound,
            bounds,
            residual,
            ratio,
            expected=chain.expected,
        )
        if chain.oracle is not None:
            delta = float((result - chain.oracle.value).norm())
            holds = delta <= error_bound + chain.oracle.estimated_error + 1e-12
            if not holds:
                logger.error(f"{chain.scenario}: |result - oracle| = {delta:.3e} exceeds bound {error_bound:.3e}")
            report = replace(
                report,
                oracle_value=chain.oracle.value,
                oracle_error=chain.oracle.estimated_error,
                oracle_delta=delta,
                theorem_holds=holds,
            )
        logger.debug(f"{chain.scenario}: coefficient {report.coefficient:.12g}, bound {error_bound:.3e}")
        return report

    def run_sweep(
        self,
        build: Callable[[float], IntegrationChain],
        epsilons: Sequence[float],
        oracle: Optional[DirectedIntegralResult] = None,
    ) -> IntegrationReport:
        """
        Runs the chain for each incision size, extrapolates the results to
        ε = 0 and fits the convergence order of |result(ε) − limit|.
        """
        epsilons = sorted((float(e) for e in epsilons), reverse=True)
        if not epsilons:
            raise ParameterError("The ε sweep is empty")
        reports = []
        for epsilon in epsilons:
            report = self.run_chain(build(epsilon).with_oracle(oracle))
            logger.info(f"{report.scenario} ε={epsilon:g}: coefficient {report.coefficient:.12g}")
            reports.append(report)

        chain = build(epsilons[-1])
        stacked = np.stack([r.result.coeffs for r in reports])
        limit = Multivector(chain.pseudoscalar.algebra, extrapolate_to_zero(epsilons, stacked))
        errors = np.array([float((r.result - limit).norm()) for r in reports])
        volumes = np.array([sum(b.incision.volume for b in r.incisions) for r in reports])
        sweep = tuple(
            SweepPoint(e, r.result, r.coefficient, r.error_bound, float(v), r.oracle_delta, r.theorem_holds)
            for e, r, v in zip(epsilons, reports, volumes)
        )

        order = None
        try:
            order = convergence_order(epsilons, errors)
        except ParameterError:
            logger.debug(f"{reports[-1].scenario}: sweep errors at the floor, no convergence order")

        slope, linear_holds = None, None
        if len(epsilons) >= 2 and np.ptp(volumes) > 0:
            slope = float(np.polyfit(volumes, errors, 1)[0])
            max_sup = max((b.sup_bound for r in reports for b in r.incisions), default=0.0)
            linear_holds = slope <= 1.2 * max_sup + 1e-12

        return replace(
            reports[-1],
            sweep=sweep,
            extrapolated=limit,
            extrapolated_coefficient=chain.coefficient(limit),
            convergence_order=order,
            bound_slope=slope,
            linear_bound_holds=linear_holds,
        )

    # --- branch cuts and change of variables ----------------------------------

    def verify_branch_cut_necessity(self, chain: IntegrationChain, eta: float = BRANCH_LIMIT) -> Multivector:
        """
        Jump of the last level's antiderivative across each cut, taken between
        points at angles η and 2π − η with the chain's signs. It must match the
        chain's result up to the incision cost of the incisions.
        """
        algebra = chain.pseudoscalar.algebra
        jump = Multivector.zeros(algebra)
        for piece in chain.levels[-1].pieces:
            circle = piece.circle
            if circle is None:
                continue
            sign_a, sign_b = circle.endpoint_signs()
            F = piece.entry.antiderivative
            jump = jump + F(circle.point(eta)) * float(sign_a) + F(circle.point(TWO_PI - eta)) * float(sign_b)
        result = self.evaluate(chain)
        bound = self.error_bound([self.incision_bound(incision) for incision in chain.incisions])
        deviation = float((jump - result).norm())
        if deviation > bound + 1e-12 * max(1.0, float(result.norm())):
            raise VerificationError(f"Cut jump differs from the chain result by {deviation:.3e} (bound {bound:.3e})")
        return jump

    def circle_change_of_variables(
        self,
        x0: Multivector,
        x: Multivector,
        plane: Optional[Multivector] = None,
        branch_start: Optional[float] = None,
    ) -> ChangeOfVariables:
        """
        Pulls the measure back through y = log(x x0) x0: the closed form
        dx = dy x0⁻¹ exp(y x0⁻¹) x0⁻¹ is compared with the tangent it came from
        and with the inverse of the finite-difference differential of y.
        """
        algebra = x0.algebra
        if algebra.dim != 2:
            raise ParameterError("The logarithmic change of variables is a map of the plane (d = 2)")
        plane = plane if plane is not None else Multivector.blade(algebra, 0b11)
        if float(x.norm()) == 0.0 or float(x0.norm()) == 0.0:
            raise ParameterError("x and x0 must be nonzero")

        angle = float(scalar_product(log_spinor(geometric_product(x, x0), plane), plane))
        if branch_start is None:
            start = angle - np.pi
        else:
            start = float(branch_start)
            offset = np.mod(angle - start, TWO_PI)
            if offset < CUT_MARGIN or offset > TWO_PI - CUT_MARGIN:
                raise OnBranchCut(f"Point lies on the cut of the branch starting at {start:g}")

        def y_map(points: Multivector) -> Multivector:
            return grade_select(geometric_product(log_spinor(geometric_product(points, x0), plane, start), x0), 1)

        y = y_map(x)
        tangent = grade_select(geometric_product(x, plane), 1) / float(x.norm())
        jacobian = differential(y_map, x)
        dy = jacobian(tangent)
        x0_inverse = inverse(x0)
        exponential = exp_even(geometric_product(y, x0_inverse))
        dx_closed = grade_select(
            geometric_product(geometric_product(geometric_product(dy, x0_inverse), exponential), x0_inverse), 1
        )
        dx_pullback = jacobian.inverse()(dy)
        residual = max(float((dx_closed - tangent).norm()), float((dx_closed - dx_pullback).norm()))
        if residual > self.change_of_variables_tol:
            raise VerificationError(f"Closed-form pullback differs from the differential by {residual:.3e}")
        ratio = float(dx_closed.norm()) / float(dy.norm())
        return ChangeOfVariables(x, y, tangent, dy, dx_closed, dx_pullback, residual, ratio, float(start))

    def line_reduced_circle_integral(
        self,
        x0: Multivector,
        radius: float,
        halfwidth: float,
        density: float = 1.0,
        plane: Optional[Multivector] = None,
        subdivisions: int = 64,
    ) -> Multivector:
        """
        Integral of (k/2) x over the cut circle, traversed clockwise, computed as
        a straight-line integral in y = log(x x0) x0 where dx x = r² dy x0⁻¹.
        """
        algebra = x0.algebra
        plane = plane if plane is not None else Multivector.blade(algebra, 0b11)
        u = x0 / float(x0.norm())
        v = grade_select(geometric_product(u, plane), 1)

        def y_of(phi: float) -> Multivector:
            point = u * (radius * np.cos(phi)) + v * (radius * np.sin(phi))
            return grade_select(geometric_product(log_spinor(geometric_product(point, x0), plane), x0), 1)

        start, end = y_of(TWO_PI - halfwidth), y_of(halfwidth)
        integrand = VectorField.constant(inverse(x0) * (0.5 * density * radius**2), "k r² x0⁻¹/2")
        return self.oracle.directed_integral(segment(algebra, start, end, subdivisions), integrand).value
