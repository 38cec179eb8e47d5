"""
Closed-form antiderivatives with numeric self-checks.

Each entry pairs an integrand f with an antiderivative F on a manifold and can
verify ∂_N F = f by finite differences at quasi-random on-manifold points.
The integration constant is always zero.
"""

import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional

import numpy as np
from numpy.typing import NDArray
from scipy import integrate

from ..errors import DomainError, ParameterError, RadialIntegrationError, UnknownEntry
from ..utils import setup_logger
from .algebra import AlgebraSignature, Multivector, geometric_product, left_contraction, log_spinor, norm, scalar_product
from .calculus import VectorField, project, reject, vector_derivative
from .manifolds import (
    TWO_PI,
    BranchSpec,
    ImplicitManifold,
    circle,
    flat,
    from_scalar_constraint,
    halton,
    plane,
    vector_in_plane,
)

logger = setup_logger(__name__)

TABLE_ROWS = ("const", "x", "x_hat", "ax", "radial")
SCENARIO_ENTRIES = ("disk-interior", "circle", "cylinder-volume", "cylinder-side", "cylinder-cap")

# Points this close to a singular set or a branch cut are not checked
EXCLUSION_MARGIN = 1e-2

Predicate = Callable[[Multivector], NDArray[np.bool_]]
RadialFn = Callable[[NDArray[np.float64]], NDArray[np.float64]]


@dataclass(frozen=True)
class DerivativeCheck:
    entry: str
    points: int
    max_residual: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.max_residual <= self.tol

    def to_dict(self) -> dict:
        return {
            "entry": self.entry,
            "points": self.points,
            "max_residual": self.max_residual,
            "tol": self.tol,
            "passed": self.passed,
        }


@dataclass(frozen=True)
class AntiderivativeEntry:
    name: str
    manifold: ImplicitManifold
    integrand: VectorField
    antiderivative: VectorField
    formula: str
    excluded: Optional[Predicate] = field(default=None, repr=False)
    branch: Optional[BranchSpec] = None
    params: Dict[str, float] = field(default_factory=dict)

    @property
    def algebra(self) -> AlgebraSignature:
        return self.manifold.algebra

    def with_gauge(self, constant: Multivector) -> "AntiderivativeEntry":
        """Same entry with F shifted by a constant multivector."""
        return replace(self, antiderivative=self.antiderivative.plus_constant(constant))

    def sample_points(self, count: int, seed: int = 0) -> Multivector:
        """count on-manifold points outside the excluded set."""
        if count <= 0:
            return Multivector.zeros(self.algebra, (0,))
        kept = []
        total, attempt = 0, 0
        while total < count:
            batch = self.manifold.sample(4 * count, seed + attempt)
            if self.excluded is not None:
                batch = batch[~np.asarray(self.excluded(batch))]
            kept.append(batch.coeffs)
            total += batch.batch_shape[0]
            attempt += 1
            if attempt > 16:
                raise DomainError(f"{self.name}: sampler rarely lands outside the excluded set")
        return Multivector(self.algebra, np.concatenate(kept)[:count])

    def residuals(self, points: Multivector, step_scale: float = 1.0) -> NDArray[np.float64]:
        """Per-point ‖∂F − f‖ / max(1, ‖f‖)."""
        derivative = vector_derivative(self.antiderivative, self.manifold, points, step_scale=step_scale)
        expected = self.integrand(points)
        return np.asarray(norm(derivative - expected)) / np.maximum(1.0, np.asarray(norm(expected)))

    def derivative_check(
        self, count: int = 100, seed: int = 0, tol: float = 1e-6, step_scale: float = 1.0
    ) -> DerivativeCheck:
        points = self.sample_points(count, seed)
        worst = float(np.max(self.residuals(points, step_scale))) if count > 0 else 0.0
        logger.debug(f"{self.name}: max derivative residual {worst:.3e} over {count} points")
        return DerivativeCheck(self.name, count, worst, tol)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "formula": self.formula,
            "manifold": self.manifold.name,
            "dim": self.algebra.dim,
            "branch": self.branch.to_dict() if self.branch is not None else None,
            "params": {key: value for key, value in sorted(self.params.items())},
        }


# --- Table of flat-space antiderivatives -------------------------------------


def _points_norm(x: Multivector) -> NDArray[np.float64]:
    return np.sqrt(np.sum(x.components() ** 2, axis=-1))


def _near_origin(x: Multivector) -> NDArray[np.bool_]:
    return _points_norm(x) < 10 * EXCLUSION_MARGIN


def _unit_radial_default(s: NDArray[np.float64]) -> NDArray[np.float64]:
    return np.exp(-s * s)


def radial_antiderivative_by_quadrature(radial: RadialFn, dim: int) -> RadialFn:
    """G(ρ) = ∫_0^ρ s^(d-1) g(s) ds by adaptive 1-D quadrature, one call per radius."""

    def integrand(s: float) -> float:
        return s ** (dim - 1) * float(radial(np.asarray(s)))

    def G(rho: NDArray[np.float64]) -> NDArray[np.float64]:
        rho = np.asarray(rho, dtype=np.float64)
        values = np.empty(rho.shape)
        with warnings.catch_warnings():
            warnings.simplefilter("error", integrate.IntegrationWarning)
            for index, radius in np.ndenumerate(rho):
                try:
                    values[index], _ = integrate.quad(integrand, 0.0, float(radius), epsabs=1e-15, epsrel=1e-13, limit=200)
                except integrate.IntegrationWarning as exc:
                    raise RadialIntegrationError(f"Radial integrand not integrable up to {radius:g}: {exc}") from exc
                if not np.isfinite(values[index]):
                    raise RadialIntegrationError(f"Radial integral diverges at {radius:g}")
        return values

    return G


def table_entry(
    name: str,
    dim: int,
    a: Optional[Multivector] = None,
    radial: Optional[RadialFn] = None,
    radial_antiderivative: Optional[RadialFn] = None,
) -> AntiderivativeEntry:
    """
    One row of the flat-space table on R^dim:
    const, x, x_hat, ax (with a constant vector a) or radial (with g(|x|)).
    """
    algebra = AlgebraSignature(dim)
    manifold = flat(algebra)
    d = float(dim)

    def scalar(values) -> Multivector:
        return Multivector.scalar(algebra, values)

    if name == "const":
        f = VectorField(algebra, lambda x: scalar(np.ones(x.batch_shape)), "1")
        F = VectorField(algebra, lambda x: x / d, "x/d")
        return AntiderivativeEntry(name, manifold, f, F, "(1/d) x")

    if name == "x":
        f = VectorField(algebra, lambda x: x, "x")
        F = VectorField(algebra, lambda x: scalar(0.5 * scalar_product(x, x)), "x²/2")
        return AntiderivativeEntry(name, manifold, f, F, "(1/2) x²")

    if name == "x_hat":
        f = VectorField(algebra, lambda x: x / _points_norm(x), "x̂", domain=lambda x: ~_zero(x))
        F = VectorField(algebra, lambda x: scalar(_points_norm(x)), "|x|")
        return AntiderivativeEntry(name, manifold, f, F, "|x|", excluded=_near_origin)

    if name == "ax":
        a = a if a is not None else Multivector.basis_vector(algebra, 0)
        if a.algebra != algebra or a.grades() - {1}:
            raise ParameterError("Row 'ax' needs a constant vector a of the same algebra")

        def ax_antiderivative(x: Multivector) -> Multivector:
            x_dot_a = scalar_product(x, a)
            x_sq = scalar_product(x, x)
            return (x * (2.0 * x_dot_a) - a * (0.5 * d * np.asarray(x_sq))) / (d + 2.0)

        f = VectorField(algebra, lambda x: geometric_product(a, x), "a x")
        F = VectorField(algebra, ax_antiderivative, "(2x(x⌋a) - d x² a/2)/(d+2)")
        params = {f"a{i + 1}": float(c) for i, c in enumerate(a.components())}
        return AntiderivativeEntry(name, manifold, f, F, "(2x(x⌋a) − (1/2)d x² a)/(d+2)", params=params)

    if name == "radial":
        g = radial if radial is not None else _unit_radial_default
        G = radial_antiderivative if radial_antiderivative is not None else radial_antiderivative_by_quadrature(g, dim)

        def radial_field(x: Multivector) -> Multivector:
            return scalar(g(_points_norm(x)))

        def radial_F(x: Multivector) -> Multivector:
            rho = _points_norm(x)
            return x * (np.asarray(G(rho)) / rho**dim)

        f = VectorField(algebra, radial_field, "g(|x|)")
        F = VectorField(algebra, radial_F, "x/|x|^d ∫ s^(d-1) g(s) ds", domain=lambda x: ~_zero(x))
        return AntiderivativeEntry(name, manifold, f, F, "x/|x|^d ∫_0^|x| s^(d−1) g(s) ds", excluded=_near_origin)

    raise UnknownEntry(f"Unknown table row {name!r}; expected one of {', '.join(TABLE_ROWS)}")


def _zero(x: Multivector) -> NDArray[np.bool_]:
    return _points_norm(x) == 0.0


# --- Scenario antiderivatives ------------------------------------------------


def circle_field(
    center: Multivector, bivector: Multivector, constant: Multivector, linear: Multivector, name: str = "A + p B"
) -> VectorField:
    """A + p B with p the projection of x − center onto the plane of the bivector."""

    def fn(x: Multivector) -> Multivector:
        p = project(bivector, x - center)
        return geometric_product(p, linear) + constant

    return VectorField(center.algebra, fn, name)


def circle_antiderivative(
    center: Multivector,
    bivector: Multivector,
    reference: Multivector,
    constant: Multivector,
    linear: Multivector,
    branch: BranchSpec,
) -> VectorField:
    """
    x A + p² log(p p0) B: antiderivative of A + p B on any circle around center
    in the plane of the bivector, using ∂ x = 1 and ∂ log(p p0) = p⁻¹ there.
    """

    def fn(x: Multivector) -> Multivector:
        p = project(bivector, x - center)
        logarithm = log_spinor(geometric_product(p, reference), bivector, branch.start)
        return geometric_product(x, constant) + geometric_product(logarithm * np.asarray(scalar_product(p, p)), linear)

    return VectorField(center.algebra, fn, "x A + p² log(p p0) B")


def _scenario_algebra(params: dict, default_dim: int) -> AlgebraSignature:
    return AlgebraSignature(int(params.get("dim", default_dim)))


def _cut_predicate(center: Multivector, bivector: Multivector, reference: Multivector, margin: float) -> Predicate:
    u = reference / reference.norm()
    v = geometric_product(u, bivector).grade(1)

    def predicate(x: Multivector) -> NDArray[np.bool_]:
        offset = x - center
        phi = np.arctan2(np.asarray(scalar_product(offset, v)), np.asarray(scalar_product(offset, u)))
        return np.abs(phi) < margin

    return predicate


def scenario_entry(name: str, **params) -> AntiderivativeEntry:
    """
    Antiderivatives on scenario submanifolds.

    disk-interior: f = k on the plane of `plane`, F = k x/2.
    circle: f = A + p B on a circle, F = x A + p² log(p p0) B, cut toward `reference`.
    cylinder-volume / cylinder-side / cylinder-cap: the three levels of the
    cylinder chain in R^3 with integrand scale `scale` (1/3 by default).
    """
    if name == "disk-interior":
        algebra = _scenario_algebra(params, 2)
        bivector = params.get("plane", Multivector.blade(algebra, 0b11))
        k = float(params.get("density", 1.0))
        radius = float(params.get("radius", 1.0))
        manifold = replace(plane(algebra, bivector), sampler=_disk_sampler(algebra, bivector, radius))
        f = VectorField(algebra, lambda x: Multivector.scalar(algebra, np.full(x.batch_shape, k)), "k")
        F = VectorField(algebra, lambda x: x * (0.5 * k), "k x/2")
        return AntiderivativeEntry(name, manifold, f, F, "(k/2) x", params={"density": k, "radius": radius})

    if name == "circle":
        algebra = _scenario_algebra(params, 2)
        center = params.get("center", Multivector.zeros(algebra))
        radius = float(params.get("radius", 1.0))
        bivector = params.get("plane", Multivector.blade(algebra, 0b11))
        reference = params.get("reference", vector_in_plane(bivector))
        constant = params.get("A", Multivector.zeros(algebra))
        linear = params.get("B", Multivector.scalar(algebra, 0.5))
        branch = BranchSpec(float(params.get("branch_start", -TWO_PI)), reference)
        manifold = circle(algebra, center, radius, bivector, 1, reference)
        f = circle_field(center, bivector, constant, linear)
        F = circle_antiderivative(center, bivector, reference, constant, linear, branch)
        excluded = _cut_predicate(center, bivector, reference, EXCLUSION_MARGIN)
        return AntiderivativeEntry(
            name, manifold, f, F, "x A + p² log(p p0) B", excluded=excluded, branch=branch, params={"radius": radius}
        )

    if name in ("cylinder-volume", "cylinder-side", "cylinder-cap"):
        return _cylinder_entry(name, **params)

    raise UnknownEntry(f"Unknown scenario entry {name!r}; expected one of {', '.join(SCENARIO_ENTRIES)}")


def _disk_sampler(algebra: AlgebraSignature, bivector: Multivector, radius: float):
    u = vector_in_plane(bivector)
    u = u / u.norm()
    v = geometric_product(u, bivector).grade(1)

    def sampler(count: int, seed: int) -> Multivector:
        unit = halton(count, 2, seed)
        rho = radius * np.sqrt(unit[:, 0])
        phi = TWO_PI * unit[:, 1]
        return u * (rho * np.cos(phi)) + v * (rho * np.sin(phi))

    return sampler


def cylinder_axis(bivector: Multivector, pseudoscalar: Multivector) -> Multivector:
    """Unit axis n with ω n = I_3."""
    axis = geometric_product(bivector.inverse(), pseudoscalar).grade(1)
    return axis / axis.norm()


def _cylinder_entry(name: str, **params) -> AntiderivativeEntry:
    algebra = AlgebraSignature(3)
    bivector = params.get("plane", Multivector.blade(algebra, 0b011))
    pseudoscalar = params.get("pseudoscalar", Multivector.pseudoscalar(algebra))
    radius = float(params.get("radius", 1.0))
    height = float(params.get("height", 1.0))
    scale = float(params.get("scale", 1.0 / 3.0))
    axis = cylinder_axis(bivector, pseudoscalar)
    u = vector_in_plane(bivector)
    u = u / u.norm()
    v = geometric_product(u, bivector).grade(1)
    integrand = VectorField(algebra, lambda x: x * scale, "x/3")
    summary = {"radius": radius, "height": height, "scale": scale}

    if name == "cylinder-volume":

        def sampler(count: int, seed: int) -> Multivector:
            unit = halton(count, 3, seed)
            rho = radius * np.sqrt(unit[:, 0])
            phi = TWO_PI * unit[:, 1]
            return u * (rho * np.cos(phi)) + v * (rho * np.sin(phi)) + axis * (height * unit[:, 2])

        manifold = replace(flat(algebra), sampler=sampler, name="cylinder")
        one = VectorField(algebra, lambda x: Multivector.scalar(algebra, np.ones(x.batch_shape)), "1")
        F = VectorField(algebra, lambda x: x / 3.0, "x/3")
        return AntiderivativeEntry(name, manifold, one, F, "x/3", params=summary)

    if name == "cylinder-side":

        def constraint(x: Multivector) -> NDArray[np.float64]:
            planar = left_contraction(bivector, x)
            return np.asarray(scalar_product(planar, planar)) - radius**2

        def retraction(x: Multivector) -> Multivector:
            planar = project(bivector, x)
            return reject(bivector, x) + planar * (radius / np.asarray(norm(planar)))

        def sampler(count: int, seed: int) -> Multivector:
            unit = halton(count, 2, seed)
            phi = TWO_PI * unit[:, 0]
            return u * (radius * np.cos(phi)) + v * (radius * np.sin(phi)) + axis * (height * unit[:, 1])

        manifold = from_scalar_constraint(algebra, constraint, retraction, sampler, 1, "cylinder-side", pseudoscalar)
        F = VectorField(algebra, lambda x: geometric_product(reject(bivector, x), x) * scale, "r_ω(x) x/3")
        return AntiderivativeEntry(name, manifold, integrand, F, "r_ω(x) x / 3", params=summary)

    # cylinder-cap: the disk of radius cap_radius at height `level`
    level = float(params.get("level", height))
    orientation = float(params.get("orientation", 1.0))
    cap_radius = float(params.get("cap_radius", radius))
    origin = axis * level
    disk = _disk_sampler(algebra, bivector, cap_radius)
    manifold = replace(
        plane(algebra, bivector * orientation, origin, "cylinder-cap"),
        sampler=lambda count, seed: disk(count, seed) + origin,
    )

    def cap(x: Multivector) -> Multivector:
        p = project(bivector, x)
        half_square = Multivector.scalar(algebra, 0.5 * np.asarray(scalar_product(p, p)))
        return (half_square + geometric_product(p, reject(bivector, x)) * 0.5) * scale

    F = VectorField(algebra, cap, "(p²/2 + p r_ω(x)/2)/3")
    summary.update({"level": level, "orientation": orientation})
    return AntiderivativeEntry(name, manifold, integrand, F, "(p_ω(x)²/2 + p_ω(x) r_ω(x)/2) / 3", params=summary)


def catalog(dims: Optional[List[int]] = None) -> List[dict]:
    """JSON-ready description of every table row (per dimension) and scenario entry."""
    entries = []
    for dim in dims or [2, 3, 4]:
        for row in TABLE_ROWS:
            entries.append(table_entry(row, dim).to_dict())
    for name in SCENARIO_ENTRIES:
        entries.append(scenario_entry(name).to_dict())
    return entries
