"""
Directed midpoint quadrature over parameterized patches.

The measure d^m x at each node is the wedge of the chart partials (central
differences) times the cell volume, multiplied onto the integrand from the
left. Node contributions are reduced with a fixed pairwise tree, chunk by
chunk, so the result does not depend on how chunks are scheduled.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Tuple

import numpy as np
from numpy.typing import NDArray

from ..errors import DegenerateMeasure, NonConvergence, ParameterError
from ..utils import config_section, setup_logger, worker_count
from .algebra import AlgebraSignature, Multivector, geometric_product, outer_product
from .calculus import VectorField, vector_derivative
from .manifolds import ImplicitManifold

logger = setup_logger(__name__)

DEGENERATE_NORM = 1e-12
PARTIAL_STEP = 6e-6

Chart = Callable[[NDArray[np.float64]], Multivector]


@dataclass(frozen=True)
class ManifoldPatch:
    """Smooth chart from the parameter box [0, 1]^dim into R^d."""

    algebra: AlgebraSignature
    dim: int
    chart: Chart = field(repr=False)
    orientation: int = 1
    subdivisions: int = 64
    name: str = "patch"
    allow_degenerate: bool = False

    def __post_init__(self):
        if self.dim < 0 or self.dim > self.algebra.dim:
            raise ParameterError(f"Patch dimension {self.dim} not in [0, {self.algebra.dim}]")
        if self.orientation not in (1, -1):
            raise ParameterError(f"Orientation must be ±1, got {self.orientation}")
        if self.subdivisions < 1:
            raise ParameterError(f"Subdivisions must be positive, got {self.subdivisions}")

    def points(self, u: NDArray[np.float64]) -> Multivector:
        return self.chart(_as_nodes(u, self.dim))

    def with_subdivisions(self, subdivisions: int) -> "ManifoldPatch":
        return replace(self, subdivisions=subdivisions)

    def partials(self, u: NDArray[np.float64], step: float) -> List[Multivector]:
        result = []
        for j in range(self.dim):
            shift = np.zeros(self.dim)
            shift[j] = step
            result.append((self.points(u + shift) - self.points(u - shift)) / (2.0 * step))
        return result

    def measure_blades(self, u: NDArray[np.float64], step: float) -> Multivector:
        """Unscaled ∂_1 y ∧ … ∧ ∂_m y at parameter nodes (orientation included)."""
        u = _as_nodes(u, self.dim)
        blade = Multivector.scalar(self.algebra, np.full(u.shape[0], float(self.orientation)))
        for partial in self.partials(u, step):
            blade = outer_product(blade, partial)
        return blade


@dataclass(frozen=True)
class DirectedIntegralResult:
    value: Multivector
    cells: int
    estimated_error: float
    converged: bool = True
    subdivisions: int = 0


def pairwise_sum(values: NDArray[np.float64]) -> NDArray[np.float64]:
    """Sum along axis 0 with a fixed balanced tree."""
    values = np.asarray(values, dtype=np.float64)
    if values.shape[0] == 0:
        return np.zeros(values.shape[1:])
    while values.shape[0] > 1:
        if values.shape[0] % 2:
            values = np.concatenate([values, np.zeros((1,) + values.shape[1:])])
        values = values[0::2] + values[1::2]
    return values[0]


def derivative_field(
    f: VectorField,
    manifold: ImplicitManifold,
    step_scale: float = 1.0,
    tol: float = 1e-9,
) -> VectorField:
    """∂_N f as a field, evaluated pointwise by finite differences."""

    def fn(x: Multivector) -> Multivector:
        return vector_derivative(f, manifold, x, step_scale=step_scale, tol=tol)

    return VectorField(f.algebra, fn, f"∂{f.name}")


class QuadratureOracle:
    """
    Brute-force directed integration used to cross-check closed forms.
    Settings come from the `quadrature` config section.
    """

    def __init__(self, config: Optional[dict] = None):
        settings = config_section(config, "quadrature")
        self.max_cells = int(settings.get("max_cells", 2**22))
        self.chunk_size = int(settings.get("chunk_size", 16384))
        self.workers = worker_count(int(settings.get("workers", 1)))
        self.step_scale = float(config_section(config, "calculus").get("step_scale", 1.0))
        self.on_manifold_tol = float(config_section(config, "tolerances").get("on_manifold", 1e-9))

    def _chunk_sum(self, patch: ManifoldPatch, f: VectorField, n: int, start: int, stop: int, scalar_measure: bool):
        algebra = patch.algebra
        indices = np.unravel_index(np.arange(start, stop), (n,) * patch.dim)
        u = (np.stack(indices, axis=-1).astype(np.float64) + 0.5) / n
        step = min(PARTIAL_STEP, 0.25 / n)
        blades = patch.measure_blades(u, step)
        sizes = np.sqrt(np.sum(blades.coeffs**2, axis=-1))
        degenerate = sizes < DEGENERATE_NORM
        if np.any(degenerate) and not patch.allow_degenerate:
            raise DegenerateMeasure(f"{patch.name}: measure blade vanishes at {int(degenerate.sum())} nodes")
        cell = (1.0 / n) ** patch.dim
        if scalar_measure:
            # d^m x I^-1 = |d^m x| for a unit pseudoscalar I along the measure
            measure = Multivector.scalar(algebra, sizes * cell)
        else:
            measure = blades * cell
        measure = Multivector(algebra, np.where(degenerate[:, None], 0.0, measure.coeffs))
        values = f(patch.points(u))
        return pairwise_sum(geometric_product(measure, values).coeffs)

    def _point_value(self, patch: ManifoldPatch, f: VectorField) -> NDArray[np.float64]:
        point = patch.points(np.zeros((1, 0)))
        return float(patch.orientation) * f(point).coeffs[0]

    def integrate_once(
        self, patch: ManifoldPatch, f: VectorField, subdivisions: int, scalar_measure: bool = False
    ) -> Multivector:
        """Midpoint sum at a fixed number of cells per axis."""
        if patch.dim == 0:
            return Multivector(patch.algebra, self._point_value(patch, f))
        total = subdivisions**patch.dim
        bounds = [(start, min(start + self.chunk_size, total)) for start in range(0, total, self.chunk_size)]

        def run(bound: Tuple[int, int]):
            return self._chunk_sum(patch, f, subdivisions, bound[0], bound[1], scalar_measure)

        if self.workers > 1 and len(bounds) > 1:
            with ThreadPoolExecutor(max_workers=self.workers) as executor:
                partial_sums = list(executor.map(run, bounds))
        else:
            partial_sums = [run(bound) for bound in bounds]
        return Multivector(patch.algebra, pairwise_sum(np.stack(partial_sums)))

    def directed_integral(
        self,
        patch: ManifoldPatch,
        f: VectorField,
        tol: Optional[float] = None,
        scalar_measure: bool = False,
        strict: bool = False,
    ) -> DirectedIntegralResult:
        """
        ∫ d^m x f(x) over the patch.

        Without tol the patch's own subdivision is used and the error estimate
        compares it with half as many cells per axis. With tol the subdivision
        doubles until the estimate drops below tol or max_cells is reached.
        """
        if patch.dim == 0:
            value = self.integrate_once(patch, f, 1, scalar_measure)
            return DirectedIntegralResult(value, 1, 0.0, True, 1)

        n = patch.subdivisions
        coarse = self.integrate_once(patch, f, max(1, n // 2), scalar_measure)
        fine = self.integrate_once(patch, f, n, scalar_measure)
        error = _richardson_error(fine, coarse)
        converged = tol is None or error <= tol
        while not converged and (2 * n) ** patch.dim <= self.max_cells:
            n *= 2
            coarse, fine = fine, self.integrate_once(patch, f, n, scalar_measure)
            error = _richardson_error(fine, coarse)
            converged = error <= tol
            logger.debug(f"{patch.name}: {n} cells/axis, estimated error {error:.3e}")
        if not converged:
            message = f"{patch.name}: estimated error {error:.3e} above tol {tol:.3e} at the {self.max_cells} cell cap"
            if strict:
                raise NonConvergence(message)
            logger.warning(message)
        return DirectedIntegralResult(fine, n**patch.dim, error, converged, n)

    def boundary_patches(self, patch: ManifoldPatch) -> List[ManifoldPatch]:
        """
        The 2m faces of the parameter box, oriented so that the face measure
        equals I_M n with n the outward normal.
        """
        if patch.dim < 1:
            raise ParameterError("A 0-dimensional patch has no boundary")
        m = patch.dim
        faces = []
        for axis in range(m):
            for side, value in ((-1, 0.0), (1, 1.0)):
                faces.append(
                    ManifoldPatch(
                        patch.algebra,
                        m - 1,
                        _face_chart(patch.chart, axis, value, m),
                        side * (-1) ** (m - 1 - axis) * patch.orientation,
                        patch.subdivisions,
                        f"{patch.name}[u{axis}={value:g}]",
                        patch.allow_degenerate,
                    )
                )
        return faces

    def boundary_integral(self, patch: ManifoldPatch, f: VectorField) -> DirectedIntegralResult:
        """Sum of the face integrals at the patch's subdivision."""
        results = [self.directed_integral(face, f) for face in self.boundary_patches(patch)]
        value = Multivector(patch.algebra, pairwise_sum(np.stack([r.value.coeffs for r in results])))
        return DirectedIntegralResult(
            value,
            sum(r.cells for r in results),
            float(sum(r.estimated_error for r in results)),
            all(r.converged for r in results),
            patch.subdivisions,
        )

    def fundamental_theorem_sides(
        self, patch: ManifoldPatch, F: VectorField, manifold: ImplicitManifold
    ) -> Tuple[DirectedIntegralResult, DirectedIntegralResult]:
        """(∫_M d^m x ∂F, ∫_∂M d^{m-1} x F) at the patch's subdivision."""
        derivative = derivative_field(F, manifold, self.step_scale, self.on_manifold_tol)
        interior = self.directed_integral(patch, derivative)
        boundary = self.boundary_integral(patch, F)
        return interior, boundary

    def verify_fundamental_theorem(self, patch: ManifoldPatch, F: VectorField, manifold: ImplicitManifold) -> float:
        interior, boundary = self.fundamental_theorem_sides(patch, F, manifold)
        residual = float((interior.value - boundary.value).norm())
        logger.info(f"Fundamental theorem on {patch.name} with {F.name}: residual {residual:.3e}")
        return residual


def _richardson_error(fine: Multivector, coarse: Multivector) -> float:
    return float((fine - coarse).norm()) / 3.0


def _as_nodes(u, dim: int) -> NDArray[np.float64]:
    """Parameter nodes as an (N, dim) array; a 0-dimensional patch has a single node."""
    u = np.asarray(u, dtype=np.float64)
    if dim == 0:
        return np.zeros((1, 0))
    return u if u.ndim == 2 else u.reshape(-1, dim)


def _face_chart(chart: Chart, axis: int, value: float, m: int) -> Chart:
    def face(v: NDArray[np.float64]) -> Multivector:
        v = _as_nodes(v, m - 1)
        u = np.insert(v, axis, value, axis=1)
        return chart(u)

    return face


# --- patch factories ---------------------------------------------------------


def _frame(vectors: List[Multivector]) -> NDArray[np.float64]:
    return np.stack([v.components() for v in vectors])


def unit_box(algebra: AlgebraSignature, dim: int, subdivisions: int = 64) -> ManifoldPatch:
    """u ↦ Σ u_j e_{j+1}; the unit square for dim 2, the unit cube for dim 3."""
    basis = np.eye(algebra.dim)[:dim]

    def chart(u: NDArray[np.float64]) -> Multivector:
        return Multivector.vector(algebra, u @ basis)

    names = {1: "unit-interval", 2: "unit-square", 3: "unit-cube"}
    return ManifoldPatch(algebra, dim, chart, 1, subdivisions, names.get(dim, f"unit-box-{dim}"))


def segment(algebra: AlgebraSignature, start: Multivector, end: Multivector, subdivisions: int = 64) -> ManifoldPatch:
    a, b = start.components(), end.components()

    def chart(u: NDArray[np.float64]) -> Multivector:
        return Multivector.vector(algebra, a + u[:, :1] * (b - a))

    return ManifoldPatch(algebra, 1, chart, 1, subdivisions, "segment")


def arc(
    algebra: AlgebraSignature,
    radius: float,
    u: Multivector,
    v: Multivector,
    start: float,
    stop: float,
    center: Optional[Multivector] = None,
    subdivisions: int = 64,
) -> ManifoldPatch:
    """Arc center + radius (cos φ u + sin φ v), φ running from start to stop."""
    frame = _frame([u, v])
    offset = center.components() if center is not None else np.zeros(algebra.dim)

    def chart(p: NDArray[np.float64]) -> Multivector:
        phi = start + (stop - start) * p[:, 0]
        planar = np.stack([np.cos(phi), np.sin(phi)], axis=-1) * radius
        return Multivector.vector(algebra, offset + planar @ frame)

    return ManifoldPatch(algebra, 1, chart, 1, subdivisions, f"arc(r={radius:g})")


def circle_patch(
    algebra: AlgebraSignature,
    radius: float,
    u: Multivector,
    v: Multivector,
    center: Optional[Multivector] = None,
    subdivisions: int = 256,
) -> ManifoldPatch:
    patch = arc(algebra, radius, u, v, 0.0, 2.0 * np.pi, center, subdivisions)
    return replace(patch, name=f"circle(r={radius:g})")


def disk_polar(
    algebra: AlgebraSignature,
    radius: float,
    u: Multivector,
    v: Multivector,
    subdivisions: int = 512,
) -> ManifoldPatch:
    """(ρ, φ) = (r u_0, 2π u_1); measure along +u∧v. The center face is degenerate."""
    frame = _frame([u, v])

    def chart(p: NDArray[np.float64]) -> Multivector:
        rho = radius * p[:, 0]
        phi = 2.0 * np.pi * p[:, 1]
        planar = np.stack([rho * np.cos(phi), rho * np.sin(phi)], axis=-1)
        return Multivector.vector(algebra, planar @ frame)

    return ManifoldPatch(algebra, 2, chart, 1, subdivisions, f"disk(r={radius:g})", allow_degenerate=True)


def cylinder_polar(
    algebra: AlgebraSignature,
    radius: float,
    height: float,
    u: Multivector,
    v: Multivector,
    axis: Multivector,
    subdivisions: int = 64,
) -> ManifoldPatch:
    """(ρ, φ, z) = (r u_0, 2π u_1, h u_2); measure along +u∧v∧axis."""
    frame = _frame([u, v, axis])

    def chart(p: NDArray[np.float64]) -> Multivector:
        rho = radius * p[:, 0]
        phi = 2.0 * np.pi * p[:, 1]
        coords = np.stack([rho * np.cos(phi), rho * np.sin(phi), height * p[:, 2]], axis=-1)
        return Multivector.vector(algebra, coords @ frame)

    return ManifoldPatch(
        algebra, 3, chart, 1, subdivisions, f"cylinder(r={radius:g},h={height:g})", allow_degenerate=True
    )
