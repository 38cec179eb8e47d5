"""
Implicit vector manifolds, cut circles and branch metadata.

A manifold is the joint zero set of scalar constraints together with a unit
tangent pseudoscalar field. Scenarios supply closed-form retractions so that
fields defined only on the manifold can still be differentiated.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from numpy.typing import NDArray
from scipy.stats import qmc

from ..errors import DomainError, OrientationError
from .algebra import AlgebraSignature, Multivector, geometric_product, grade_select, norm
from .calculus import CBRT_EPS, project, reject

Constraint = Callable[[Multivector], NDArray[np.float64]]
PointMap = Callable[[Multivector], Multivector]
Sampler = Callable[[int, int], Multivector]

TWO_PI = 2.0 * np.pi


def halton(count: int, dim: int, seed: int) -> NDArray[np.float64]:
    """Scrambled Halton points in [0, 1)^dim."""
    return qmc.Halton(d=dim, scramble=True, seed=seed).random(count)


@dataclass(frozen=True)
class ImplicitManifold:
    algebra: AlgebraSignature
    dim: int
    constraints: Tuple[Constraint, ...] = field(repr=False)
    tangent_pseudoscalar: PointMap = field(repr=False)
    retraction: Optional[PointMap] = field(default=None, repr=False)
    sampler: Optional[Sampler] = field(default=None, repr=False)
    name: str = "manifold"

    def residuals(self, x: Multivector) -> NDArray[np.float64]:
        """Constraint values stacked on a trailing axis (empty for open subsets of R^d)."""
        if not self.constraints:
            return np.zeros(x.batch_shape + (0,))
        return np.stack([np.asarray(c(x), dtype=np.float64) for c in self.constraints], axis=-1)

    def max_residual(self, x: Multivector) -> float:
        values = self.residuals(x)
        return float(np.max(np.abs(values))) if values.size else 0.0

    def contains(self, x: Multivector, tol: float = 1e-9) -> NDArray[np.bool_]:
        values = self.residuals(x)
        if values.shape[-1] == 0:
            return np.ones(x.batch_shape, dtype=bool)
        return np.all(np.abs(values) <= tol, axis=-1)

    def pseudoscalar(self, x: Multivector) -> Multivector:
        return self.tangent_pseudoscalar(x)

    def retract(self, x: Multivector) -> Multivector:
        return x if self.retraction is None else self.retraction(x)

    def sample(self, count: int, seed: int = 0) -> Multivector:
        if self.sampler is None:
            raise DomainError(f"{self.name} has no sampler")
        return self.sampler(count, seed)

    def check_pseudoscalar(self, x: Multivector, tol: float = 1e-9) -> float:
        """Worst deviation of I_N(x) from a unit blade of grade dim; raises if above tol."""
        blade = self.pseudoscalar(x)
        off_grade = norm(blade - grade_select(blade, self.dim))
        unit = np.abs(np.asarray(norm(blade)) - 1.0)
        worst = float(np.max(np.maximum(off_grade, unit)))
        if worst > tol:
            raise DomainError(f"{self.name} pseudoscalar is not a unit {self.dim}-blade (deviation {worst:.3e})")
        return worst

    def check_orientation(self, path: Multivector) -> float:
        """
        Spot check of orientation continuity along an ordered batch of points.
        Returns the smallest overlap I(x_k) * I(x_{k+1}); a sign flip raises.
        """
        coeffs = self.pseudoscalar(path).coeffs
        overlaps = np.sum(coeffs[:-1] * coeffs[1:], axis=-1)
        smallest = float(np.min(overlaps)) if overlaps.size else 1.0
        if smallest <= 0.0:
            raise OrientationError(f"{self.name} pseudoscalar flips along the sampled path")
        return smallest


def flat(algebra: AlgebraSignature, low: float = -1.0, high: float = 1.0, orientation: int = 1) -> ImplicitManifold:
    """All of R^d, oriented by ±I_d; samples come from the box [low, high]^d."""
    pseudoscalar = Multivector.pseudoscalar(algebra) * float(orientation)

    def tangent(x: Multivector) -> Multivector:
        return Multivector(algebra, np.broadcast_to(pseudoscalar.coeffs, x.batch_shape + (algebra.size,)))

    def sampler(count: int, seed: int) -> Multivector:
        return Multivector.vector(algebra, low + (high - low) * halton(count, algebra.dim, seed))

    return ImplicitManifold(algebra, algebra.dim, (), tangent, None, sampler, f"R^{algebra.dim}")


def gradient(m: Constraint, x: Multivector, step_scale: float = 1.0) -> Multivector:
    """Central-difference gradient of a scalar function, as a grade-1 multivector."""
    algebra = x.algebra
    h = CBRT_EPS * np.maximum(1.0, np.sqrt(np.sum(x.components() ** 2, axis=-1))) * step_scale
    components = np.zeros(x.batch_shape + (algebra.dim,))
    for i in range(algebra.dim):
        shift = np.zeros(algebra.size)
        shift[1 << i] = 1.0
        forward = Multivector(algebra, x.coeffs + shift * h[..., None])
        backward = Multivector(algebra, x.coeffs - shift * h[..., None])
        components[..., i] = (np.asarray(m(forward)) - np.asarray(m(backward))) / (2.0 * h)
    return Multivector.vector(algebra, components)


def from_scalar_constraint(
    algebra: AlgebraSignature,
    m: Constraint,
    retraction: Optional[PointMap] = None,
    sampler: Optional[Sampler] = None,
    orientation: int = 1,
    name: str = "hypersurface",
    unit: Optional[Multivector] = None,
) -> ImplicitManifold:
    """
    Hypersurface m(x) = 0 with tangent pseudoscalar (∂m) I normalized,
    I the ambient unit pseudoscalar (e_1…e_d unless given).
    """
    unit = unit if unit is not None else Multivector.pseudoscalar(algebra)

    def tangent(x: Multivector) -> Multivector:
        blade = geometric_product(gradient(m, x), unit)
        size = np.asarray(norm(blade))
        if np.any(size < 1e-12):
            raise DomainError(f"{name}: constraint gradient vanishes")
        return blade * (float(orientation) / size)

    return ImplicitManifold(algebra, algebra.dim - 1, (m,), tangent, retraction, sampler, name)


def plane(
    algebra: AlgebraSignature,
    bivector: Multivector,
    origin: Optional[Multivector] = None,
    name: str = "plane",
) -> ImplicitManifold:
    """Affine plane through origin spanned by the unit bivector, oriented by it."""
    origin = origin if origin is not None else Multivector.zeros(algebra)

    def offset(x: Multivector) -> NDArray[np.float64]:
        return np.asarray(norm(reject(bivector, x - origin)))

    def tangent(x: Multivector) -> Multivector:
        return Multivector(algebra, np.broadcast_to(bivector.coeffs, x.batch_shape + (algebra.size,)))

    def retraction(x: Multivector) -> Multivector:
        return origin + project(bivector, x - origin)

    constraints = (offset,) if algebra.dim > 2 else ()
    return ImplicitManifold(algebra, 2, constraints, tangent, retraction, None, name)


@dataclass(frozen=True)
class BranchSpec:
    """Branch of the spinor logarithm: angles are taken in (start, start + 2π]."""

    start: float = -TWO_PI
    cut_direction: Optional[Multivector] = None
    description: str = "log(x x0) on (-2π, 0], cut toward +x0"

    @property
    def interval(self) -> Tuple[float, float]:
        return self.start, self.start + TWO_PI

    def contains(self, angle: NDArray[np.float64]) -> NDArray[np.bool_]:
        low, high = self.interval
        return (angle > low) & (angle <= high)

    def to_dict(self) -> dict:
        low, high = self.interval
        return {"interval": [low, high], "description": self.description}


@dataclass(frozen=True)
class CutCircle:
    """
    Circle of given radius around center in the plane of the unit bivector
    `plane`, with the arc |φ| < halfwidth removed around the direction u.

    φ is measured counterclockwise relative to `plane`, from u toward
    v = u·plane. traversal is +1 when the circle is run counterclockwise.
    """

    center: Multivector
    radius: float
    u: Multivector
    plane: Multivector
    traversal: int
    halfwidth: float

    @property
    def algebra(self) -> AlgebraSignature:
        return self.center.algebra

    @property
    def v(self) -> Multivector:
        return grade_select(geometric_product(self.u, self.plane), 1)

    def _angles(self, phi) -> NDArray[np.float64]:
        return np.asarray(phi, dtype=np.float64)

    def point(self, phi) -> Multivector:
        phi = self._angles(phi)
        return self.center + self.u * (self.radius * np.cos(phi)) + self.v * (self.radius * np.sin(phi))

    def ccw_tangent(self, phi) -> Multivector:
        phi = self._angles(phi)
        return self.u * (-np.sin(phi)) + self.v * np.cos(phi)

    def tangent(self, phi) -> Multivector:
        """Unit tangent along the traversal direction."""
        return self.ccw_tangent(phi) * float(self.traversal)

    @property
    def endpoint_angles(self) -> Tuple[float, float]:
        """(φ_a, φ_b) = (δ, 2π − δ), the two edges of the cut."""
        return self.halfwidth, TWO_PI - self.halfwidth

    def endpoints(self) -> Tuple[Multivector, Multivector]:
        phi_a, phi_b = self.endpoint_angles
        return self.point(phi_a), self.point(phi_b)

    def endpoint_signs(self) -> Tuple[int, int]:
        """+1 where the traversal leaves the arc, −1 where it enters."""
        return -self.traversal, self.traversal

    def arc_angles(self, count: int) -> NDArray[np.float64]:
        phi_a, phi_b = self.endpoint_angles
        return np.linspace(phi_a, phi_b, count)

    def cut_angles(self, count: int) -> NDArray[np.float64]:
        return np.linspace(-self.halfwidth, self.halfwidth, count)

    @property
    def cut_length(self) -> float:
        return 2.0 * self.halfwidth * self.radius

    def angle(self, x: Multivector) -> NDArray[np.float64]:
        """φ of x in [0, 2π)."""
        offset = x - self.center
        a = np.asarray(_dot(offset, self.u))
        b = np.asarray(_dot(offset, self.v))
        return np.mod(np.arctan2(b, a), TWO_PI)

    def on_cut(self, x: Multivector) -> NDArray[np.bool_]:
        phi = self.angle(x)
        return (phi < self.halfwidth) | (phi > TWO_PI - self.halfwidth)

    def manifold(self) -> ImplicitManifold:
        return circle(self.algebra, self.center, self.radius, self.plane, self.traversal, self.u)


def _dot(a: Multivector, b: Multivector):
    return np.sum(a.components() * b.components(), axis=-1)


def circle(
    algebra: AlgebraSignature,
    center: Multivector,
    radius: float,
    bivector: Multivector,
    orientation: int = 1,
    reference: Optional[Multivector] = None,
) -> ImplicitManifold:
    """Circle |p| = radius, p the projection of x − center onto the unit bivector's plane."""
    def planar(x: Multivector) -> Multivector:
        return project(bivector, x - center)

    def radial(x: Multivector) -> NDArray[np.float64]:
        return np.asarray(norm(planar(x))) - radius

    def off_plane(x: Multivector) -> NDArray[np.float64]:
        return np.asarray(norm(reject(bivector, x - center)))

    def tangent(x: Multivector) -> Multivector:
        p = planar(x)
        size = np.asarray(norm(p))
        if np.any(size < 1e-12):
            raise DomainError("Circle tangent undefined at the center")
        ccw = grade_select(geometric_product(p, bivector), 1) / size
        return ccw * float(orientation)

    def retraction(x: Multivector) -> Multivector:
        p = planar(x)
        return center + p * (radius / np.asarray(norm(p)))

    def sampler(count: int, seed: int) -> Multivector:
        start = reference if reference is not None else vector_in_plane(bivector)
        start = start / norm(start)
        v = grade_select(geometric_product(start, bivector), 1)
        phi = TWO_PI * halton(count, 1, seed)[:, 0]
        return center + start * (radius * np.cos(phi)) + v * (radius * np.sin(phi))

    constraints: Sequence[Constraint] = (radial, off_plane) if algebra.dim > 2 else (radial,)
    return ImplicitManifold(algebra, 1, tuple(constraints), tangent, retraction, sampler, f"circle(r={radius:g})")


def vector_in_plane(bivector: Multivector) -> Multivector:
    """Some nonzero vector in the plane of a bivector."""
    algebra = bivector.algebra
    for i in range(algebra.dim):
        candidate = project(bivector, Multivector.basis_vector(algebra, i))
        if norm(candidate) > 1e-6:
            return candidate
    raise DomainError("Bivector spans no plane")
