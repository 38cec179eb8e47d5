"""
Tangent projections, the projected vector derivative and differentials of maps.

Points are grade-1 multivectors, batched or not. Fields are callables on such
points and must accept batches, since every derivative evaluates all shifted
points of one axis in a single call.
"""

from dataclasses import dataclass, field
from functools import cached_property
from typing import TYPE_CHECKING, Callable, Optional

import numpy as np
from numpy.typing import NDArray

from ..errors import AlgebraMismatch, DomainError, OffManifold, SingularMap, StepUnderflow
from .algebra import (
    AlgebraSignature,
    Multivector,
    geometric_product,
    grade_select,
    inverse,
    left_contraction,
    outer_product,
)

if TYPE_CHECKING:
    from .manifolds import ImplicitManifold

CBRT_EPS = float(np.cbrt(np.finfo(np.float64).eps))
SINGULAR_DET = 1e-12

FieldFn = Callable[[Multivector], Multivector]
DomainFn = Callable[[Multivector], NDArray[np.bool_]]


@dataclass(frozen=True)
class VectorField:
    """
    A multivector-valued function of a point in R^d.

    manifold_only marks fields that are only meaningful on their manifold;
    derivatives then evaluate them at retracted points.
    """

    algebra: AlgebraSignature
    fn: FieldFn = field(repr=False)
    name: str = "field"
    domain: Optional[DomainFn] = field(default=None, repr=False)
    manifold_only: bool = False

    def __call__(self, x: Multivector) -> Multivector:
        if x.algebra != self.algebra:
            raise AlgebraMismatch(f"Field {self.name} lives in R^{self.algebra.dim}, point in R^{x.algebra.dim}")
        if self.domain is not None and not np.all(self.domain(x)):
            raise DomainError(f"Field {self.name} evaluated outside its domain")
        value = self.fn(x)
        if value.algebra != self.algebra:
            raise AlgebraMismatch(f"Field {self.name} returned a value in another algebra")
        return value

    def plus_constant(self, constant: Multivector) -> "VectorField":
        """Same field shifted by a constant multivector (a gauge change for antiderivatives)."""
        return VectorField(self.algebra, lambda x: self.fn(x) + constant, f"{self.name}+C", self.domain, self.manifold_only)

    @classmethod
    def constant(cls, value: Multivector, name: str = "constant") -> "VectorField":
        def fn(x: Multivector) -> Multivector:
            return Multivector(value.algebra, np.broadcast_to(value.coeffs, x.batch_shape + (value.algebra.size,)))

        return cls(value.algebra, fn, name)

    @classmethod
    def zero(cls, algebra: AlgebraSignature) -> "VectorField":
        return cls.constant(Multivector.zeros(algebra), "zero")


def project(blade: Multivector, a: Multivector) -> Multivector:
    """p_B(a) = B^-1 (B ⌊ a), the component of a inside the subspace of B."""
    return grade_select(geometric_product(inverse(blade), left_contraction(blade, a)), 1)


def reject(blade: Multivector, a: Multivector) -> Multivector:
    """r_B(a) = a - p_B(a), the component of a orthogonal to B."""
    return a - project(blade, a)


def finite_difference_step(x: Multivector, step_scale: float = 1.0) -> NDArray[np.float64]:
    """
    Central-difference step h = eps^(1/3) max(1, |x|) step_scale, per point.
    Raises StepUnderflow when the step no longer changes the point.
    """
    magnitude = np.maximum(1.0, np.sqrt(np.sum(x.components() ** 2, axis=-1)))
    h = CBRT_EPS * magnitude * step_scale
    if np.any(~np.isfinite(h)) or np.any(magnitude + h == magnitude):
        raise StepUnderflow(f"Finite-difference step underflows (step_scale={step_scale})")
    return h


def _shift(x: Multivector, axis: int, amount: NDArray[np.float64]) -> Multivector:
    coeffs = np.array(x.coeffs)
    coeffs[..., 1 << axis] += amount
    return Multivector(x.algebra, coeffs)


def vector_derivative(
    f: VectorField,
    manifold: "ImplicitManifold",
    x: Multivector,
    step_scale: float = 1.0,
    step: Optional[float] = None,
    check_on_manifold: bool = True,
    tol: float = 1e-9,
) -> Multivector:
    """
    Projected vector derivative ∂_N f at x.

    Sum over ambient axes of p(e_i) times the central difference of f along e_i,
    with the projection frozen at x. Fields flagged manifold_only are sampled at
    the manifold's retraction of each shifted point.
    """
    algebra = manifold.algebra
    if check_on_manifold:
        residual = manifold.max_residual(x)
        if residual > tol:
            raise OffManifold(f"Point is {residual:.3e} off {manifold.name}")
    h = finite_difference_step(x, step_scale) if step is None else np.full(x.batch_shape, float(step))
    pseudoscalar = manifold.pseudoscalar(x)

    total = Multivector.zeros(algebra, x.batch_shape)
    for i in range(algebra.dim):
        forward, backward = _shift(x, i, h), _shift(x, i, -h)
        if f.manifold_only:
            forward, backward = manifold.retract(forward), manifold.retract(backward)
        difference = (f(forward) - f(backward)) / (2.0 * h)
        direction = project(pseudoscalar, Multivector.basis_vector(algebra, i))
        total = total + geometric_product(direction, difference)
    return total


@dataclass(frozen=True, eq=False)
class LinearMap:
    """
    Linear vector map given by its matrix on the orthonormal basis
    (column j holds the image of e_{j+1}), extended to all grades by outermorphism.
    """

    algebra: AlgebraSignature
    matrix: NDArray[np.float64]

    def __post_init__(self):
        matrix = np.array(self.matrix, dtype=np.float64)
        if matrix.shape != (self.algebra.dim, self.algebra.dim):
            raise ValueError(f"Expected a {self.algebra.dim}x{self.algebra.dim} matrix, got {matrix.shape}")
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)

    @classmethod
    def identity(cls, algebra: AlgebraSignature) -> "LinearMap":
        return cls(algebra, np.eye(algebra.dim))

    @cached_property
    def outermorphism(self) -> NDArray[np.float64]:
        """Matrix acting on blade coefficients; column I is the image of e_I."""
        algebra = self.algebra
        images = np.zeros((algebra.size, algebra.size))
        images[0, 0] = 1.0
        columns = [Multivector.scalar(algebra, 1.0)]
        for bitset in range(1, algebra.size):
            low = (bitset & -bitset).bit_length() - 1
            image = Multivector.vector(algebra, self.matrix[:, low])
            # e_I = e_low ∧ e_rest since low is the smallest generator in I
            columns.append(outer_product(image, columns[bitset ^ (1 << low)]))
            images[:, bitset] = columns[bitset].coeffs
        return images

    def __call__(self, a: Multivector) -> Multivector:
        if a.algebra != self.algebra:
            raise AlgebraMismatch("Linear map applied to a multivector of another algebra")
        return Multivector(self.algebra, a.coeffs @ self.outermorphism.T)

    def determinant(self) -> float:
        return float(np.linalg.det(self.matrix))

    def inverse(self) -> "LinearMap":
        det = self.determinant()
        if abs(det) < SINGULAR_DET:
            raise SingularMap(f"Jacobian determinant {det:.3e} is below {SINGULAR_DET}")
        return LinearMap(self.algebra, np.linalg.inv(self.matrix))

    def compose(self, other: "LinearMap") -> "LinearMap":
        """self ∘ other"""
        return LinearMap(self.algebra, self.matrix @ other.matrix)


def differential(
    mapping: Callable[[Multivector], Multivector],
    x: Multivector,
    step_scale: float = 1.0,
    step: Optional[float] = None,
) -> LinearMap:
    """Finite-difference Jacobian of a point map at a single point x."""
    if x.is_batched:
        raise ValueError("differential is taken at a single point")
    algebra = x.algebra
    h = float(finite_difference_step(x, step_scale)) if step is None else float(step)
    shifted = np.repeat(x.coeffs[None, :], 2 * algebra.dim, axis=0)
    for i in range(algebra.dim):
        shifted[2 * i, 1 << i] += h
        shifted[2 * i + 1, 1 << i] -= h
    images = mapping(Multivector(algebra, shifted)).components()
    matrix = (images[0::2] - images[1::2]).T / (2.0 * h)
    return LinearMap(algebra, matrix)
