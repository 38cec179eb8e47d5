"""
Dense Clifford algebra over Euclidean R^d (2 <= d <= 8).

Coefficients are indexed by blade bitset (bit i set <=> generator e_{i+1}
present) in ascending bitset order. Every operation accepts coefficient arrays
with leading batch axes, so a single Multivector can hold many points.
"""

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, NamedTuple, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray

from ..errors import AlgebraMismatch, DomainError, InvalidDimension, NotInvertible

MIN_DIM = 2
MAX_DIM = 8

# Relative tolerances used by the validity checks below
INVERSE_TOL = 1e-10
BLADE_TOL = 1e-9

Scalar = Union[float, int, np.floating, np.integer]


class _Tables(NamedTuple):
    size: int
    grades: NDArray[np.int64]
    reverse_signs: NDArray[np.float64]
    xor_index: NDArray[np.int64]  # xor_index[k, i] = i ^ k
    gp: NDArray[np.float64]  # gp[k, i] = sign(e_i e_{i^k})
    outer: NDArray[np.float64]
    left: NDArray[np.float64]
    right: NDArray[np.float64]


@lru_cache(maxsize=None)
def _tables(dim: int) -> _Tables:
    size = 1 << dim
    idx = np.arange(size, dtype=np.int64)
    grades = np.bitwise_count(idx).astype(np.int64)

    # Canonical reordering sign: count transpositions needed to sort e_a e_b
    a = idx[:, None]
    b = idx[None, :]
    swaps = np.zeros((size, size), dtype=np.int64)
    shifted = a >> 1
    while np.any(shifted):
        swaps += np.bitwise_count(shifted & b).astype(np.int64)
        shifted = shifted >> 1
    sign = np.where(swaps % 2 == 0, 1.0, -1.0)

    xor_index = idx[None, :] ^ idx[:, None]
    partner = xor_index  # partner[k, i] = i ^ k
    gp = sign[idx[None, :], partner]
    common = idx[None, :] & partner
    outer = np.where(common == 0, gp, 0.0)
    # left: right operand blade contained in left operand blade
    left = np.where(common == partner, gp, 0.0)
    # right: left operand blade contained in right operand blade
    right = np.where(common == idx[None, :], gp, 0.0)

    reverse_signs = np.where(((grades * (grades - 1)) // 2) % 2 == 0, 1.0, -1.0)

    for table in (grades, reverse_signs, xor_index, gp, outer, left, right):
        table.setflags(write=False)
    return _Tables(size, grades, reverse_signs, xor_index, gp, outer, left, right)


def blade_label(bitset: int) -> str:
    """Human label for a basis blade: 0 -> '1', 0b101 -> 'e13'."""
    if bitset == 0:
        return "1"
    return "e" + "".join(str(i + 1) for i in range(MAX_DIM) if bitset >> i & 1)


@dataclass(frozen=True)
class AlgebraSignature:
    """Euclidean signature of R^dim; every generator squares to +1."""

    dim: int

    def __post_init__(self):
        if not isinstance(self.dim, (int, np.integer)) or not MIN_DIM <= self.dim <= MAX_DIM:
            raise InvalidDimension(f"Algebra dimension must be in [{MIN_DIM}, {MAX_DIM}], got {self.dim}")

    @property
    def size(self) -> int:
        return 1 << self.dim

    @property
    def tables(self) -> _Tables:
        return _tables(int(self.dim))

    def grade_of(self, bitset: int) -> int:
        return int(self.tables.grades[bitset])

    def labels(self) -> list:
        return [blade_label(i) for i in range(self.size)]


def _as_scalar_array(value) -> NDArray[np.float64]:
    return np.asarray(value, dtype=np.float64)


def _reduce(values: NDArray[np.float64]):
    """Unbatched results come back as plain floats."""
    return float(values) if np.ndim(values) == 0 else values


@dataclass(frozen=True, eq=False)
class Multivector:
    """
    Immutable multivector (or batch of multivectors) of one algebra.
    coeffs has shape (..., 2^dim).
    """

    algebra: AlgebraSignature
    coeffs: NDArray[np.float64]

    # ndarray * Multivector must dispatch to __rmul__
    __array_ufunc__ = None

    def __post_init__(self):
        coeffs = np.array(self.coeffs, dtype=np.float64)
        if coeffs.ndim == 0 or coeffs.shape[-1] != self.algebra.size:
            raise ValueError(f"Expected trailing axis of length {self.algebra.size}, got shape {coeffs.shape}")
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)

    # --- constructors -------------------------------------------------------

    @classmethod
    def zeros(cls, algebra: AlgebraSignature, batch_shape: tuple = ()) -> "Multivector":
        return cls(algebra, np.zeros(tuple(batch_shape) + (algebra.size,)))

    @classmethod
    def scalar(cls, algebra: AlgebraSignature, value: ArrayLike) -> "Multivector":
        value = _as_scalar_array(value)
        coeffs = np.zeros(value.shape + (algebra.size,))
        coeffs[..., 0] = value
        return cls(algebra, coeffs)

    @classmethod
    def vector(cls, algebra: AlgebraSignature, components: ArrayLike) -> "Multivector":
        """Grade-1 multivector(s) from components of shape (..., dim)."""
        components = _as_scalar_array(components)
        if components.shape[-1] != algebra.dim:
            raise ValueError(f"Expected {algebra.dim} vector components, got shape {components.shape}")
        coeffs = np.zeros(components.shape[:-1] + (algebra.size,))
        coeffs[..., [1 << i for i in range(algebra.dim)]] = components
        return cls(algebra, coeffs)

    @classmethod
    def basis_vector(cls, algebra: AlgebraSignature, index: int) -> "Multivector":
        """Generator e_{index+1} (index is zero-based)."""
        return cls.blade(algebra, 1 << index)

    @classmethod
    def blade(cls, algebra: AlgebraSignature, bitset: int, value: float = 1.0) -> "Multivector":
        coeffs = np.zeros(algebra.size)
        coeffs[bitset] = value
        return cls(algebra, coeffs)

    @classmethod
    def pseudoscalar(cls, algebra: AlgebraSignature) -> "Multivector":
        return cls.blade(algebra, algebra.size - 1)

    # --- structure ----------------------------------------------------------

    @property
    def batch_shape(self) -> tuple:
        return self.coeffs.shape[:-1]

    @property
    def is_batched(self) -> bool:
        return len(self.batch_shape) > 0

    def __getitem__(self, index) -> "Multivector":
        """Batch indexing; the blade axis is never indexed."""
        if not self.is_batched:
            raise TypeError("Only batched multivectors can be indexed")
        return Multivector(self.algebra, self.coeffs[index])

    def __len__(self) -> int:
        if not self.is_batched:
            raise TypeError("Unbatched multivector has no length")
        return self.batch_shape[0]

    def coefficient(self, bitset: int):
        return _reduce(self.coeffs[..., bitset])

    def components(self) -> NDArray[np.float64]:
        """Grade-1 components, shape (..., dim)."""
        return np.array(self.coeffs[..., [1 << i for i in range(self.algebra.dim)]])

    def grade(self, k: int) -> "Multivector":
        return grade_select(self, k)

    def grades(self, tol: float = 1e-12) -> set:
        """Grades with at least one coefficient above tol (over the whole batch)."""
        mask = np.abs(self.coeffs) > tol
        present = np.any(mask.reshape(-1, self.algebra.size), axis=0)
        return {int(g) for g in self.algebra.tables.grades[present]}

    def scalar_part(self):
        return _reduce(self.coeffs[..., 0])

    # --- arithmetic ---------------------------------------------------------

    def _coerce(self, other) -> "Multivector":
        if isinstance(other, Multivector):
            _check_same(self, other)
            return other
        return Multivector.scalar(self.algebra, other)

    def __add__(self, other):
        other = self._coerce(other)
        return Multivector(self.algebra, self.coeffs + other.coeffs)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        return Multivector(self.algebra, self.coeffs - other.coeffs)

    def __rsub__(self, other):
        other = self._coerce(other)
        return Multivector(self.algebra, other.coeffs - self.coeffs)

    def __neg__(self):
        return Multivector(self.algebra, -self.coeffs)

    def __mul__(self, other):
        if isinstance(other, Multivector):
            return geometric_product(self, other)
        factor = _as_scalar_array(other)
        return Multivector(self.algebra, self.coeffs * factor[..., None])

    def __rmul__(self, other):
        factor = _as_scalar_array(other)
        return Multivector(self.algebra, self.coeffs * factor[..., None])

    def __truediv__(self, other):
        if isinstance(other, Multivector):
            return geometric_product(self, inverse(other))
        divisor = _as_scalar_array(other)
        return Multivector(self.algebra, self.coeffs / divisor[..., None])

    def __xor__(self, other):
        return outer_product(self, other)

    def __invert__(self):
        return reverse(self)

    # --- convenience wrappers ----------------------------------------------

    def reverse(self) -> "Multivector":
        return reverse(self)

    def inverse(self) -> "Multivector":
        return inverse(self)

    def dual(self) -> "Multivector":
        return dual(self)

    def norm(self):
        return norm(self)

    def norm_squared(self):
        return _reduce(np.sum(self.coeffs**2, axis=-1))

    def allclose(self, other: "Multivector", atol: float = 1e-12) -> bool:
        _check_same(self, other)
        return bool(np.allclose(self.coeffs, other.coeffs, rtol=0.0, atol=atol))

    def __repr__(self) -> str:
        if self.is_batched:
            return f"Multivector(dim={self.algebra.dim}, batch={self.batch_shape})"
        terms = [
            f"{c:+.6g}{'' if i == 0 else '*' + blade_label(i)}" for i, c in enumerate(self.coeffs) if c != 0.0
        ]
        return f"Multivector({' '.join(terms) or '0'})"


@dataclass(frozen=True, eq=False)
class Blade(Multivector):
    """
    Simple k-vector: a single nonzero grade whose B B~ is a nonnegative scalar.
    Houses pseudoscalars and measure directions.
    """

    k: int = -1

    def __post_init__(self):
        super().__post_init__()
        present = self.grades()
        if self.k < 0:
            if len(present) != 1:
                raise DomainError(f"Blade must have exactly one grade, found {sorted(present)}")
            object.__setattr__(self, "k", present.pop())
        elif present - {self.k}:
            raise DomainError(f"Blade declared grade {self.k} but has grades {sorted(present)}")
        square = geometric_product(self, reverse(self))
        scale = np.maximum(np.sum(self.coeffs**2, axis=-1), 1e-300)
        residual = np.sqrt(np.sum(square.coeffs[..., 1:] ** 2, axis=-1))
        if np.any(residual > BLADE_TOL * scale):
            raise DomainError("B B~ is not a scalar: element is not a simple blade")

    @classmethod
    def of(cls, mv: Multivector, k: int = -1) -> "Blade":
        return cls(mv.algebra, mv.coeffs, k)

    @classmethod
    def from_vectors(cls, vectors: Iterable[Multivector]) -> "Blade":
        vectors = list(vectors)
        if not vectors:
            raise ValueError("At least one vector is required")
        result = vectors[0]
        for v in vectors[1:]:
            result = outer_product(result, v)
        return cls(result.algebra, result.coeffs, len(vectors))


def _check_same(a: Multivector, b: Multivector):
    if a.algebra != b.algebra:
        raise AlgebraMismatch(f"Operands live in R^{a.algebra.dim} and R^{b.algebra.dim}")


def _product(a: Multivector, b: Multivector, weights: NDArray[np.float64]) -> Multivector:
    _check_same(a, b)
    tables = a.algebra.tables
    # out[..., k] = sum_i a[..., i] * b[..., i ^ k] * w[k, i]
    coeffs = np.einsum("...i,...ki,ki->...k", a.coeffs, b.coeffs[..., tables.xor_index], weights)
    return Multivector(a.algebra, coeffs)


def geometric_product(a: Multivector, b: Multivector) -> Multivector:
    return _product(a, b, a.algebra.tables.gp)


def outer_product(a: Multivector, b: Multivector) -> Multivector:
    return _product(a, b, a.algebra.tables.outer)


def left_contraction(a: Multivector, b: Multivector) -> Multivector:
    """A ⌊ B: grade r - s part of <A>_r <B>_s, terms with r < s dropped."""
    return _product(a, b, a.algebra.tables.left)


def right_contraction(a: Multivector, b: Multivector) -> Multivector:
    """A ⌋ B: grade s - r part of <A>_r <B>_s, terms with s < r dropped."""
    return _product(a, b, a.algebra.tables.right)


def reverse(a: Multivector) -> Multivector:
    return Multivector(a.algebra, a.coeffs * a.algebra.tables.reverse_signs)


def grade_select(a: Multivector, k: int) -> Multivector:
    mask = (a.algebra.tables.grades == k).astype(np.float64)
    return Multivector(a.algebra, a.coeffs * mask)


def scalar_product(a: Multivector, b: Multivector):
    """A * B = <A B~>_0; every basis blade satisfies e_I e_I~ = 1 in a Euclidean metric."""
    _check_same(a, b)
    return _reduce(np.sum(a.coeffs * b.coeffs, axis=-1))


def norm(a: Multivector):
    return _reduce(np.sqrt(np.sum(a.coeffs**2, axis=-1)))


def dual(a: Multivector) -> Multivector:
    """Right multiplication by the unit pseudoscalar."""
    return geometric_product(a, Multivector.pseudoscalar(a.algebra))


def inverse(a: Multivector) -> Multivector:
    """A^-1 = A~ / (A A~) for versors and invertible blades."""
    rev = reverse(a)
    square = geometric_product(a, rev)
    scale = np.sum(a.coeffs**2, axis=-1)
    residual = np.sqrt(np.sum(square.coeffs[..., 1:] ** 2, axis=-1))
    denominator = square.coeffs[..., 0]
    if np.any(scale <= 0.0) or np.any(np.abs(denominator) <= 1e-300):
        raise NotInvertible("Cannot invert a zero multivector")
    if np.any(residual > INVERSE_TOL * scale):
        raise NotInvertible("A A~ is not a scalar; only versors and blades are invertible")
    return Multivector(a.algebra, rev.coeffs / denominator[..., None])


def exp_bivector(b: Multivector) -> Multivector:
    """exp(B) = cos θ + B sin θ / θ for B² = -θ²."""
    square = geometric_product(b, b)
    scale = np.maximum(np.sum(b.coeffs**2, axis=-1), 1.0)
    residual = np.sqrt(np.sum(square.coeffs[..., 1:] ** 2, axis=-1))
    if np.any(residual > INVERSE_TOL * scale):
        raise DomainError("exp_bivector requires B² to be a scalar")
    theta_sq = -square.coeffs[..., 0]
    if np.any(theta_sq < -INVERSE_TOL * scale):
        raise DomainError("exp_bivector requires B² <= 0 in a Euclidean algebra")
    theta = np.sqrt(np.maximum(theta_sq, 0.0))
    safe = np.where(theta > 1e-8, theta, 1.0)
    sinc = np.where(theta > 1e-8, np.sin(safe) / safe, 1.0 - theta_sq / 6.0)
    return Multivector.scalar(b.algebra, np.cos(theta)) + b * sinc


def exp_even(z: Multivector) -> Multivector:
    """exp of scalar + bivector; the two parts commute."""
    return exp_bivector(grade_select(z, 2)) * np.exp(_as_scalar_array(z.coeffs[..., 0]))


def log_spinor(r: Multivector, plane: Multivector, branch_start: float = -2.0 * np.pi) -> Multivector:
    """
    Logarithm of R = a + b I₂ in the even subalgebra spanned by {1, I₂}.
    The angle is returned in the branch interval (branch_start, branch_start + 2π].
    """
    _check_same(r, plane)
    plane_sq = geometric_product(plane, plane)
    if not np.allclose(plane_sq.coeffs, Multivector.scalar(plane.algebra, -1.0).coeffs, atol=BLADE_TOL):
        raise DomainError("log_spinor requires a unit bivector plane (I₂² = -1)")
    a = r.coeffs[..., 0]
    b = -geometric_product(r, plane).coeffs[..., 0]
    residual = r - (Multivector.scalar(r.algebra, a) + plane * b)
    modulus = np.hypot(a, b)
    if np.any(modulus <= 0.0):
        raise DomainError("log_spinor of a zero-norm element")
    if np.any(np.sqrt(np.sum(residual.coeffs**2, axis=-1)) > INVERSE_TOL * np.maximum(modulus, 1.0)):
        raise DomainError("log_spinor input is not in span{1, I₂}")
    angle = np.arctan2(b, a)
    top = branch_start + 2.0 * np.pi
    angle = top - np.mod(top - angle, 2.0 * np.pi)
    return Multivector.scalar(r.algebra, np.log(modulus)) + plane * angle
