"""Unit tests for projections, the vector derivative and differentials."""
import numpy as np
import pytest

from src.engine.algebra import AlgebraSignature, Multivector, geometric_product
from src.engine.calculus import (
    LinearMap,
    VectorField,
    differential,
    finite_difference_step,
    project,
    reject,
    vector_derivative,
)
from src.engine.manifolds import circle, flat, plane
from src.errors import AlgebraMismatch, DomainError, OffManifold, SingularMap, StepUnderflow

R2 = AlgebraSignature(2)
R3 = AlgebraSignature(3)
E12 = Multivector.blade(R3, 0b011)


@pytest.fixture
def half_x_squared():
    """F(x) = x²/2, whose vector derivative is x."""
    return VectorField(R3, lambda x: Multivector.scalar(R3, 0.5 * np.asarray(x.norm_squared())), "x²/2")


def test_projection_and_rejection():
    a = Multivector.vector(R3, [1.0, 2.0, 3.0])
    assert project(E12, a).allclose(Multivector.vector(R3, [1.0, 2.0, 0.0]))
    assert reject(E12, a).allclose(Multivector.vector(R3, [0.0, 0.0, 3.0]))
    # idempotent, and independent of the blade's scale
    assert project(E12, project(E12, a)).allclose(project(E12, a))
    assert project(E12 * 5.0, a).allclose(project(E12, a), atol=1e-12)


def test_field_checks_algebra_and_domain():
    field = VectorField(R3, lambda x: x, "x", domain=lambda x: np.asarray(x.norm()) > 0)
    with pytest.raises(AlgebraMismatch):
        field(Multivector.vector(R2, [1.0, 0.0]))
    with pytest.raises(DomainError):
        field(Multivector.zeros(R3))


def test_constant_field_broadcasts_over_batch():
    value = Multivector.blade(R3, 0b111, 2.0)
    points = Multivector.vector(R3, np.zeros((4, 3)))
    result = VectorField.constant(value)(points)
    assert result.batch_shape == (4,)
    assert result[3].allclose(value)
    shifted = VectorField.zero(R3).plus_constant(value)
    assert shifted(points)[0].allclose(value)


def test_vector_derivative_flat(half_x_squared):
    """∂(x²/2) = x and ∂x = d on all of R^3."""
    x = Multivector.vector(R3, [[0.3, -0.2, 0.5], [1.5, 2.0, -1.0]])
    manifold = flat(R3)
    assert vector_derivative(half_x_squared, manifold, x).allclose(x, atol=1e-8)
    identity = VectorField(R3, lambda p: p, "x")
    expected = Multivector.scalar(R3, np.full(2, 3.0))
    assert vector_derivative(identity, manifold, x).allclose(expected, atol=1e-8)


def test_vector_derivative_on_plane(half_x_squared):
    """Projected onto a plane, ∂(x²/2) keeps only the in-plane part of x."""
    x = Multivector.vector(R3, [0.4, -0.7, 0.0])
    derivative = vector_derivative(half_x_squared, plane(R3, E12), x)
    assert derivative.allclose(x, atol=1e-8)
    # ∂x on a 2-plane is the plane's dimension
    identity = VectorField(R3, lambda p: p, "x")
    assert vector_derivative(identity, plane(R3, E12), x).allclose(Multivector.scalar(R3, 2.0), atol=1e-8)


def test_vector_derivative_on_circle():
    """On the unit circle the angle θ(x) has derivative equal to the unit tangent."""
    manifold = circle(R2, Multivector.zeros(R2), 1.0, Multivector.blade(R2, 0b11))

    def theta(x):
        c = x.components()
        return Multivector.scalar(R2, np.arctan2(c[..., 1], c[..., 0]))

    phi = 0.8
    x = Multivector.vector(R2, [np.cos(phi), np.sin(phi)])
    derivative = vector_derivative(VectorField(R2, theta, "θ"), manifold, x)
    assert derivative.allclose(Multivector.vector(R2, [-np.sin(phi), np.cos(phi)]), atol=1e-8)


def test_vector_derivative_is_second_order():
    """∂(x² x) = 5x² in R^3; central differences leave 3h², so halving h quarters the error."""

    def cubic(p):
        return geometric_product(Multivector.scalar(R3, np.asarray(p.norm_squared())), p)

    field = VectorField(R3, cubic, "x² x")
    x = Multivector.vector(R3, [0.3, -0.2, 0.5])
    exact = Multivector.scalar(R3, 5.0 * float(x.norm_squared()))
    errors = [float((vector_derivative(field, flat(R3), x, step=h) - exact).norm()) for h in (1e-2, 5e-3, 2.5e-3)]
    for coarse, fine in zip(errors, errors[1:]):
        assert 3.5 <= coarse / fine <= 4.5


def test_vector_derivative_rejects_off_manifold_points(half_x_squared):
    manifold = plane(R3, E12)
    with pytest.raises(OffManifold):
        vector_derivative(half_x_squared, manifold, Multivector.vector(R3, [0.0, 0.0, 1.0]))


def test_step_underflow():
    with pytest.raises(StepUnderflow):
        finite_difference_step(Multivector.vector(R3, [1.0, 0.0, 0.0]), step_scale=0.0)


def test_outermorphism_maps_pseudoscalar_to_determinant():
    matrix = np.array([[2.0, 1.0, 0.0], [0.0, 1.0, 3.0], [1.0, 0.0, 1.0]])
    linear = LinearMap(R3, matrix)
    I = Multivector.pseudoscalar(R3)
    assert linear(I).allclose(I * linear.determinant(), atol=1e-12)
    a, b = Multivector.vector(R3, [1.0, 2.0, 0.5]), Multivector.vector(R3, [0.0, -1.0, 1.0])
    assert linear(a ^ b).allclose(linear(a) ^ linear(b), atol=1e-12)
    assert linear.compose(linear.inverse()).matrix == pytest.approx(np.eye(3))


def test_linear_map_identity_and_singular():
    x = Multivector(R3, np.arange(8.0))
    assert LinearMap.identity(R3)(x).allclose(x)
    with pytest.raises(SingularMap):
        LinearMap(R3, np.zeros((3, 3))).inverse()


def test_differential_of_linear_map_is_its_matrix():
    matrix = np.array([[1.0, 2.0], [-1.0, 0.5]])
    linear = LinearMap(R2, matrix)
    jacobian = differential(linear, Multivector.vector(R2, [0.3, 0.9]))
    assert jacobian.matrix == pytest.approx(matrix, abs=1e-8)
