"""Unit tests for implicit manifolds and cut circles."""
import numpy as np
import pytest

from src.engine.algebra import AlgebraSignature, Multivector
from src.engine.manifolds import (
    TWO_PI,
    BranchSpec,
    CutCircle,
    ImplicitManifold,
    circle,
    flat,
    from_scalar_constraint,
    halton,
    plane,
    vector_in_plane,
)
from src.errors import DomainError, NotInvertible, OrientationError

R2 = AlgebraSignature(2)
R3 = AlgebraSignature(3)
E12_2 = Multivector.blade(R2, 0b11)
E23 = Multivector.blade(R3, 0b110)


def test_halton_is_seeded():
    assert np.array_equal(halton(16, 2, 5), halton(16, 2, 5))
    points = halton(64, 3, 0)
    assert points.shape == (64, 3)
    assert np.all((points >= 0) & (points < 1))


def test_flat_samples_inside_box():
    manifold = flat(R3, 0.0, 2.0)
    points = manifold.sample(50, seed=1)
    assert points.batch_shape == (50,)
    assert np.all((points.components() >= 0.0) & (points.components() <= 2.0))
    assert manifold.max_residual(points) == 0.0
    assert manifold.pseudoscalar(points)[0].allclose(Multivector.pseudoscalar(R3))
    assert manifold.check_pseudoscalar(points) <= 1e-12


def test_plane_membership_and_retraction():
    manifold = plane(R3, E23)
    inside = Multivector.vector(R3, [0.0, 1.0, -2.0])
    outside = Multivector.vector(R3, [0.5, 1.0, -2.0])
    assert manifold.contains(inside)
    assert not manifold.contains(outside)
    assert manifold.retract(outside).allclose(inside)
    with pytest.raises(DomainError):
        manifold.sample(3)


def test_circle_samples_lie_on_circle():
    center = Multivector.vector(R3, [0.0, 0.0, 1.0])
    manifold = circle(R3, center, 2.0, Multivector.blade(R3, 0b011))
    points = manifold.sample(32, seed=3)
    assert manifold.max_residual(points) < 1e-12
    tangents = manifold.pseudoscalar(points)
    assert tangents.grades() == {1}
    assert np.allclose(tangents.norm(), 1.0)
    # retraction pulls a nearby point back onto the circle
    assert manifold.contains(manifold.retract(Multivector.vector(R3, [2.3, 0.1, 1.0])))


def test_circle_orientation_flips_tangent():
    ccw = circle(R2, Multivector.zeros(R2), 1.0, E12_2)
    cw = circle(R2, Multivector.zeros(R2), 1.0, E12_2, orientation=-1)
    x = Multivector.vector(R2, [1.0, 0.0])
    assert ccw.pseudoscalar(x).allclose(Multivector.vector(R2, [0.0, 1.0]))
    assert cw.pseudoscalar(x).allclose(Multivector.vector(R2, [0.0, -1.0]))


def test_sphere_from_scalar_constraint():
    """The unit sphere, oriented by ∂m I₃, has unit bivector pseudoscalars."""

    def m(x):
        return np.asarray(x.norm_squared()) - 1.0

    sphere = from_scalar_constraint(R3, m, name="sphere")
    x = Multivector.vector(R3, [[0.0, 0.0, 1.0], [0.6, 0.8, 0.0]])
    assert sphere.dim == 2
    assert sphere.check_pseudoscalar(x, tol=1e-8) <= 1e-8
    # at the north pole the tangent plane is e12 (e3 e123 = e12)
    assert sphere.pseudoscalar(x)[0].allclose(Multivector.blade(R3, 0b011), atol=1e-8)


def test_check_orientation_detects_flip():
    def flipping(x):
        signs = np.where(x.components()[..., 0] > 0, 1.0, -1.0)
        return Multivector.pseudoscalar(R2) * signs

    manifold = ImplicitManifold(R2, 2, (), flipping, name="flipping")
    path = Multivector.vector(R2, np.stack([np.linspace(-1, 1, 11), np.zeros(11)], axis=-1))
    with pytest.raises(OrientationError):
        manifold.check_orientation(path)
    assert flat(R2).check_orientation(path) == pytest.approx(1.0)


def test_cut_circle_geometry():
    u = Multivector.vector(R2, [1.0, 0.0])
    cut = CutCircle(Multivector.zeros(R2), 2.0, u, E12_2, -1, 0.1)
    start, end = cut.endpoints()
    assert start.allclose(Multivector.vector(R2, [2 * np.cos(0.1), 2 * np.sin(0.1)]))
    assert end.allclose(Multivector.vector(R2, [2 * np.cos(0.1), -2 * np.sin(0.1)]))
    assert cut.endpoint_signs() == (1, -1)
    assert cut.cut_length == pytest.approx(0.4)
    assert cut.tangent(0.0).allclose(Multivector.vector(R2, [0.0, -1.0]))
    assert cut.angle(end) == pytest.approx(TWO_PI - 0.1)
    assert cut.on_cut(cut.point(np.array([0.05, np.pi, TWO_PI - 0.05]))).tolist() == [True, False, True]
    assert cut.manifold().contains(cut.point(1.0))


def test_branch_spec_interval():
    branch = BranchSpec()
    assert branch.interval == (-TWO_PI, 0.0)
    assert branch.contains(np.array([0.0, -TWO_PI, -1.0])).tolist() == [True, False, True]
    assert branch.to_dict()["interval"] == [-TWO_PI, 0.0]


def test_vector_in_plane():
    v = vector_in_plane(E23)
    assert v.norm() > 0
    assert v.coefficient(0b001) == 0.0
    with pytest.raises(NotInvertible):
        vector_in_plane(Multivector.zeros(R3))
