"""Unit tests for the boundary method on the disk chain."""
from dataclasses import replace

import numpy as np
import pytest

from src.engine.algebra import AlgebraSignature, Multivector, geometric_product, scalar_product
from src.engine.boundary_method import BoundaryMethod, Incision, IncisionBound, SignedPoint
from src.engine.calculus import VectorField
from src.engine.quadrature import QuadratureOracle, arc
from src.engine.scenarios import disk_oracle, disk_scenario
from src.errors import BoundUnavailable, ChainInvalid, OnBranchCut, OrientationError, ParameterError

R2 = AlgebraSignature(2)
R3 = AlgebraSignature(3)
E1, E2 = Multivector.basis_vector(R2, 0), Multivector.basis_vector(R2, 1)
E12 = Multivector.blade(R2, 0b11)


@pytest.fixture
def method():
    return BoundaryMethod({"quadrature": {"chunk_size": 4096}})


@pytest.mark.parametrize("radius, halfwidth", [(1.0, 0.1), (2.0, 0.01), (0.5, 1e-3)])
def test_disk_chain_result(method, radius, halfwidth):
    """Cutting an arc of half-width δ leaves r²(π − δ) along I₂, inside the incision bound."""
    report = method.run_chain(disk_scenario(radius, E1, halfwidth))
    assert report.coefficient == pytest.approx(radius**2 * (np.pi - halfwidth), rel=1e-12)
    assert report.result.allclose(E12 * (radius**2 * (np.pi - halfwidth)), atol=1e-12)
    actual = abs(report.coefficient - np.pi * radius**2)
    assert actual <= report.error_bound
    assert report.error_bound == pytest.approx(1.1 * radius**2 * halfwidth, rel=1e-9)
    assert report.derivative_residual < 1e-6
    assert report.passed


def test_disk_chain_against_oracle(method):
    chain = disk_scenario(1.0, E1, 0.05)
    oracle = disk_oracle(method.oracle, 1.0, E1, subdivisions=64)
    report = method.run_chain(chain.with_oracle(oracle))
    assert report.theorem_holds
    assert report.oracle_delta == pytest.approx(0.05, abs=1e-6)
    assert report.oracle_value.allclose(E12 * np.pi, atol=1e-8)


def test_disk_sweep_extrapolates_to_pi(method):
    oracle = disk_oracle(method.oracle, 1.0, E1, subdivisions=64)
    report = method.run_sweep(lambda eps: disk_scenario(1.0, E1, eps), [1e-3, 1e-1, 1e-2], oracle)
    assert [point.epsilon for point in report.sweep] == [1e-1, 1e-2, 1e-3]
    assert report.extrapolated_coefficient == pytest.approx(np.pi, abs=1e-6)
    assert report.convergence_order == pytest.approx(1.0, abs=1e-6)
    assert report.linear_bound_holds
    assert all(point.theorem_holds for point in report.sweep)
    assert report.passed


@pytest.mark.parametrize("radius", [0.5, 1.0, 2.0])
def test_disk_sweep_limit_per_radius(method, radius):
    oracle = disk_oracle(method.oracle, radius, E1, subdivisions=64)
    report = method.run_sweep(lambda eps: disk_scenario(radius, E1, eps), [1e-1, 1e-2, 1e-3, 1e-4], oracle)
    assert abs(report.extrapolated_coefficient - np.pi * radius**2) <= 1e-8
    assert all(point.theorem_holds for point in report.sweep)


@pytest.mark.parametrize("radius, halfwidth", [(1.0, 0.2), (2.0, 0.05), (0.5, 0.01)])
def test_halving_one_incision_stays_within_its_bound(method, radius, halfwidth):
    """The result only moves by what the halved incision could hold."""
    wide = method.run_chain(disk_scenario(radius, E1, halfwidth))
    narrow_chain = disk_scenario(radius, E1, halfwidth / 2.0)
    narrow = method.run_chain(narrow_chain)
    change = float((wide.result - narrow.result).norm())
    assert change > 0.0
    assert change <= method.lemma1_bound(narrow_chain.incisions[0])


def test_empty_sweep_rejected(method):
    with pytest.raises(ParameterError):
        method.run_sweep(lambda eps: disk_scenario(1.0, E1, eps), [])


def test_branch_cut_jump_matches_result(method):
    """The jump of F₂ across the cut carries the whole area."""
    chain = disk_scenario(1.0, E1, 0.1)
    jump = method.verify_branch_cut_necessity(chain)
    assert chain.coefficient(jump) == pytest.approx(np.pi, abs=1e-8)


def test_gauge_constant_cancels(method):
    gauge = Multivector(R2, np.array([3.0, -1.0, 2.0, 0.5]))
    plain = method.run_chain(disk_scenario(1.0, E1, 0.1))
    gauged = method.run_chain(disk_scenario(1.0, E1, 0.1, gauge=gauge))
    assert gauged.result.allclose(plain.result, atol=1e-12)


def test_orientation_flip(method):
    report = method.run_chain(disk_scenario(1.0, E1, 0.1, orientation=-1))
    assert report.coefficient == pytest.approx(np.pi - 0.1, rel=1e-12)
    assert report.result.allclose(E12 * -(np.pi - 0.1), atol=1e-12)


@pytest.mark.parametrize("density", [0.0, 2.0])
def test_density_scales_result(method, density):
    report = method.run_chain(disk_scenario(1.0, E1, 0.1, density=density))
    assert report.coefficient == pytest.approx(density * (np.pi - 0.1), abs=1e-12)


def test_disk_circle_is_traversed_clockwise(method):
    chain = disk_scenario(1.0, E1, 0.1)
    piece = chain.piece("circle")
    assert piece.circle.traversal == -1
    assert method.traversal_sign(chain, piece, np.pi / 2) == -1
    with pytest.raises(OrientationError):
        method.traversal_sign(chain, chain.piece("disk"), 0.0)


def test_swapped_endpoint_signs_rejected(method):
    chain = disk_scenario(1.0, E1, 0.1)
    flipped = tuple(SignedPoint(p.point, -p.sign, p.piece, p.side) for p in chain.points)
    with pytest.raises(OrientationError):
        method.run_chain(replace(chain, points=flipped))
    with pytest.raises(ChainInvalid):
        method.run_chain(replace(chain, points=()))


def test_continuity_detects_branch_inside_arc(method):
    """A branch starting at -π puts the log jump at φ = π, inside the kept arc."""
    chain = disk_scenario(1.0, E1, 0.1, branch_start=-np.pi)
    with pytest.raises(ChainInvalid):
        method.check_continuity(chain.piece("circle"))
    assert method.check_continuity(disk_scenario(1.0, E1, 0.1).piece("circle")) < 10.0


@pytest.mark.parametrize(
    "kwargs",
    [
        {"radius": 0.0, "halfwidth": 0.1},
        {"radius": 1.0, "halfwidth": 0.0},
        {"radius": 1.0, "halfwidth": np.pi / 4},
        {"radius": 1.0, "halfwidth": 0.1, "orientation": 0},
    ],
)
def test_disk_parameters_validated(kwargs):
    with pytest.raises(ParameterError):
        disk_scenario(x0=E1, **kwargs)


def test_disk_reference_must_lie_in_plane():
    with pytest.raises(ParameterError):
        disk_scenario(1.0, Multivector.basis_vector(R3, 2), 0.1)


def test_lemma1_bounds(method):
    assert method.lemma1_bound(Incision(1, "empty", 0.0)) == 0.0
    closed = Incision(1, "closed", 2.0, closed_form_sup=3.0)
    assert method.lemma1_bound(closed) == pytest.approx(6.6)
    with pytest.raises(BoundUnavailable):
        method.lemma1_bound(Incision(1, "bare", 1.0))
    with pytest.raises(ParameterError):
        Incision(1, "negative", -1.0)


def test_sampled_lemma1_bound(method):
    def sampler(count):
        phi = np.linspace(0.0, 1.0, count)
        return Multivector.vector(R2, np.stack([2.0 * np.cos(phi), 2.0 * np.sin(phi)], axis=-1))

    incision = Incision(1, "arc", 0.5, VectorField(R2, lambda x: x, "x"), sampler)
    bound = method.incision_bound(incision)
    assert bound.estimated
    assert bound.sup == pytest.approx(2.0)
    assert bound.bound == pytest.approx(0.5 * 2.0 * 1.1)


def test_lemma1_bound_holds_on_random_arcs(method):
    """|∫_E dx f| never exceeds the incision bound for random arcs and affine integrands."""
    rng = np.random.default_rng(7)
    violations = 0
    for k in range(200):
        radius = rng.uniform(0.5, 2.0)
        start = rng.uniform(0.0, 2.0 * np.pi)
        width = rng.uniform(1e-3, 1.0)
        constant = Multivector(R2, rng.normal(size=R2.size))
        linear = Multivector(R2, rng.normal(size=R2.size))

        def fn(x, constant=constant, linear=linear):
            return geometric_product(x, linear) + constant

        def sampler(count, radius=radius, start=start, width=width):
            phi = np.linspace(start, start + width, count)
            return Multivector.vector(R2, radius * np.stack([np.cos(phi), np.sin(phi)], axis=-1))

        integrand = VectorField(R2, fn, "x A + C")
        measured = method.oracle.integrate_once(arc(R2, radius, E1, E2, start, start + width), integrand, 64)
        incision = Incision(1, f"arc-{k}", radius * width, integrand, sampler)
        if float(measured.norm()) > method.lemma1_bound(incision):
            violations += 1
    assert violations == 0


def test_error_bound_combines_incisions():
    bounds = [
        IncisionBound(Incision(1, "a", 1.0), 2.0, 2.0, False),
        IncisionBound(Incision(1, "b", 3.0), 5.0, 5.0, False),
    ]
    assert BoundaryMethod.error_bound(bounds) == pytest.approx(20.0)
    assert BoundaryMethod.error_bound([]) == 0.0


@pytest.mark.parametrize("radius", [1.0, 2.0])
def test_circle_change_of_variables(method, radius):
    """dx = dy x0⁻¹ exp(y x0⁻¹) x0⁻¹ reproduces the unit tangent; |dx|/|dy| = |x|/|x0|."""
    x = Multivector.vector(R2, [radius * np.cos(1.0), radius * np.sin(1.0)])
    change = method.circle_change_of_variables(E1, x)
    assert change.residual < 1e-6
    assert change.dx_closed.allclose(change.tangent, atol=1e-6)
    assert change.ratio == pytest.approx(radius, rel=1e-6)


def test_change_of_variables_around_the_circle(method):
    """Closed form and finite-difference pullback agree at 100 points of the unit circle."""
    angles = (np.arange(100) + 0.5) * (2.0 * np.pi / 100)
    for phi in angles:
        change = method.circle_change_of_variables(E1, Multivector.vector(R2, [np.cos(phi), np.sin(phi)]))
        assert change.residual < 1e-6
        assert change.ratio == pytest.approx(1.0, rel=1e-6)


def test_change_of_variables_below_reference(method):
    """At angle -π/2 the pulled-back dx is orthogonal to x and points counterclockwise."""
    x = Multivector.vector(R2, [0.0, -1.0])
    change = method.circle_change_of_variables(E1, x)
    assert abs(float(scalar_product(change.dx_closed, x))) < 1e-6
    assert change.dx_closed.allclose(E1, atol=1e-6)


def test_change_of_variables_rejects_cut_and_dimension(method):
    x = Multivector.vector(R2, [np.cos(1.0), np.sin(1.0)])
    # log(x e1) has angle -1, so a branch starting there puts x on the cut
    with pytest.raises(OnBranchCut):
        method.circle_change_of_variables(E1, x, branch_start=-1.0)
    x3 = Multivector.vector(R3, [1.0, 0.0, 0.0])
    with pytest.raises(ParameterError):
        method.circle_change_of_variables(x3, x3)
    with pytest.raises(ParameterError):
        method.circle_change_of_variables(E1, Multivector.zeros(R2))


def test_line_reduced_integral_matches_chain(method):
    """The cut circle becomes a straight segment in y = log(x x0) x0."""
    reduced = method.line_reduced_circle_integral(E1, 1.5, 0.1, subdivisions=16)
    chain = method.run_chain(disk_scenario(1.5, E1, 0.1))
    assert reduced.allclose(chain.result, atol=1e-9)


def test_custom_oracle_is_kept():
    oracle = QuadratureOracle({"quadrature": {"chunk_size": 128}})
    assert BoundaryMethod(oracle=oracle).oracle is oracle
