"""Unit tests for the antiderivative table and the scenario entries."""
import json

import numpy as np
import pytest

from src.engine.algebra import AlgebraSignature, Multivector
from src.engine.antiderivatives import (
    SCENARIO_ENTRIES,
    TABLE_ROWS,
    DerivativeCheck,
    catalog,
    radial_antiderivative_by_quadrature,
    scenario_entry,
    table_entry,
)
from src.errors import ParameterError, RadialIntegrationError, UnknownEntry


@pytest.mark.parametrize("dim", [2, 3, 4])
@pytest.mark.parametrize("row", TABLE_ROWS)
def test_table_rows_pass_derivative_check(row, dim):
    """∂F = f at 100 sampled points for every row of the table."""
    check = table_entry(row, dim).derivative_check(count=100, seed=0, tol=1e-6)
    assert check.passed, check


def test_ax_row_with_custom_vector():
    algebra = AlgebraSignature(3)
    a = Multivector.vector(algebra, [0.0, 0.6, 0.8])
    entry = table_entry("ax", 3, a=a)
    assert entry.derivative_check(50, seed=2).passed
    assert entry.params == {"a1": 0.0, "a2": 0.6, "a3": 0.8}
    with pytest.raises(ParameterError):
        table_entry("ax", 3, a=Multivector.blade(algebra, 0b011))


def test_unknown_rows():
    with pytest.raises(UnknownEntry):
        table_entry("log", 2)
    with pytest.raises(UnknownEntry):
        scenario_entry("sphere")


def test_radial_row_matches_constant_row_for_unit_density():
    """With g = 1 the radial antiderivative reduces to x/d."""
    radial = table_entry("radial", 3, radial=lambda s: np.ones_like(s), radial_antiderivative=lambda r: r**3 / 3.0)
    const = table_entry("const", 3)
    points = radial.sample_points(20, seed=4)
    assert radial.antiderivative(points).allclose(const.antiderivative(points), atol=1e-12)


def test_radial_antiderivative_by_quadrature():
    G = radial_antiderivative_by_quadrature(lambda s: np.exp(-s * s), 2)
    # ∫_0^ρ s e^{-s²} ds = (1 - e^{-ρ²})/2
    rho = np.array([0.5, 1.0, 2.0])
    assert G(rho) == pytest.approx((1.0 - np.exp(-rho * rho)) / 2.0, rel=1e-12)


def test_radial_antiderivative_divergence():
    G = radial_antiderivative_by_quadrature(lambda s: 1.0 / s**3, 2)
    with pytest.raises(RadialIntegrationError):
        G(np.array([1.0]))


def test_excluded_points_are_skipped():
    entry = table_entry("x_hat", 2)
    points = entry.sample_points(200, seed=1)
    assert points.batch_shape == (200,)
    assert np.all(np.asarray(points.norm()) >= 0.1)
    assert entry.sample_points(0).batch_shape == (0,)


@pytest.mark.parametrize("row", ["x", "ax", "radial"])
def test_gauge_constant_leaves_residuals_unchanged(row):
    algebra = AlgebraSignature(3)
    entry = table_entry(row, 3)
    constant = Multivector(algebra, np.linspace(-1.0, 1.0, algebra.size))
    points = entry.sample_points(30, seed=5)
    shifted = entry.with_gauge(constant)
    assert np.max(np.abs(shifted.residuals(points) - entry.residuals(points))) < 1e-8
    assert shifted.antiderivative(points)[0].allclose(entry.antiderivative(points)[0] + constant, atol=1e-12)


@pytest.mark.parametrize("name", SCENARIO_ENTRIES)
def test_scenario_entries_pass_derivative_check(name):
    assert scenario_entry(name).derivative_check(count=100, seed=0, tol=1e-6).passed


def test_circle_entry_off_origin_in_three_dimensions():
    """A + p B on a tilted plane circle around an off-origin center."""
    algebra = AlgebraSignature(3)
    e23 = Multivector.blade(algebra, 0b110)
    entry = scenario_entry(
        "circle",
        dim=3,
        center=Multivector.vector(algebra, [2.0, 0.0, 0.0]),
        radius=0.5,
        plane=e23,
        reference=Multivector.basis_vector(algebra, 1),
        A=Multivector.scalar(algebra, 0.25),
        B=Multivector.basis_vector(algebra, 0) * -0.5,
    )
    assert entry.derivative_check(count=64, seed=3).passed
    assert entry.branch.interval == (-2.0 * np.pi, 0.0)


def test_circle_antiderivative_jumps_across_the_cut():
    """F = x² log(x x0)/2 on the unit circle jumps by -π I₂ across +x0."""
    entry = scenario_entry("circle", dim=2, radius=1.0)
    algebra = AlgebraSignature(2)
    eta = 1e-9
    below = Multivector.vector(algebra, [np.cos(-eta), np.sin(-eta)])
    above = Multivector.vector(algebra, [np.cos(eta), np.sin(eta)])
    jump = entry.antiderivative(below) - entry.antiderivative(above)
    assert jump.allclose(Multivector.blade(algebra, 0b11, -np.pi), atol=1e-6)


def test_catalog_is_json_ready():
    entries = catalog([2, 3])
    assert len(entries) == 2 * len(TABLE_ROWS) + len(SCENARIO_ENTRIES)
    text = json.dumps(entries, sort_keys=True)
    assert "x/|x|^d" in text
    assert any(entry["branch"] is not None for entry in entries)


def test_derivative_check_to_dict():
    check = DerivativeCheck("x[d=2]", 10, 2e-7, 1e-6)
    assert check.passed
    assert check.to_dict() == {"entry": "x[d=2]", "points": 10, "max_residual": 2e-7, "tol": 1e-6, "passed": True}
