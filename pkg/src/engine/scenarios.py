"""
The two worked chains: the disk in a plane and the solid cylinder in R^3.

Both cut every closed circle of the last level at an arc of half-width δ
around a reference direction, so N_0 is two points per circle. The cylinder
also rounds its two edges with a chamfer of radius ε whose surface is dropped
and charged to the incision ledger.
"""

from typing import Callable, Optional

import numpy as np

from ..errors import ParameterError
from .algebra import AlgebraSignature, Multivector, geometric_product, grade_select, norm, scalar_product
from .antiderivatives import cylinder_axis, scenario_entry
from .boundary_method import ChainLevel, ChainPiece, Incision, IntegrationChain, SignedPoint
from .calculus import VectorField, project, reject
from .manifolds import TWO_PI, CutCircle, halton
from .quadrature import DirectedIntegralResult, QuadratureOracle, cylinder_polar, disk_polar

MAX_DISK_HALFWIDTH = np.pi / 4


def _radial_outward(center: Multivector, bivector: Multivector) -> Callable[[Multivector], Multivector]:
    def outward(x: Multivector) -> Multivector:
        p = project(bivector, x - center)
        return p / np.asarray(norm(p))

    return outward


def _constant_direction(direction: Multivector) -> Callable[[Multivector], Multivector]:
    def outward(x: Multivector) -> Multivector:
        return Multivector(direction.algebra, np.broadcast_to(direction.coeffs, x.batch_shape + (direction.algebra.size,)))

    return outward


def _signed_endpoints(name: str, circle: CutCircle):
    (point_a, point_b), (sign_a, sign_b) = circle.endpoints(), circle.endpoint_signs()
    return SignedPoint(point_a, sign_a, name, "a"), SignedPoint(point_b, sign_b, name, "b")


def _arc_incision(name: str, circle: CutCircle, integrand: VectorField) -> Incision:
    def sampler(count: int) -> Multivector:
        return circle.point(circle.cut_angles(count))

    return Incision(1, name, circle.cut_length, integrand, sampler)


def _traversal(face: Multivector, outward: Multivector, ccw: Multivector) -> int:
    """Sign of I_face n against the counterclockwise tangent."""
    direction = grade_select(geometric_product(face, outward), 1)
    return 1 if float(scalar_product(direction, ccw)) > 0 else -1


# --- disk -------------------------------------------------------------------


def disk_scenario(
    radius: float,
    x0: Multivector,
    halfwidth: float,
    density: float = 1.0,
    orientation: int = 1,
    gauge: Optional[Multivector] = None,
    branch_start: float = -TWO_PI,
) -> IntegrationChain:
    """
    Disk of the given radius in the plane I₂ = orientation·e₁₂ with constant
    integrand `density`. Levels: the disk (F₁ = k x/2), its boundary circle
    (F₂ = (k/2) x² log(x x0)) cut around +x0, and the two cut edges.
    `gauge` is added to F₂.
    """
    algebra = x0.algebra
    if radius <= 0:
        raise ParameterError(f"Radius must be positive, got {radius}")
    if not 0.0 < halfwidth < MAX_DISK_HALFWIDTH:
        raise ParameterError(f"Cut half-width must lie in (0, π/4), got {halfwidth}")
    if orientation not in (1, -1):
        raise ParameterError(f"Orientation must be ±1, got {orientation}")
    bivector = Multivector.blade(algebra, 0b11) * float(orientation)
    if float(x0.norm()) == 0.0 or float(reject(bivector, x0).norm()) > 1e-12 * float(x0.norm()):
        raise ParameterError("x0 must be a nonzero vector in the I₂ plane")

    origin = Multivector.zeros(algebra)
    half = Multivector.scalar(algebra, 0.5 * density)
    disk_entry = scenario_entry("disk-interior", dim=algebra.dim, plane=bivector, density=density, radius=radius)
    circle_entry = scenario_entry(
        "circle",
        dim=algebra.dim,
        center=origin,
        radius=radius,
        plane=bivector,
        reference=x0,
        B=half,
        branch_start=branch_start,
    )
    if gauge is not None:
        circle_entry = circle_entry.with_gauge(gauge)

    u = x0 / float(x0.norm())
    outward = _radial_outward(origin, bivector)
    trial = CutCircle(origin, radius, u, bivector, 1, halfwidth)
    traversal = _traversal(bivector, outward(trial.point(np.pi / 2)), trial.ccw_tangent(np.pi / 2))
    circle = CutCircle(origin, radius, u, bivector, traversal, halfwidth)

    levels = (
        ChainLevel(2, (ChainPiece("disk", disk_entry),)),
        ChainLevel(1, (ChainPiece("circle", circle_entry, "disk", circle, outward),)),
    )
    incisions = (_arc_incision("cut-arc", circle, disk_entry.antiderivative),)
    params = {
        "radius": float(radius),
        "halfwidth": float(halfwidth),
        "density": float(density),
        "orientation": float(orientation),
    }
    expected = bivector * (np.pi * radius**2 * density)
    return IntegrationChain("disk", params, levels, _signed_endpoints("circle", circle), incisions, bivector, expected)


def disk_oracle(
    oracle: QuadratureOracle,
    radius: float,
    x0: Multivector,
    density: float = 1.0,
    orientation: int = 1,
    subdivisions: int = 512,
) -> DirectedIntegralResult:
    """Directed area integral of the constant density over the polar disk chart."""
    algebra = x0.algebra
    bivector = Multivector.blade(algebra, 0b11) * float(orientation)
    u = x0 / float(x0.norm())
    v = grade_select(geometric_product(u, bivector), 1)
    patch = disk_polar(algebra, radius, u, v, subdivisions)
    return oracle.directed_integral(patch, VectorField.constant(Multivector.scalar(algebra, density), "k"))


# --- cylinder ---------------------------------------------------------------


def chamfer_volume(radius: float, chamfer: float) -> float:
    """Volume removed by rounding one circular edge of the cylinder (Pappus)."""
    inner = radius - chamfer
    return TWO_PI * chamfer**2 * (inner * (1.0 - np.pi / 4.0) + chamfer / 6.0)


def chamfer_area(radius: float, chamfer: float) -> float:
    """Area of the quarter-torus surface rounding one edge."""
    inner = radius - chamfer
    return TWO_PI * chamfer * (inner * np.pi / 2.0 + chamfer)


def cylinder_scenario(
    radius: float,
    height: float,
    plane: Optional[Multivector] = None,
    pseudoscalar: Optional[Multivector] = None,
    chamfer: float = 1e-2,
    halfwidth: Optional[float] = None,
    gauge: Optional[Multivector] = None,
) -> IntegrationChain:
    """
    Solid cylinder (ω ⌊ x)² ≤ r², 0 ≤ axial height ≤ h with integrand 1.

    Level 3 uses F = x/3. The side uses r_ω(x) x/3 and the caps
    (p² + p r_ω(x))/6. The side is bounded by circles at heights ε and h − ε,
    the caps have radius r − ε, and each circle is cut with half-width δ
    (defaults to ε). `gauge` is added to every circle antiderivative.
    """
    algebra = AlgebraSignature(3)
    bivector = plane if plane is not None else Multivector.blade(algebra, 0b011)
    pseudoscalar = pseudoscalar if pseudoscalar is not None else Multivector.pseudoscalar(algebra)
    halfwidth = chamfer if halfwidth is None else halfwidth
    if radius <= 0 or height <= 0:
        raise ParameterError(f"Radius and height must be positive, got r={radius}, h={height}")
    if not 0.0 < chamfer < min(radius, height) / 4.0:
        raise ParameterError(f"Chamfer must lie in (0, min(r, h)/4), got {chamfer}")
    if not 0.0 < halfwidth < MAX_DISK_HALFWIDTH:
        raise ParameterError(f"Cut half-width must lie in (0, π/4), got {halfwidth}")
    if abs(float(norm(geometric_product(bivector, bivector))) - 1.0) > 1e-9 or bivector.grades() != {2}:
        raise ParameterError("ω must be a unit bivector")
    if pseudoscalar.grades() != {3} or abs(float(pseudoscalar.norm()) - 1.0) > 1e-9:
        raise ParameterError("I₃ must be a unit pseudoscalar")

    u, v, axis = cylinder_frame(bivector, pseudoscalar)
    inner = radius - chamfer
    third = 1.0 / 3.0
    shape = dict(plane=bivector, pseudoscalar=pseudoscalar, radius=radius, height=height)

    volume = scenario_entry("cylinder-volume", **shape)
    side = scenario_entry("cylinder-side", **shape)
    top = scenario_entry("cylinder-cap", level=height, orientation=1.0, cap_radius=inner, **shape)
    bottom = scenario_entry("cylinder-cap", level=0.0, orientation=-1.0, cap_radius=inner, **shape)
    faces = {"side": side, "top": top, "bottom": bottom}

    def ring(name: str, parent: str, height_at: float, ring_radius: float, constant: float, linear: Multivector, normal):
        center = axis * height_at
        entry = scenario_entry(
            "circle",
            dim=3,
            center=center,
            radius=ring_radius,
            plane=bivector,
            reference=u,
            A=Multivector.scalar(algebra, constant),
            B=linear,
        )
        if gauge is not None:
            entry = entry.with_gauge(gauge)
        trial = CutCircle(center, ring_radius, u, bivector, 1, halfwidth)
        phi = np.pi / 2
        face = faces[parent].manifold.pseudoscalar(trial.point(phi))
        traversal = _traversal(face, normal(trial.point(phi)), trial.ccw_tangent(phi))
        circle = CutCircle(center, ring_radius, u, bivector, traversal, halfwidth)
        return ChainPiece(name, entry, parent, circle, normal)

    upper, lower = height - chamfer, chamfer
    rings = (
        ring("side-top", "side", upper, radius, upper**2 * third, axis * (-upper * third), _constant_direction(axis)),
        ring("side-bottom", "side", lower, radius, lower**2 * third, axis * (-lower * third), _constant_direction(-axis)),
        ring(
            "cap-top",
            "top",
            height,
            inner,
            0.5 * inner**2 * third,
            axis * (height / 6.0),
            _radial_outward(axis * height, bivector),
        ),
        ring(
            "cap-bottom",
            "bottom",
            0.0,
            inner,
            0.5 * inner**2 * third,
            Multivector.zeros(algebra),
            _radial_outward(axis * 0.0, bivector),
        ),
    )

    levels = (
        ChainLevel(3, (ChainPiece("cylinder", volume),)),
        ChainLevel(
            2,
            (
                ChainPiece("side", side, "cylinder"),
                ChainPiece("top", top, "cylinder"),
                ChainPiece("bottom", bottom, "cylinder"),
            ),
        ),
        ChainLevel(1, rings),
    )
    points = tuple(point for piece in rings for point in _signed_endpoints(piece.name, piece.circle))

    def chamfer_sampler(count: int) -> Multivector:
        unit = halton(count, 2, 0)
        psi = 0.5 * np.pi * unit[:, 0]
        phi = TWO_PI * unit[:, 1]
        rho = inner + chamfer * np.cos(psi)
        rise = chamfer * np.sin(psi)
        z = np.where(np.arange(count) % 2 == 0, height - chamfer + rise, chamfer - rise)
        return u * (rho * np.cos(phi)) + v * (rho * np.sin(phi)) + axis * z

    incisions = (
        Incision(3, "chamfer-volume", 2.0 * chamfer_volume(radius, chamfer), volume.integrand, closed_form_sup=1.0),
        Incision(2, "chamfer-surface", 2.0 * chamfer_area(radius, chamfer), side.integrand, chamfer_sampler),
    ) + tuple(_arc_incision(f"cut-{piece.name}", piece.circle, piece.entry.integrand) for piece in rings)

    params = {
        "radius": float(radius),
        "height": float(height),
        "chamfer": float(chamfer),
        "halfwidth": float(halfwidth),
    }
    expected = pseudoscalar * (np.pi * radius**2 * height)
    return IntegrationChain("cylinder", params, levels, points, incisions, pseudoscalar, expected)


def cylinder_oracle(
    oracle: QuadratureOracle,
    radius: float,
    height: float,
    plane: Optional[Multivector] = None,
    pseudoscalar: Optional[Multivector] = None,
    subdivisions: int = 64,
) -> DirectedIntegralResult:
    """Directed volume of the (unchamfered) cylinder by 3-D midpoint quadrature."""
    algebra = AlgebraSignature(3)
    bivector = plane if plane is not None else Multivector.blade(algebra, 0b011)
    pseudoscalar = pseudoscalar if pseudoscalar is not None else Multivector.pseudoscalar(algebra)
    u, v, axis = cylinder_frame(bivector, pseudoscalar)
    patch = cylinder_polar(algebra, radius, height, u, v, axis, subdivisions)
    return oracle.directed_integral(patch, VectorField.constant(Multivector.scalar(algebra, 1.0), "1"))


def cylinder_frame(bivector: Multivector, pseudoscalar: Multivector):
    """(u, v, n): orthonormal u, v spanning ω with u ∧ v = ω, and the axis n with ω n = I₃."""
    algebra = bivector.algebra
    u = project(bivector, Multivector.basis_vector(algebra, 0))
    if float(u.norm()) < 1e-6:
        u = project(bivector, Multivector.basis_vector(algebra, 1))
    u = u / float(u.norm())
    v = grade_select(geometric_product(u, bivector), 1)
    return u, v, cylinder_axis(bivector, pseudoscalar)
