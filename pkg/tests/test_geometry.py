import cmath
import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from speccalc.errors import GeometryError
from speccalc.geometry import (
    INF,
    MINUS,
    PLUS,
    BisectorRegion,
    adaptive_contour_integral,
    bisector_contains,
    build_contour,
    circle_path,
    closed_bisector_violation,
    default_contour_params,
    distance_data,
    membership,
    singular_location,
    winding_number,
)
from speccalc.operators import excluded_region

PI = math.pi


class _Spec:
    """Minimal spectrum stub for distance_data."""

    def __init__(self, values, includes_infinity=False):
        self.finite_values = tuple(values)
        self.includes_infinity = includes_infinity


# ---------------------------------------------------------------------------
# membership and violation


def test_strip_membership():
    # omega = pi/2, a = 1 is the open strip |Re z| < 1
    assert bisector_contains(PI / 2, 1.0, 0.0)
    assert bisector_contains(PI / 2, 1.0, 0.5 + 10j)
    assert bisector_contains(PI / 2, 1.0, -0.999)
    assert not bisector_contains(PI / 2, 1.0, 1.0)  # open at the vertex
    assert not bisector_contains(PI / 2, 1.0, 1.5)
    assert not bisector_contains(PI / 2, 1.0, -2 + 5j)


def test_cone_membership():
    # omega = pi/3, a = 0: sector of half-angle pi/6 around the imaginary axis
    assert bisector_contains(PI / 3, 0.0, 0.2 + 1j)
    assert bisector_contains(PI / 3, 0.0, -0.2 - 1j)
    assert not bisector_contains(PI / 3, 0.0, 1 + 1j)
    assert not bisector_contains(PI / 3, 0.0, 3.0)
    assert not bisector_contains(PI / 3, 0.0, 0.0)  # vertex excluded


def test_degenerate_cone_is_imaginary_axis():
    assert bisector_contains(PI / 2, 0.0, 5j)
    assert bisector_contains(PI / 2, 0.0, 0.0)
    assert not bisector_contains(PI / 2, 0.0, 0.1 + 5j)
    assert closed_bisector_violation(PI / 2, 0.0, 3.0) == pytest.approx(3.0)
    assert closed_bisector_violation(PI / 2, 0.0, 2j) == 0.0


def test_violation_values():
    # strip: penetration equals the horizontal overshoot
    assert closed_bisector_violation(PI / 2, 1.0, 1.5) == pytest.approx(0.5)
    assert closed_bisector_violation(PI / 2, 1.0, 2 + 3j) == pytest.approx(1.0)
    assert closed_bisector_violation(PI / 2, 1.0, 1.0) == 0.0
    assert closed_bisector_violation(PI / 2, 1.0, 0.3 - 7j) == 0.0
    # cone: |w| sin(omega - theta) for w = 1 + 1j, theta = pi/4
    want = math.sqrt(2.0) * math.sin(PI / 3 - PI / 4)
    assert closed_bisector_violation(PI / 3, 0.0, 1 + 1j) == pytest.approx(want)
    # boundary direction: violation vanishes up to rounding
    z = cmath.exp(1j * PI / 3)
    assert closed_bisector_violation(PI / 3, 0.0, z) <= 1e-12


def test_membership_excluded_balls():
    region = BisectorRegion(
        omega=PI / 2, halfwidth_a=1.0, excluded={PLUS: 0.2, INF: 0.1}
    )
    assert membership(region, 0.0)
    assert membership(region, 0.7)
    assert membership(region, 9j)
    assert not membership(region, 0.9)  # inside the closed vertex ball
    assert not membership(region, 10.5j)  # at or beyond the outer circle 1/0.1
    assert not membership(region, 0.5 + 10j)


def test_singular_location():
    assert singular_location(PLUS, 1.5) == 1.5
    assert singular_location(MINUS, 1.5) == -1.5
    with pytest.raises(ValueError):
        singular_location(INF, 1.0)


# ---------------------------------------------------------------------------
# region validation


@pytest.mark.parametrize(
    "kwargs",
    [
        {"omega": 0.0, "halfwidth_a": 1.0},
        {"omega": -0.3, "halfwidth_a": 1.0},
        {"omega": PI / 2 + 0.01, "halfwidth_a": 1.0},
        {"omega": PI / 4, "halfwidth_a": -1.0},
        {"omega": PI / 4, "halfwidth_a": 1.0, "excluded": {"bogus": 0.5}},
        {"omega": PI / 4, "halfwidth_a": 1.0, "excluded": {PLUS: 0.0}},
        {"omega": PI / 4, "halfwidth_a": 0.0, "excluded": {MINUS: 0.5}},
        {
            "omega": PI / 4,
            "halfwidth_a": 1.0,
            "excluded": {PLUS: 0.5},
            "clearances": {PLUS: 0.4},
        },
    ],
)
def test_region_rejects(kwargs):
    with pytest.raises(GeometryError):
        BisectorRegion(**kwargs)


# ---------------------------------------------------------------------------
# clearances


def test_distance_data_strip():
    region = BisectorRegion(omega=PI / 2, halfwidth_a=1.0)
    out = distance_data(_Spec([1.0, 1j, -1j]), region)
    # +a sits in the spectrum: no clearance entry for it
    assert PLUS not in out
    assert out[MINUS] == pytest.approx(math.sqrt(2.0))
    assert out[INF] == pytest.approx(1.0)


def test_distance_data_unbounded_and_empty():
    region = BisectorRegion(omega=PI / 4, halfwidth_a=0.0)
    out = distance_data(_Spec([2j, 4j], includes_infinity=True), region)
    assert INF not in out
    assert out[PLUS] == pytest.approx(2.0)
    assert MINUS not in out  # merged vertex reported once

    empty = distance_data(_Spec([]), region)
    assert empty[PLUS] == math.inf
    assert empty[INF] == math.inf


# ---------------------------------------------------------------------------
# contour parameters


def test_default_contour_params_midpoint():
    region = BisectorRegion(
        omega=PI / 2,
        halfwidth_a=1.0,
        excluded={PLUS: 0.5, INF: 0.125},
        clearances={PLUS: 2.0, INF: 0.25},
    )
    phi_prime, radii = default_contour_params(region, 0.0)
    assert phi_prime == pytest.approx(PI / 4)
    assert radii[PLUS] == pytest.approx(1.25)  # (s + r) / 2
    assert radii[INF] == pytest.approx(0.1875)


def test_default_contour_params_infinite_clearance():
    region = BisectorRegion(omega=PI / 3, halfwidth_a=0.0, excluded={PLUS: 0.3})
    _, radii = default_contour_params(region, 0.1)
    assert radii[PLUS] == pytest.approx(0.6)  # doubled when clearance unknown


def test_default_contour_params_phi_domain():
    region = BisectorRegion(omega=PI / 3, halfwidth_a=0.0)
    with pytest.raises(GeometryError):
        default_contour_params(region, PI / 3)
    with pytest.raises(GeometryError):
        default_contour_params(region, -0.1)


# ---------------------------------------------------------------------------
# contour construction


def _strip_region():
    return BisectorRegion(
        omega=PI / 2,
        halfwidth_a=1.0,
        excluded={MINUS: 0.4, PLUS: 0.4, INF: 0.2},
        clearances={MINUS: 1.0, PLUS: 1.0, INF: 0.4},
    )


def test_build_contour_closed_strip():
    region = _strip_region()
    phi_prime, radii = default_contour_params(region, 0.0)
    path = build_contour(region, phi_prime, radii)
    assert not path.truncated
    assert path.outer_radius == pytest.approx(1.0 / radii[INF])
    # one connected cycle of 8 segments for a > 0 with both vertex balls
    assert len(path.cycles) == 1
    assert len(path.segments) == 8
    assert path.node_count() == len(list(path.quadrature_nodes()))
    for z0 in path.interior_samples:
        assert winding_number(path, z0) == pytest.approx(1.0, abs=1e-6)
    for c in path.excluded_centers:
        assert winding_number(path, c) == pytest.approx(0.0, abs=1e-6)


def test_build_contour_two_cones():
    region = BisectorRegion(
        omega=PI / 4, halfwidth_a=0.0, excluded={PLUS: 0.2, INF: 0.1}
    )
    path = build_contour(region, PI / 8, {PLUS: 0.3, INF: 0.15})
    assert not path.truncated
    assert len(path.cycles) == 2
    assert len(path.segments) == 8
    for z0 in path.interior_samples:
        assert winding_number(path, z0) == pytest.approx(1.0, abs=1e-6)
    for c in path.excluded_centers:
        assert winding_number(path, c) == pytest.approx(0.0, abs=1e-6)


def test_build_contour_truncated_rays():
    # no ball at infinity: rays closed by arcs at the truncation radius
    region = BisectorRegion(omega=PI / 4, halfwidth_a=0.0, excluded={PLUS: 0.2})
    path = build_contour(region, PI / 8, {PLUS: 0.3})
    assert path.truncated
    assert path.outer_radius == pytest.approx(13.0)  # 10 * (a + 1 + s'_+)
    for z0 in path.interior_samples:
        assert winding_number(path, z0) == pytest.approx(1.0, abs=1e-6)


def test_build_contour_rejections():
    region = _strip_region()
    good = {MINUS: 0.7, PLUS: 0.7, INF: 0.3}
    with pytest.raises(GeometryError):
        build_contour(region, PI / 2, good)  # phi' >= omega
    with pytest.raises(GeometryError):
        build_contour(region, PI / 4, {PLUS: 0.7})  # radii keys mismatch
    with pytest.raises(GeometryError):
        # ball radius not above the domain radius
        build_contour(region, PI / 4, {MINUS: 0.5, PLUS: 0.3, INF: 0.3})
    with pytest.raises(GeometryError):
        # ball radius at or above the spectral clearance
        build_contour(region, PI / 4, {MINUS: 1.5, PLUS: 0.6, INF: 0.3})

    cramped = BisectorRegion(
        omega=PI / 2, halfwidth_a=1.0, excluded={PLUS: 0.4, INF: 0.5}
    )
    with pytest.raises(GeometryError):
        # outer circle 1/0.7 < 1.05 * (a + s'_+): no room beyond the ball
        build_contour(cramped, PI / 4, {PLUS: 0.5, INF: 0.7})

    overlap = BisectorRegion(
        omega=PI / 2, halfwidth_a=0.5, excluded={MINUS: 0.6, PLUS: 0.6, INF: 0.05}
    )
    with pytest.raises(GeometryError):
        # s'_+ + s'_- >= 2a: the vertex balls collide
        build_contour(overlap, PI / 4, {MINUS: 0.7, PLUS: 0.7, INF: 0.06})


def test_operator_pipeline_contour(cone_pair):
    region = excluded_region(cone_pair)
    phi_prime, radii = default_contour_params(region, 0.0)
    path = build_contour(region, phi_prime, radii)
    assert not path.truncated
    for z0 in path.interior_samples:
        assert winding_number(path, z0) == pytest.approx(1.0, abs=1e-6)
    # the eigenvalues themselves are enclosed
    for lam in (1j, -1j):
        assert winding_number(path, lam) == pytest.approx(1.0, abs=1e-6)


# ---------------------------------------------------------------------------
# quadrature


def test_circle_winding():
    path = circle_path(1 + 1j, 0.5)
    assert winding_number(path, 1 + 1j) == pytest.approx(1.0, abs=1e-9)
    assert winding_number(path, 0.0) == pytest.approx(0.0, abs=1e-9)


def test_adaptive_integral_cauchy():
    # integral is normalized by 1/(2 pi i): a simple pole inside gives 1
    path = circle_path(0.5j, 1.0)
    value, report = adaptive_contour_integral(
        path, lambda z: 1.0 / (z - 0.5j), tol=1e-12, max_depth=12
    )
    assert complex(value) == pytest.approx(1.0, abs=1e-10)
    assert report["panels"] >= 1
    assert report["nodes"] > 0
    assert "tail_estimate" in report and "refinement_steps" in report


def test_adaptive_integral_analytic_vanishes():
    path = circle_path(0.0, 2.0)
    value, _ = adaptive_contour_integral(path, lambda z: z * z, tol=1e-12, max_depth=10)
    assert abs(complex(value)) <= 1e-10


def test_adaptive_integral_matrix_valued():
    A = np.diag([1j, -1j]).astype(complex)
    path = circle_path(0.0, 3.0)

    def resolvent(z):
        return np.linalg.inv(z * np.eye(2, dtype=complex) - A)

    value, _ = adaptive_contour_integral(path, resolvent, tol=1e-11, max_depth=12)
    # normalized resolvent integral around the whole spectrum: identity
    assert np.allclose(np.asarray(value), np.eye(2), atol=1e-9)


def test_quadrature_nodes_consistent_with_integral():
    path = circle_path(2.0, 1.5)
    total = sum(w for _, _, _, w in path.quadrature_nodes())
    assert abs(total) <= 1e-10  # closed path: integral of dz vanishes
    cauchy = sum(w / (z - 2.0) for _, _, z, w in path.quadrature_nodes())
    assert cauchy == pytest.approx(2j * PI, abs=1e-8)


# ---------------------------------------------------------------------------
# structural properties


@given(
    z=st.complex_numbers(max_magnitude=50.0, allow_nan=False, allow_infinity=False),
    omega=st.floats(min_value=0.05, max_value=PI / 2),
    a=st.floats(min_value=0.0, max_value=3.0),
)
def test_membership_symmetry(z, omega, a):
    m = bisector_contains(omega, a, z)
    assert bisector_contains(omega, a, -z) == m
    assert bisector_contains(omega, a, z.conjugate()) == m


@given(
    z=st.complex_numbers(max_magnitude=50.0, allow_nan=False, allow_infinity=False),
    omega=st.floats(min_value=0.05, max_value=PI / 2),
    a=st.floats(min_value=0.0, max_value=3.0),
)
def test_open_membership_implies_closure(z, omega, a):
    if bisector_contains(omega, a, z):
        # exact zero away from the degenerate imaginary-axis pair, where
        # the rounding guard tolerates a relative 1e-14 real part
        assert closed_bisector_violation(omega, a, z) <= 1e-13 * max(1.0, abs(z))


@given(
    z=st.complex_numbers(max_magnitude=50.0, allow_nan=False, allow_infinity=False),
    omega_lo=st.floats(min_value=0.05, max_value=PI / 2 - 0.02),
    domega=st.floats(min_value=0.001, max_value=0.5),
    a=st.floats(min_value=0.0, max_value=3.0),
    da=st.floats(min_value=0.0, max_value=2.0),
)
def test_region_nesting(z, omega_lo, domega, a, da):
    omega_hi = min(omega_lo + domega, PI / 2)
    # the exact imaginary-axis convention at (pi/2, 0) is not an open set
    # and deliberately breaks nesting; skip that single pair
    assume(not (omega_hi >= PI / 2 and a == 0.0))
    # thinner region (larger omega) is contained in the wider one
    if bisector_contains(omega_hi, a, z):
        assert bisector_contains(omega_lo, a, z)
    # growing the half-width only adds points
    if bisector_contains(omega_lo, a, z):
        assert bisector_contains(omega_lo, a + da, z)
