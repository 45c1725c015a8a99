"""Bisector-shaped regions and quadrature-ready integration contours.

The central objects are :class:`BisectorRegion`, describing the set

    BS(omega, a) = (-a + S(pi-omega)) intersect (a - S(pi-omega)),

where ``S(phi) = {z : |arg z| < phi}`` is the open sector of half-angle
``phi`` around the positive real axis (the degenerate pair
``omega = pi/2, a = 0`` denotes the imaginary axis), and
:class:`ContourPath`, a closed, positively oriented piecewise-smooth
boundary of a truncated region carrying Gauss-Legendre panel nodes.

Conventions used throughout:

* singular points are identified by the string ids ``"-a"``, ``"+a"``
  and ``"inf"``; when ``a == 0`` the two finite vertices coincide and
  the merged vertex is addressed as ``"+a"``,
* an excluded ball at ``"inf"`` of radius ``s`` is the set
  ``{|z| > 1/s}``, so its boundary is the circle ``|z| = 1/s``,
* all contours are traversed with the region on the left; ball
  boundaries are therefore run clockwise and outer circles
  counterclockwise.
"""

from __future__ import annotations

import heapq
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import GeometryError, QuadratureDiverged

MINUS = "-a"
PLUS = "+a"
INF = "inf"
SINGULAR_IDS = (MINUS, PLUS, INF)

_TWO_PI = 2.0 * math.pi
_HALF_PI = 0.5 * math.pi


def singular_location(d: str, a: float) -> complex:
    """Complex location of a finite singular-point id."""
    if d == PLUS:
        return complex(a, 0.0)
    if d == MINUS:
        return complex(-a, 0.0)
    raise ValueError(f"not a finite singular point id: {d!r}")


def _in_open_sector(w: complex, half_angle: float) -> bool:
    # membership of w in S(half_angle); the vertex itself is excluded
    if w == 0:
        return False
    return abs(math.atan2(w.imag, w.real)) < half_angle


def bisector_contains(omega: float, a: float, z: complex, *_unused) -> bool:
    """Open-set membership z in BS(omega, a).

    The degenerate pair (pi/2, 0) denotes the imaginary axis and is
    tested exactly (up to a relative rounding guard).
    """
    z = complex(z)
    if omega >= _HALF_PI and a == 0.0:
        return abs(z.real) <= 1e-14 * max(1.0, abs(z))
    half = math.pi - omega
    return _in_open_sector(z + a, half) and _in_open_sector(a - z, half)


def closed_bisector_violation(omega: float, a: float, z: complex) -> float:
    """Distance-like penetration of z into the complement of closure(BS).

    Returns 0.0 when z lies in the closure of BS(omega, a); otherwise a
    positive number comparable to the distance from z to the closure.
    Used by operator certification, which must tolerate eigenvalues
    perturbed off the closure by rounding.
    """
    z = complex(z)
    if omega >= _HALF_PI and a == 0.0:
        return abs(z.real)
    pen = 0.0
    for w in (z - a, -(z + a)):
        # penetration into the open sector S(omega) rooted at +a / -a
        if w == 0:
            continue
        theta = abs(math.atan2(w.imag, w.real))
        if theta < omega:
            pen = max(pen, abs(w) * math.sin(omega - theta))
    return pen


@dataclass(frozen=True)
class BisectorRegion:
    """Bisector BS(omega, a) with excluded balls at regular singular points.

    Parameters
    ----------
    omega : float
        Angle in (0, pi/2]; the excluded sectors at the vertices have
        half-angle omega, so the bisector thins as omega grows.
    halfwidth_a : float
        Nonnegative half-width; the finite vertices sit at -a and +a.
    excluded : mapping str -> float
        Ball radii s_d for the singular points outside the extended
        spectrum.  Keys are drawn from ``{"-a", "+a", "inf"}``; a key
        must be absent when the corresponding point belongs to the
        spectrum.  With ``a == 0`` the merged vertex uses ``"+a"``.
    clearances : mapping str -> float, optional
        The distances r_d from each excludable point to the spectrum
        (``float("inf")`` allowed).  Populated by
        :func:`distance_data`; enables validation s_d < r_d and the
        midpoint defaults of :func:`default_contour_params`.
    """

    omega: float
    halfwidth_a: float
    excluded: Mapping[str, float] = field(default_factory=dict)
    clearances: Mapping[str, float] | None = None

    def __post_init__(self):
        if not (0.0 < self.omega <= _HALF_PI):
            raise GeometryError(f"omega must lie in (0, pi/2], got {self.omega}")
        if self.halfwidth_a < 0.0:
            raise GeometryError(f"halfwidth_a must be >= 0, got {self.halfwidth_a}")
        object.__setattr__(self, "excluded", dict(self.excluded))
        if self.clearances is not None:
            object.__setattr__(self, "clearances", dict(self.clearances))
        for d, s in self.excluded.items():
            if d not in SINGULAR_IDS:
                raise GeometryError(f"unknown singular point id {d!r}")
            if not (s > 0.0):
                raise GeometryError(f"excluded ball radius at {d} must be > 0, got {s}")
            if self.clearances is not None:
                r = self.clearances.get(d)
                if r is not None and s >= r:
                    raise GeometryError(
                        f"ball radius {s} at {d} must stay below the spectral clearance {r}"
                    )
        if self.halfwidth_a == 0.0 and MINUS in self.excluded:
            raise GeometryError("with a = 0 the merged vertex must be addressed as '+a'")

    def contains(self, z: complex) -> bool:
        return membership(self, z)


def membership(region: BisectorRegion, z: complex) -> bool:
    """True iff z lies in BS(omega, a) minus the closed excluded balls."""
    z = complex(z)
    if not bisector_contains(region.omega, region.halfwidth_a, z):
        return False
    for d, s in region.excluded.items():
        if d == INF:
            if abs(z) >= 1.0 / s:
                return False
        else:
            if abs(z - singular_location(d, region.halfwidth_a)) <= s:
                return False
    return True


def distance_data(spectrum, region: BisectorRegion) -> dict[str, float]:
    """Clearances r_d for the singular points outside the spectrum.

    ``spectrum`` is any object exposing ``finite_values`` (an iterable
    of complex numbers: atoms, enumerated tail elements and tail limit
    points) and ``includes_infinity``.  Points of ``{-a, +a, inf}``
    that belong to the spectrum are omitted from the result; for an
    empty spectrum both finite clearances are infinite.
    """
    a = region.halfwidth_a
    values = [complex(v) for v in spectrum.finite_values]
    out: dict[str, float] = {}
    # scale by the vertex location, not the spectral radius: an
    # unbounded tail would otherwise swallow the whole disc
    tol = 1e-9 * max(1.0, a)
    for d in (MINUS, PLUS):
        if d == MINUS and a == 0.0:
            continue  # merged vertex reported once, as "+a"
        loc = singular_location(d, a)
        if any(abs(v - loc) <= tol for v in values):
            continue  # d in the spectrum: no clearance, no ball
        out[d] = min((abs(v - loc) for v in values), default=math.inf)
    if not spectrum.includes_infinity:
        radius = max((abs(v) for v in values), default=0.0)
        out[INF] = math.inf if radius == 0.0 else 1.0 / radius
    return out


# ---------------------------------------------------------------------------
# contour paths


@dataclass(frozen=True)
class Segment:
    """One smooth piece of a contour, parametrized over t in [0, 1].

    Lines: z(t) = start + (end - start) t.
    Arcs:  z(t) = center + radius * exp(i*(theta0 + (theta1 - theta0) t));
    theta1 < theta0 encodes clockwise traversal.
    """

    segment_id: str
    kind: str  # "line" | "arc"
    start: complex = 0j
    end: complex = 0j
    center: complex = 0j
    radius: float = 0.0
    theta0: float = 0.0
    theta1: float = 0.0
    grade_end: str | None = None  # "start" | "end": cluster panels toward a corner

    def point(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "line":
            return self.start + (self.end - self.start) * t
        ang = self.theta0 + (self.theta1 - self.theta0) * t
        return self.center + self.radius * np.exp(1j * ang)

    def velocity(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "line":
            return np.broadcast_to(self.end - self.start, t.shape).copy() if t.shape else np.asarray(self.end - self.start)
        dth = self.theta1 - self.theta0
        ang = self.theta0 + dth * t
        return 1j * dth * self.radius * np.exp(1j * ang)

    @property
    def length(self) -> float:
        if self.kind == "line":
            return abs(self.end - self.start)
        return self.radius * abs(self.theta1 - self.theta0)

    def endpoints(self) -> tuple[complex, complex]:
        return complex(self.point(0.0)), complex(self.point(1.0))


def _line(segment_id, start, end, grade_end=None) -> Segment:
    return Segment(segment_id, "line", start=complex(start), end=complex(end), grade_end=grade_end)


def _arc(segment_id, center, radius, theta0, theta1) -> Segment:
    return Segment(segment_id, "arc", center=complex(center), radius=float(radius), theta0=float(theta0), theta1=float(theta1))


def _seed_panels(seg: Segment) -> tuple[tuple[float, float], ...]:
    """Initial panel subdivision of one segment.

    Arc panels never sweep more than pi/8.  Line panels are graded
    geometrically toward a corner endpoint (where the integrand may be
    merely integrable rather than analytic), eight levels deep.
    """
    if seg.kind == "arc":
        n = max(1, math.ceil(abs(seg.theta1 - seg.theta0) / (math.pi / 8.0)))
        cuts = np.linspace(0.0, 1.0, n + 1)
        return tuple((float(cuts[i]), float(cuts[i + 1])) for i in range(n))
    if seg.grade_end is None:
        cuts = np.linspace(0.0, 1.0, 5)
        return tuple((float(cuts[i]), float(cuts[i + 1])) for i in range(4))
    fracs = [0.0] + [2.0 ** (-k) for k in range(7, -1, -1)]  # 0, 1/128, ..., 1/2, 1
    if seg.grade_end == "start":
        cuts = fracs
    else:
        cuts = [1.0 - f for f in reversed(fracs)]
    return tuple((cuts[i], cuts[i + 1]) for i in range(len(cuts) - 1))


@dataclass(frozen=True)
class ContourPath:
    """A positively oriented contour with per-segment quadrature panels."""

    segments: tuple[Segment, ...]
    panels: tuple[tuple[tuple[float, float], ...], ...]
    nodes_per_panel: int
    cycles: tuple[tuple[int, ...], ...]
    truncated: bool
    outer_radius: float
    interior_samples: tuple[complex, ...]
    excluded_centers: tuple[complex, ...]
    meta: dict

    def quadrature_nodes(self):
        """Yield (segment_id, t, z, w) with sum(g(z) * w) ~ contour integral of g dz."""
        x, w = _gauss_nodes(self.nodes_per_panel)
        for seg, seg_panels in zip(self.segments, self.panels):
            for (t0, t1) in seg_panels:
                half = 0.5 * (t1 - t0)
                mid = 0.5 * (t0 + t1)
                ts = mid + half * x
                zs = seg.point(ts)
                vel = seg.velocity(ts)
                for t, z, v, wk in zip(ts, zs, np.broadcast_to(vel, ts.shape), w):
                    yield seg.segment_id, float(t), complex(z), complex(wk * half * v)

    def node_count(self) -> int:
        return self.nodes_per_panel * sum(len(p) for p in self.panels)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("segment_id,t,re,im,weight_re,weight_im\n")
        for sid, t, z, w in self.quadrature_nodes():
            buf.write(f"{sid},{t:.16g},{z.real:.16g},{z.imag:.16g},{w.real:.16g},{w.imag:.16g}\n")
        return buf.getvalue()

    def describe(self) -> dict:
        return {
            "segments": [
                {
                    "segment_id": s.segment_id,
                    "kind": s.kind,
                    "start": [complex(s.point(0.0)).real, complex(s.point(0.0)).imag],
                    "end": [complex(s.point(1.0)).real, complex(s.point(1.0)).imag],
                    "panels": len(p),
                }
                for s, p in zip(self.segments, self.panels)
            ],
            "cycles": [list(c) for c in self.cycles],
            "nodes_per_panel": self.nodes_per_panel,
            "truncated": self.truncated,
            "outer_radius": self.outer_radius,
            **self.meta,
        }


_GAUSS_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gauss_nodes(n: int) -> tuple[np.ndarray, np.ndarray]:
    if n not in _GAUSS_CACHE:
        _GAUSS_CACHE[n] = leggauss(n)
    return _GAUSS_CACHE[n]


def default_contour_params(region: BisectorRegion, phi: float) -> tuple[float, dict[str, float]]:
    """Midpoint contour parameters for a function living on Omega(phi, (s_d)).

    phi' = (phi + omega) / 2 and s'_d = (s_d + r_d) / 2, with s'_d = 2 s_d
    when the clearance is infinite.  Keeps uniform slack between the
    contour, the spectrum and the function's domain boundary.
    """
    if not (0.0 <= phi < region.omega):
        raise GeometryError(f"need 0 <= phi < omega, got phi={phi}, omega={region.omega}")
    phi_prime = 0.5 * (phi + region.omega)
    radii: dict[str, float] = {}
    for d, s in region.excluded.items():
        r = (region.clearances or {}).get(d, math.inf)
        radii[d] = 2.0 * s if math.isinf(r) else 0.5 * (s + r)
    return phi_prime, radii


def build_contour(
    region: BisectorRegion,
    phi_prime: float,
    radii: Mapping[str, float] | None = None,
    truncation_R: float | None = None,
    nodes_per_panel: int = 8,
) -> ContourPath:
    """Positively oriented boundary of Omega(phi', (s'_d)), panelled.

    ``radii`` maps each excluded singular point to its contour-side ball
    radius s'_d; it must cover exactly the keys of ``region.excluded``,
    with s_d < s'_d (< r_d when the clearance is known).  When ``"inf"``
    is excluded the outer boundary is the circle |z| = 1/s'_inf and the
    path is closed exactly; otherwise the four rays are truncated at
    ``truncation_R`` and closed with arcs there (the path is flagged
    ``truncated`` so integrators report a tail estimate).
    """
    a = region.halfwidth_a
    omega = region.omega
    if not (0.0 < phi_prime < omega):
        raise GeometryError(f"need 0 < phi' < omega, got phi'={phi_prime}, omega={omega}")
    radii = dict(radii or {})
    if set(radii) != set(region.excluded):
        raise GeometryError(
            f"contour radii keys {sorted(radii)} must match excluded singular points "
            f"{sorted(region.excluded)}"
        )
    for d, sp in radii.items():
        if not (sp > region.excluded[d]):
            raise GeometryError(
                f"contour ball radius {sp} at {d} must exceed the domain radius {region.excluded[d]}"
            )
        r = (region.clearances or {}).get(d)
        if r is not None and sp >= r:
            raise GeometryError(
                f"contour ball radius {sp} at {d} must stay below the spectral clearance {r}"
            )

    s_plus = radii.get(PLUS, 0.0)
    s_minus = radii.get(MINUS, 0.0) if a > 0.0 else 0.0

    if INF in radii:
        outer_R = 1.0 / radii[INF]
        truncated = False
    else:
        if truncation_R is None:
            truncation_R = 10.0 * (a + 1.0 + max(s_plus, s_minus))
        outer_R = float(truncation_R)
        truncated = True

    vertex_reach = a + max(s_plus, s_minus)
    if outer_R <= 1.05 * vertex_reach:
        raise GeometryError(
            f"outer radius {outer_R} leaves no room beyond the vertex balls (reach {vertex_reach})"
        )
    if a > 0.0 and s_plus + s_minus >= 2.0 * a:
        raise GeometryError(
            f"vertex balls of radii {s_plus}, {s_minus} overlap across the segment [-a, a] (a={a})"
        )
    if a > 0.0 and max(s_plus, s_minus) >= 2.0 * a and (s_plus > 0.0 or s_minus > 0.0):
        raise GeometryError("a vertex ball may not swallow the opposite vertex")

    segs: list[Segment] = []
    cycles: list[tuple[int, ...]] = []

    if a > 0.0:
        cos_p, sin_p = math.cos(phi_prime), math.sin(phi_prime)
        disc = outer_R * outer_R - (a * sin_p) ** 2
        if disc <= 0.0:
            raise GeometryError("outer radius too small for the ray geometry")
        t_max = -a * cos_p + math.sqrt(disc)
        if t_max <= 1.05 * max(s_plus, s_minus):
            raise GeometryError("outer radius leaves no ray between the vertex balls and the closure arc")
        e_up = complex(math.cos(phi_prime), math.sin(phi_prime))
        e_dn = e_up.conjugate()
        f_up = complex(math.cos(math.pi - phi_prime), math.sin(math.pi - phi_prime))
        f_dn = f_up.conjugate()
        theta_r = math.atan2((a + t_max * e_up).imag, (a + t_max * e_up).real)
        theta_l = math.pi - theta_r

        segs.append(_line("ray_right_upper", a + s_plus * e_up, a + t_max * e_up,
                          grade_end=None if s_plus > 0.0 else "start"))
        segs.append(_arc("arc_outer_upper", 0.0, outer_R, theta_r, theta_l))
        segs.append(_line("ray_left_upper", -a + t_max * f_up, -a + s_minus * f_up,
                          grade_end=None if s_minus > 0.0 else "end"))
        if s_minus > 0.0:
            segs.append(_arc("arc_vertex_minus", -a, s_minus, math.pi - phi_prime, -(math.pi - phi_prime)))
        segs.append(_line("ray_left_lower", -a + s_minus * f_dn, -a + t_max * f_dn,
                          grade_end=None if s_minus > 0.0 else "start"))
        segs.append(_arc("arc_outer_lower", 0.0, outer_R, -theta_l, -theta_r))
        segs.append(_line("ray_right_lower", a + t_max * e_dn, a + s_plus * e_dn,
                          grade_end=None if s_plus > 0.0 else "end"))
        if s_plus > 0.0:
            segs.append(_arc("arc_vertex_plus", a, s_plus, -phi_prime, phi_prime - _TWO_PI))
        cycles.append(tuple(range(len(segs))))
    else:
        # two cones joined at the origin: one closed cycle per cone
        if s_plus > 0.0 and outer_R <= 1.05 * s_plus:
            raise GeometryError("outer radius must exceed the vertex ball radius")
        e_ur = complex(math.cos(phi_prime), math.sin(phi_prime))
        e_ul = complex(math.cos(math.pi - phi_prime), math.sin(math.pi - phi_prime))
        e_ll = e_ul.conjugate()
        e_lr = e_ur.conjugate()
        grade = None if s_plus > 0.0 else "start"
        grade_in = None if s_plus > 0.0 else "end"

        start = len(segs)
        segs.append(_line("ray_upper_right", s_plus * e_ur, outer_R * e_ur, grade_end=grade))
        segs.append(_arc("arc_outer_upper", 0.0, outer_R, phi_prime, math.pi - phi_prime))
        segs.append(_line("ray_upper_left", outer_R * e_ul, s_plus * e_ul, grade_end=grade_in))
        if s_plus > 0.0:
            segs.append(_arc("arc_inner_upper", 0.0, s_plus, math.pi - phi_prime, phi_prime))
        cycles.append(tuple(range(start, len(segs))))

        start = len(segs)
        segs.append(_line("ray_lower_left", s_plus * e_ll, outer_R * e_ll, grade_end=grade))
        segs.append(_arc("arc_outer_lower", 0.0, outer_R, phi_prime - math.pi, -phi_prime))
        segs.append(_line("ray_lower_right", outer_R * e_lr, s_plus * e_lr, grade_end=grade_in))
        if s_plus > 0.0:
            segs.append(_arc("arc_inner_lower", 0.0, s_plus, -phi_prime, phi_prime - math.pi))
        cycles.append(tuple(range(start, len(segs))))

    interior, centers = _reference_points(a, phi_prime, s_plus, s_minus, outer_R, truncated)

    return ContourPath(
        segments=tuple(segs),
        panels=tuple(_seed_panels(s) for s in segs),
        nodes_per_panel=int(nodes_per_panel),
        cycles=tuple(cycles),
        truncated=truncated,
        outer_radius=outer_R,
        interior_samples=interior,
        excluded_centers=centers,
        meta={
            "omega": omega,
            "halfwidth_a": a,
            "phi_prime": phi_prime,
            "radii": {k: float(v) for k, v in radii.items()},
        },
    )


def _reference_points(a, phi_prime, s_plus, s_minus, outer_R, truncated):
    """Deterministic winding-test points: interior samples and excluded centers."""
    clear = 0.0
    if a > 0.0:
        for s in (s_plus, s_minus):
            if s > a:
                clear = max(clear, math.sqrt(s * s - a * a))
    else:
        clear = s_plus
    y_lo = max(1.05 * clear, outer_R * 1e-3)
    y_hi = 0.9 * outer_R
    if y_lo >= y_hi:
        y_star = 0.5 * (clear + outer_R)
    else:
        y_star = math.sqrt(y_lo * y_hi)
    interior = [complex(0.0, y_star), complex(0.0, -y_star)]
    if a > 0.0 and s_plus < a and s_minus < a:
        interior.append(0j)

    centers: list[complex] = []
    if s_minus > 0.0:
        centers.append(complex(-a, 0.0))
    if s_plus > 0.0:
        centers.append(complex(a, 0.0) if a > 0.0 else 0j)
    # a point inside the excluded right sector, well within the outer circle
    centers.append(complex(a + 0.45 * (outer_R - a), 0.0))
    if not truncated:
        centers.append(complex(0.0, 1.25 * outer_R))
    return tuple(interior), tuple(centers)


def circle_path(center: complex, radius: float, nodes_per_panel: int = 8, n_panels: int = 16) -> ContourPath:
    """Counterclockwise circle as a single-cycle ContourPath.

    Used for spectral projections around eigenvalue clusters.
    """
    if radius <= 0.0:
        raise GeometryError(f"circle radius must be positive, got {radius}")
    seg = _arc("circle", center, radius, 0.0, _TWO_PI)
    cuts = np.linspace(0.0, 1.0, max(8, int(n_panels)) + 1)
    panels = tuple((float(cuts[i]), float(cuts[i + 1])) for i in range(len(cuts) - 1))
    return ContourPath(
        segments=(seg,),
        panels=(panels,),
        nodes_per_panel=int(nodes_per_panel),
        cycles=((0,),),
        truncated=False,
        outer_radius=abs(center) + radius,
        interior_samples=(complex(center),),
        excluded_centers=(complex(center) + 2.0 * radius,),
        meta={"kind": "circle", "center": [complex(center).real, complex(center).imag], "radius": float(radius)},
    )


# ---------------------------------------------------------------------------
# adaptive quadrature on a ContourPath


def _pairwise_sum(values: Sequence[np.ndarray]):
    n = len(values)
    if n == 1:
        return values[0]
    half = n // 2
    return _pairwise_sum(values[:half]) + _pairwise_sum(values[half:])


class _Panel:
    __slots__ = ("seg_idx", "t0", "t1", "depth", "value", "err")

    def __init__(self, seg_idx, t0, t1, depth, value, err):
        self.seg_idx = seg_idx
        self.t0 = t0
        self.t1 = t1
        self.depth = depth
        self.value = value
        self.err = err


def adaptive_contour_integral(
    path: ContourPath,
    integrand: Callable[[complex], np.ndarray],
    tol: float = 1e-9,
    max_depth: int = 12,
    mapper: Callable | None = None,
) -> tuple[np.ndarray, dict]:
    """(1/2*pi*i) * integral over the path of integrand(z) dz, adaptively.

    The integrand may return scalars or ndarrays (all calls must agree
    in shape).  Panels are bisected worst-first until the sum of the
    embedded coarse-vs-halves error estimates drops below
    tol * max(1, ||value||_F); exceeding ``max_depth`` bisections on a
    panel that still dominates the error raises QuadratureDiverged.

    ``mapper`` evaluates the integrand over a panel's nodes; any
    order-preserving substitute for the builtin ``map`` (for instance
    ``ThreadPoolExecutor.map``) keeps results bit-identical because the
    accumulation order is fixed by the node order.

    Returns (value, report) with report keys panels, nodes,
    tail_estimate, refinement_steps.
    """
    x, w = _gauss_nodes(path.nodes_per_panel)
    evals = 0
    node_map = map if mapper is None else mapper

    def gl_panel(seg, t0, t1):
        nonlocal evals
        half = 0.5 * (t1 - t0)
        mid = 0.5 * (t0 + t1)
        ts = mid + half * x
        zs = [complex(z) for z in np.atleast_1d(seg.point(ts))]
        vel = np.broadcast_to(seg.velocity(ts), ts.shape)
        acc = None
        for val_z, v, wk in zip(node_map(integrand, zs), vel, w):
            val = np.asarray(val_z, dtype=complex) * (wk * half * v)
            acc = val if acc is None else acc + val
        evals += len(ts)
        return acc

    def norm(v):
        return float(np.linalg.norm(np.asarray(v).ravel()))

    def make_panel(seg_idx, t0, t1, depth):
        seg = path.segments[seg_idx]
        coarse = gl_panel(seg, t0, t1)
        tm = 0.5 * (t0 + t1)
        left = gl_panel(seg, t0, tm)
        right = gl_panel(seg, tm, t1)
        refined = left + right
        return _Panel(seg_idx, t0, t1, depth, refined, norm(coarse - refined))

    leaves: list[_Panel] = []
    for seg_idx, seg_panels in enumerate(path.panels):
        for (t0, t1) in seg_panels:
            leaves.append(make_panel(seg_idx, t0, t1, 0))

    heap = [(-p.err, i) for i, p in enumerate(leaves)]
    heapq.heapify(heap)
    alive = set(range(len(leaves)))
    steps = 0

    def totals():
        vals = [leaves[i].value for i in sorted(alive, key=lambda k: (leaves[k].seg_idx, leaves[k].t0))]
        total = _pairwise_sum(vals)
        return total, sum(leaves[i].err for i in alive)

    total, err_sum = totals()
    skipped_max_depth = False
    while err_sum > tol * max(1.0, norm(total)):
        while heap and heap[0][1] not in alive:
            heapq.heappop(heap)
        candidate = None
        stash = []
        while heap:
            neg_err, idx = heapq.heappop(heap)
            if idx not in alive:
                continue
            if leaves[idx].depth >= max_depth:
                stash.append((neg_err, idx))
                continue
            candidate = idx
            break
        for item in stash:
            heapq.heappush(heap, item)
        if candidate is None:
            raise QuadratureDiverged(
                f"contour quadrature stuck at depth {max_depth}: error {err_sum:.3e} "
                f"exceeds tolerance {tol:.3e}"
            )
        p = leaves[candidate]
        alive.discard(candidate)
        tm = 0.5 * (p.t0 + p.t1)
        for (u0, u1) in ((p.t0, tm), (tm, p.t1)):
            child = make_panel(p.seg_idx, u0, u1, p.depth + 1)
            leaves.append(child)
            alive.add(len(leaves) - 1)
            heapq.heappush(heap, (-child.err, len(leaves) - 1))
        steps += 1
        total, err_sum = totals()

    tail = 0.0
    if path.truncated:
        # crude decay-assumption bound: |g| sampled at each truncated ray end
        for seg in path.segments:
            if seg.kind == "line":
                z_end = max(seg.endpoints(), key=abs)
                if abs(abs(z_end) - path.outer_radius) < 1e-9 * path.outer_radius:
                    tail += norm(integrand(complex(z_end))) * abs(z_end)
        tail /= _TWO_PI

    value = total / (2j * math.pi)
    report = {
        "panels": len(alive),
        "nodes": evals,
        "tail_estimate": tail,
        "refinement_steps": steps,
    }
    return value, report


def winding_number(path: ContourPath, z0: complex, tol: float = 1e-9) -> float:
    """Index of the path about z0, as a real number (callers round)."""
    val, _ = adaptive_contour_integral(path, lambda z: 1.0 / (z - z0), tol=tol, max_depth=14)
    return float(np.real(complex(val)))
