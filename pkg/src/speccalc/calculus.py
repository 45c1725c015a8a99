"""Primary and regularized functional calculus, spectral projections.

The primary calculus evaluates f(A) for f in the admissible algebra
E(A): split f against the basis {1/(b+z), 1/(b-z), 1}, integrate the
vanishing part f0 over the boundary of Omega(phi', (s'_d)) against the
resolvent, and add the basis images

    f(A) = (1/2 pi i) \oint f0(z) (z-A)^{-1} dz
           + coef_plus (b+A)^{-1} + coef_minus (b-A)^{-1} + coef_one I.

The regularized calculus extends this to functions with poles or
growth at the singular points: f(A) := e(A)^{-1} (ef)(A) for a
regularizer e with ef admissible and e(A) injective.  Spectral
projections integrate the bare resolvent around a clopen part of the
extended spectrum.

Dense operators use adaptive panel quadrature; diagonal models are
evaluated componentwise and exactly.  Every regularized result is
cross-checked against an independently computed second route unless
the caller disables the check.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np
import scipy.linalg

from .errors import (
    NotClopen,
    RegularizerNotInjective,
    SpecCalcError,
    ValidationError,
)
from .functions import (
    INFINITE,
    MeromFn,
    constant_fn,
    decompose_E,
    default_regularizer,
    limit_is_infinite,
    product,
    regularized_product,
    resolvent_basis_fn,
)
from .geometry import (
    INF,
    BisectorRegion,
    adaptive_contour_integral,
    build_contour,
    circle_path,
    default_contour_params,
    membership,
    singular_location,
)
from .operators import (
    DenseOperator,
    DiagonalModel,
    SpectralSet,
    default_base_point,
    excluded_region,
    regularizer_context,
    singular_points,
)

__all__ = [
    "CalculusResult",
    "ProjectionResult",
    "apply_primary",
    "apply_regularized",
    "spectral_projection",
    "restrict_to_projection",
    "selector_from_points",
]

_COND_WARN = 1e10
_PROJ_TOL = 1e-8


@dataclass(frozen=True)
class CalculusResult:
    """Outcome of a calculus application.

    ``operator`` is the computed f(A) in the backend's own
    representation.  ``bounded`` is False only on the diagonal backend
    when the image has unbounded modulus.  ``regularizer_used`` is the
    constant 1 for the primary calculus.  ``quadrature_report`` is None
    for diagonal models, whose evaluation is exact.
    """

    operator: object
    bounded: bool
    regularizer_used: MeromFn
    quadrature_report: dict | None


@dataclass(frozen=True)
class ProjectionResult:
    projector: object
    lambda_set: SpectralSet
    complement_rank_finite: bool


# ---------------------------------------------------------------------------
# shared guards


def _require_certified(op) -> None:
    if not getattr(op, "certified", False):
        raise SpecCalcError(
            "operator has not passed certification; run certify() first"
        )


def _admissible_base(op, base_point) -> float:
    if base_point is None:
        return float(default_base_point(op))
    b = complex(base_point)
    a = op.region.halfwidth_a
    if abs(b.imag) > 0.0 or b.real <= a:
        raise ValidationError([
            ("base_point", f"need a real base point b > {a}, got {base_point}")
        ])
    return float(b.real)


def _check_branch_halfwidth(f: MeromFn, op) -> None:
    if f.requires_zero_halfwidth and op.region.halfwidth_a > 0.0:
        raise SpecCalcError(
            f"{f.label} uses a branch cut through the interior of the "
            f"bisector with half-width {op.region.halfwidth_a}; only "
            "half-width 0 regions keep the cut outside"
        )


def _check_poles_outside(f: MeromFn, omega_domain: BisectorRegion) -> None:
    """Poles of the integrand must avoid the closed integration domain."""
    for p, order in f.poles:
        if membership(omega_domain, p):
            raise SpecCalcError(
                f"pole of order {order} at {p} lies inside the integration "
                "domain; it is neither excluded by a ball nor cleared by a "
                "regularizer"
            )


# ---------------------------------------------------------------------------
# rational evaluation at a dense operator


def _poly_mat(coeffs: Sequence[complex], A: np.ndarray) -> np.ndarray:
    """Matrix polynomial, ascending coefficients, Horner form."""
    n = A.shape[0]
    eye = np.eye(n, dtype=complex)
    cs = [complex(c) for c in coeffs] or [0j]
    out = cs[-1] * eye
    for c in reversed(cs[:-1]):
        out = out @ A + c * eye
    return out


def _rational_mat(f: MeromFn, A: np.ndarray) -> tuple[np.ndarray, float]:
    """num(A) den(A)^{-1} for a rational f, with the condition number
    of den(A) folded into the reported estimate."""
    num = f.data.get("num")
    den = f.data.get("den")
    if num is None or den is None:
        raise SpecCalcError(f"{f.label} carries no rational data")
    N = _poly_mat(num, A)
    D = _poly_mat(den, A)
    X = scipy.linalg.solve(D, N)
    sv = np.linalg.svd(X, compute_uv=False)
    floor = max(sv[0], 1e-300)
    cond = float(floor / max(sv[-1], 1e-300))
    return X, cond


def _injectivity_guard(eA: np.ndarray, label: str) -> float:
    sv = np.linalg.svd(eA, compute_uv=False)
    top = max(float(sv[0]), 1e-300)
    if float(sv[-1]) <= 1e-12 * top:
        raise RegularizerNotInjective(
            f"{label}(A) is numerically singular (sigma_min/sigma_max = "
            f"{float(sv[-1]) / top:.2e}); the regularizer vanishes on an "
            "eigenspace"
        )
    cond = top / float(sv[-1])
    if cond > _COND_WARN:
        warnings.warn(
            f"{label}(A) has condition estimate {cond:.2e}; the "
            "regularizer is close to non-injective and the inversion "
            "may lose digits",
            RuntimeWarning,
            stacklevel=3,
        )
    return cond


# ---------------------------------------------------------------------------
# primary calculus


def apply_primary(
    f: MeromFn,
    op,
    tol: float = 1e-9,
    *,
    base_point: float | None = None,
    max_panel_depth: int = 12,
    nodes_per_panel: int = 8,
    mapper: Callable | None = None,
) -> CalculusResult:
    """f(A) for f in the admissible algebra E(A).

    Dense operators: decompose f against the resolvent basis at the
    base point b, integrate the vanishing part adaptively over the
    region boundary, and assemble

        f(A) = f0(A) + coef_plus (b+A)^{-1} + coef_minus (b-A)^{-1} + coef_one I.

    Diagonal models: apply f to every atom and tail; the evaluation is
    exact, so no quadrature report is produced.
    """
    _require_certified(op)
    _check_branch_halfwidth(f, op)
    b = _admissible_base(op, base_point)
    m_points = singular_points(op)
    dec = decompose_E(f, m_points, b)

    if isinstance(op, DiagonalModel):
        image = op.map(f)
        bounded = not image.spectrum().includes_infinity
        return CalculusResult(
            operator=image,
            bounded=bounded,
            regularizer_used=constant_fn(1.0, label="1"),
            quadrature_report=None,
        )

    region = excluded_region(op)
    phi_prime, radii = default_contour_params(region, f.phi)
    omega_domain = BisectorRegion(
        omega=phi_prime,
        halfwidth_a=region.halfwidth_a,
        excluded=radii,
    )
    _check_poles_outside(f, omega_domain)
    path = build_contour(region, phi_prime, radii, nodes_per_panel=nodes_per_panel)

    A = op.matrix
    n = A.shape[0]
    f0 = dec.f0

    def integrand(z: complex) -> np.ndarray:
        return f0(z) * op.resolve(z)

    value, report = adaptive_contour_integral(
        path, integrand, tol=tol, max_depth=max_panel_depth, mapper=mapper
    )
    X = np.asarray(value, dtype=complex)
    eye = np.eye(n, dtype=complex)
    if dec.coef_plus != 0:
        X = X + dec.coef_plus * (-op.resolve(-b))
    if dec.coef_minus != 0:
        X = X + dec.coef_minus * op.resolve(b)
    if dec.coef_one != 0:
        X = X + dec.coef_one * eye
    return CalculusResult(
        operator=DenseOperator(matrix=X, region=op.region),
        bounded=True,
        regularizer_used=constant_fn(1.0, label="1"),
        quadrature_report=report,
    )


# ---------------------------------------------------------------------------
# regularized calculus


def _shifted_regularizer(e: MeromFn, f: MeromFn, ctx, b: float) -> tuple[MeromFn, MeromFn]:
    """Second route: e2 = e/(b-z) and the product e2*f, with the limits
    of e2*f forced from the declared limits of e*f."""
    a = ctx.halfwidth_a
    ef = regularized_product(e, f, ctx)
    rb = resolvent_basis_fn(b, -1)
    limits: dict[str, object] = {}
    decay: dict[str, float] = {}
    for d, c in ef.limits.items():
        beta = ef.decay_orders.get(d, 1.0)
        if d == INF:
            limits[d] = 0.0
            decay[d] = beta + 1.0 if c == 0 else 1.0
            continue
        loc = singular_location(d, a)
        if limit_is_infinite(c):
            # e cleared the growth of f; e2 only adds decay, never growth
            limits[d] = INFINITE
            decay[d] = beta
        else:
            limits[d] = complex(c) / (b - loc)
            decay[d] = min(beta, 1.0) if c != 0 else beta
    ef2 = product(ef, rb, limits=limits, decay_orders=decay,
                  label=f"({ef.label})/({b:g}-z)")
    e2_num = e.data.get("num")
    e2_den = e.data.get("den")
    if e2_num is None or e2_den is None:
        raise SpecCalcError(f"regularizer {e.label} carries no rational data")
    return ef2, rb


def _diagonal_route_check(op: DiagonalModel, f, e, ef, label: str, b: float | None = None):
    """Compare f(lambda) with ef(lambda)/e(lambda) on every enumerated
    eigenvalue where e does not vanish.  The division route is the
    defining formula; the direct image must match it exactly."""
    def points() -> Iterable[complex]:
        for v, _m in op.atoms:
            yield complex(v)
        for t in op.tails:
            for s in op.tail_elements(t):
                yield complex(s)

    for lam in points():
        ev = complex(e(lam))
        if b is not None:
            # second route: ef is already the shifted product, so the
            # matching denominator is e(lam)/(b - lam)
            ev = ev / (b - lam)
        if abs(ev) <= 1e-13:
            continue
        direct = complex(f(lam))
        routed = complex(ef(lam)) / ev
        scale = max(1.0, abs(direct))
        if abs(direct - routed) > 1e-10 * scale:
            raise SpecCalcError(
                f"regularizer route disagreement at eigenvalue {lam}: "
                f"direct {direct} vs {label} route {routed}"
            )


def apply_regularized(
    f: MeromFn,
    op,
    tol: float = 1e-9,
    *,
    regularizer: MeromFn | None = None,
    base_point: float | None = None,
    check_independence: bool = True,
    max_panel_depth: int = 12,
    nodes_per_panel: int = 8,
    mapper: Callable | None = None,
) -> CalculusResult:
    """f(A) := e(A)^{-1} (ef)(A) for a regularizer e.

    The default regularizer clears the poles of f inside the closed
    bisector and matches its growth at singular points of the extended
    spectrum.  e(A) is inverted through an LU factorization after an
    injectivity guard; a condition estimate above 1e10 emits a
    RuntimeWarning.  Unless disabled, the result is recomputed with the
    second regularizer e(z)/(b-z) and both routes must agree (dense:
    1e-8, diagonal: exact evaluation identity).
    """
    _require_certified(op)
    _check_branch_halfwidth(f, op)
    b = _admissible_base(op, base_point)
    ctx = regularizer_context(op, b)
    e = regularizer if regularizer is not None else default_regularizer(f, ctx)
    ef = regularized_product(e, f, ctx)

    if isinstance(op, DiagonalModel):
        try:
            image = op.map(f)
        except SpecCalcError as exc:
            raise RegularizerNotInjective(
                f"cannot clear a pole sitting on an eigenvalue: {exc}"
            ) from exc
        _diagonal_route_check(op, f, e, ef, "e")
        if check_independence:
            ef2, _rb = _shifted_regularizer(e, f, ctx, b)
            _diagonal_route_check(op, f, e, ef2, "e/(b-z)", b=b)
        bounded = not image.spectrum().includes_infinity
        return CalculusResult(
            operator=image,
            bounded=bounded,
            regularizer_used=e,
            quadrature_report=None,
        )

    primary = apply_primary(
        ef, op, tol,
        base_point=b,
        max_panel_depth=max_panel_depth,
        nodes_per_panel=nodes_per_panel,
        mapper=mapper,
    )
    efA = primary.operator.matrix
    A = op.matrix
    eA, _ = _rational_mat(e, A)
    cond = _injectivity_guard(eA, e.label)
    X = scipy.linalg.solve(eA, efA)

    report = dict(primary.quadrature_report or {})
    report["condition_estimate"] = cond

    if check_independence:
        ef2, _rb = _shifted_regularizer(e, f, ctx, b)
        second = apply_primary(
            ef2, op, tol,
            base_point=b,
            max_panel_depth=max_panel_depth,
            nodes_per_panel=nodes_per_panel,
            mapper=mapper,
        )
        e2A = eA @ op.resolve(b)
        _injectivity_guard(e2A, f"({e.label})/(b-z)")
        X2 = scipy.linalg.solve(e2A, second.operator.matrix)
        gap = float(np.linalg.norm(X - X2))
        if gap > 1e-8 * max(1.0, float(np.linalg.norm(X))):
            raise SpecCalcError(
                f"regularizer independence check failed: routes differ by "
                f"{gap:.3e} in Frobenius norm"
            )

    return CalculusResult(
        operator=DenseOperator(matrix=X, region=op.region),
        bounded=True,
        regularizer_used=e,
        quadrature_report=report,
    )


# ---------------------------------------------------------------------------
# spectral components and projections


@dataclass(frozen=True)
class _Component:
    """One selectable clopen unit of the extended spectrum."""

    values: tuple[complex, ...]          # representative points
    includes_infinity: bool
    atom_indices: tuple[int, ...] = ()
    tail_indices: tuple[int, ...] = ()
    point_indices: tuple[int, ...] = ()  # dense: indices into spectrum.points


def _close(u: complex, v: complex) -> bool:
    return abs(u - v) <= 1e-9 * max(1.0, abs(u), abs(v))


def _diagonal_components(op: DiagonalModel) -> list[_Component]:
    """Atoms and tails grouped with their limit points.

    A tail forms one unit with its limit; an atom sitting on a tail's
    limit (or on one of its elements) joins that unit; tails sharing a
    limit merge; all unbounded tails share the point at infinity.
    """
    n_atoms = len(op.atoms)
    n_tails = len(op.tails)
    parent = list(range(n_atoms + n_tails))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    def union(i: int, j: int) -> None:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)

    tail_points: list[list[complex]] = []
    tail_unbounded: list[bool] = []
    for t in op.tails:
        pts = [complex(s) for s in op.tail_elements(t)]
        unbounded = limit_is_infinite(t.limit)
        if not unbounded:
            pts.append(complex(t.limit))
        tail_points.append(pts)
        tail_unbounded.append(unbounded)

    for i, (v, _m) in enumerate(op.atoms):
        for j in range(n_tails):
            if any(_close(complex(v), p) for p in tail_points[j]):
                union(i, n_atoms + j)
    for i, (v, _m) in enumerate(op.atoms):
        for j, (w, _mw) in enumerate(op.atoms):
            if j > i and _close(complex(v), complex(w)):
                union(i, j)
    for i in range(n_tails):
        for j in range(i + 1, n_tails):
            if tail_unbounded[i] and tail_unbounded[j]:
                union(n_atoms + i, n_atoms + j)
            elif not tail_unbounded[i] and not tail_unbounded[j]:
                if _close(complex(op.tails[i].limit), complex(op.tails[j].limit)):
                    union(n_atoms + i, n_atoms + j)

    groups: dict[int, dict] = {}
    for i in range(n_atoms + n_tails):
        g = groups.setdefault(find(i), {"atoms": [], "tails": []})
        if i < n_atoms:
            g["atoms"].append(i)
        else:
            g["tails"].append(i - n_atoms)

    comps = []
    for root in sorted(groups):
        g = groups[root]
        values: list[complex] = [complex(op.atoms[i][0]) for i in g["atoms"]]
        inf_flag = False
        for j in g["tails"]:
            values.extend(tail_points[j])
            inf_flag = inf_flag or tail_unbounded[j]
        comps.append(_Component(
            values=tuple(values),
            includes_infinity=inf_flag,
            atom_indices=tuple(g["atoms"]),
            tail_indices=tuple(g["tails"]),
        ))
    return comps


def _dense_components(op: DenseOperator) -> list[_Component]:
    sigma = op.spectrum()
    return [
        _Component(values=(complex(p.value),), includes_infinity=False,
                   point_indices=(i,))
        for i, p in enumerate(sigma.points)
    ]


def selector_from_points(anchors: Iterable, *, tol: float = 1e-8):
    """Select every component containing one of the anchor points.

    Anchors are complex numbers, or ``math.inf`` / the string ``"inf"``
    for the point at infinity.  Every anchor must hit some component.
    """
    finite: list[complex] = []
    want_inf = False
    for p in anchors:
        if p == "inf" or (isinstance(p, float) and math.isinf(p)):
            want_inf = True
        else:
            finite.append(complex(p))

    matched = [False] * len(finite)
    inf_matched = [False]

    def choose(comp: _Component) -> bool:
        hit = False
        for k, p in enumerate(finite):
            if any(abs(p - v) <= tol * max(1.0, abs(p)) for v in comp.values):
                matched[k] = True
                hit = True
        if want_inf and comp.includes_infinity:
            inf_matched[0] = True
            hit = True
        return hit

    def finalize() -> None:
        for k, ok in enumerate(matched):
            if not ok:
                raise SpecCalcError(
                    f"no spectral component contains the anchor {finite[k]}"
                )
        if want_inf and not inf_matched[0]:
            raise SpecCalcError(
                "no spectral component contains the point at infinity"
            )

    choose.finalize = finalize  # type: ignore[attr-defined]
    choose.by_component = True  # type: ignore[attr-defined]
    return choose


def _evaluate_selector(selector, comps: list[_Component]) -> list[bool]:
    if getattr(selector, "by_component", False):
        flags = [bool(selector(c)) for c in comps]
        finalize = getattr(selector, "finalize", None)
        if finalize is not None:
            finalize()
        return flags
    if not callable(selector):
        selector = selector_from_points(selector)
        return _evaluate_selector(selector, comps)
    # value predicate: must be unanimous on each component
    flags = []
    for c in comps:
        votes = [bool(selector(v)) for v in c.values]
        if c.includes_infinity:
            votes.append(bool(selector(math.inf)))
        if votes and any(votes) and not all(votes):
            raise NotClopen(
                f"selector splits the connected component containing "
                f"{c.values[0]}; the selected set is not open and closed "
                "in the extended spectrum"
            )
        flags.append(bool(votes and votes[0]))
    return flags


def _lambda_set(op, comps: list[_Component], flags: list[bool]) -> SpectralSet:
    sigma = op.spectrum()
    selected_values: list[complex] = []
    inf_selected = False
    for c, keep in zip(comps, flags):
        if keep:
            selected_values.extend(c.values)
            inf_selected = inf_selected or c.includes_infinity

    def value_selected(v: complex) -> bool:
        return any(_close(complex(v), s) for s in selected_values)

    points = tuple(p for p in sigma.points if value_selected(p.value))
    return SpectralSet(points=points,
                       includes_infinity=sigma.includes_infinity and inf_selected)


def spectral_projection(
    op,
    selector,
    tol: float = 1e-9,
    *,
    nodes_per_panel: int = 8,
    max_panel_depth: int = 12,
    mapper: Callable | None = None,
) -> ProjectionResult:
    """Projection P onto the selected clopen part of the spectrum.

    ``selector`` is either a predicate over spectral values (it must be
    unanimous on each connected component, otherwise NotClopen), an
    iterable of anchor points, or the callable from
    :func:`selector_from_points`.

    Dense: one contour integral of the resolvent around each selected
    eigenvalue cluster.  Diagonal: indicator multiplier; when the
    selection contains the point at infinity the projector is formed as
    the identity minus the complement's projector.
    """
    if isinstance(op, DiagonalModel):
        comps = _diagonal_components(op)
    else:
        comps = _dense_components(op)
    flags = _evaluate_selector(selector, comps)
    lam = _lambda_set(op, comps, flags)

    if isinstance(op, DiagonalModel):
        inf_selected = lam.includes_infinity
        keep_atom = [False] * len(op.atoms)
        keep_tail = [False] * len(op.tails)
        for c, keep in zip(comps, flags):
            for i in c.atom_indices:
                keep_atom[i] = keep
            for j in c.tail_indices:
                keep_tail[j] = keep
        if inf_selected:
            # identity minus the complement's indicator
            sel_a = [not k for k in keep_atom]
            sel_t = [not k for k in keep_tail]
            one_val, zero_val = 0j, 1.0 + 0j
        else:
            sel_a, sel_t = keep_atom, keep_tail
            one_val, zero_val = 1.0 + 0j, 0j

        def side_mult(flagged: bool) -> float:
            total = 0.0
            for (v, m), k_a in zip(op.atoms, sel_a):
                if k_a == flagged:
                    total = math.inf if (m == math.inf or total == math.inf) else total + m
            for t, k_t in zip(op.tails, sel_t):
                if k_t == flagged:
                    total = math.inf
            return total

        m_sel = side_mult(True)
        m_unsel = side_mult(False)
        atoms = []
        if m_sel:
            atoms.append((one_val, m_sel))
        if m_unsel:
            atoms.append((zero_val, m_unsel))
        if not atoms:
            atoms.append((0j, 1))
        projector = DiagonalModel(atoms=tuple(atoms), tails=())
        # complement rank: count of eigenvalues left out of Lambda
        comp_rank_finite = True
        for (v, m), k_a in zip(op.atoms, keep_atom):
            if not k_a and m == math.inf:
                comp_rank_finite = False
        for t, k_t in zip(op.tails, keep_tail):
            if not k_t:
                comp_rank_finite = False
        return ProjectionResult(projector=projector, lambda_set=lam,
                                complement_rank_finite=comp_rank_finite)

    # dense: residue integrals cluster by cluster
    sigma = op.spectrum()
    values = [complex(p.value) for p in sigma.points]
    A = op.matrix
    n = A.shape[0]
    P = np.zeros((n, n), dtype=complex)
    for (comp, keep) in zip(comps, flags):
        if not keep:
            continue
        v = comp.values[0]
        others = [u for u in values if not _close(u, v)]
        radius = 1.0 if not others else 0.45 * min(abs(u - v) for u in others)
        path = circle_path(v, radius, nodes_per_panel=nodes_per_panel)
        value, _report = adaptive_contour_integral(
            path, op.resolve, tol=tol, max_depth=max_panel_depth, mapper=mapper
        )
        P = P + np.asarray(value, dtype=complex)

    norm_p = float(np.linalg.norm(P))
    if float(np.linalg.norm(P @ P - P)) > _PROJ_TOL * max(1.0, norm_p):
        raise SpecCalcError("computed projector fails idempotency at 1e-8")
    norm_a = float(np.linalg.norm(A, 2))
    if float(np.linalg.norm(P @ A - A @ P)) > _PROJ_TOL * max(1.0, norm_a):
        raise SpecCalcError("computed projector fails to commute with A at 1e-8")
    return ProjectionResult(
        projector=DenseOperator(matrix=P, region=op.region),
        lambda_set=lam,
        complement_rank_finite=True,
    )


def restrict_to_projection(op, proj: ProjectionResult):
    """The part of the operator in the range of the projector.

    Dense: compress onto an orthonormal basis of the range (an
    invariant subspace, so compression equals restriction).  Diagonal:
    drop the atoms and tails outside the selected set.
    """
    lam = proj.lambda_set
    if isinstance(op, DiagonalModel):
        atoms = tuple(
            (v, m) for v, m in op.atoms if lam.contains(complex(v), tol=1e-8)
        )
        tails = []
        for t in op.tails:
            if limit_is_infinite(t.limit):
                if lam.includes_infinity:
                    tails.append(t)
            elif lam.contains(complex(t.limit), tol=1e-8):
                tails.append(t)
        if not atoms and not tails:
            raise SpecCalcError("restriction to an empty spectral set")
        return DiagonalModel(atoms=atoms, tails=tuple(tails), region=op.region,
                             truncation_K=op.truncation_K)

    P = proj.projector.matrix
    sv = np.linalg.svd(P, compute_uv=False)
    rank = int(np.sum(sv > 0.5))
    if rank == 0:
        raise SpecCalcError("restriction to an empty spectral set")
    U, _s, _Vh = np.linalg.svd(P)
    Q = U[:, :rank]
    compressed = Q.conj().T @ op.matrix @ Q
    return DenseOperator(matrix=compressed, region=op.region)
