"""Meromorphic function models over bisector regions.

A :class:`MeromFn` couples a plain evaluator with declared singular data:
poles and zeros inside the region, limits at the singular points
``{-a, +a, inf}`` (finite, or the point at infinity), and asymptotic
orders.  Classification (regular / quasi-regular) is declaration-driven
with numeric probes as sanity checks; the defining integral condition is
not decidable from an evaluator alone.

Conventions:

* limits use ``math.inf`` (as a float) for the point at infinity of the
  Riemann sphere, finite limits are complex numbers,
* ``decay_orders[d]`` is a positive exponent beta with
  ``|f(z) - c_d| ~ |z - d|^beta`` near a finite d (``|z|^-beta`` at
  infinity) when the declared limit c_d is finite; when c_d is infinite
  the same field declares the growth order ``|f(z)| ~ |z - d|^-beta``
  (``|z|^beta`` at infinity).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    NoRegularizer,
    RegularizerNotInjective,
    SingularSystem,
    SpecCalcError,
    UndeclaredLimit,
    ValidationError,
)
from .geometry import (
    INF,
    MINUS,
    PLUS,
    BisectorRegion,
    bisector_contains,
    closed_bisector_violation,
)

INFINITE = math.inf  # declared limit marker: the point at infinity

_MERGE_TOL = 1e-9


def limit_is_infinite(c) -> bool:
    if c is None:
        return False
    if isinstance(c, complex):
        return math.isinf(c.real) or math.isinf(c.imag)
    return isinstance(c, float) and math.isinf(c)


def singular_id(point, a: float, tol: float = 1e-9) -> str:
    """Map a concrete singular point (complex or math.inf) to its id."""
    if point == INF or limit_is_infinite(point):
        return INF
    p = complex(point)
    if abs(p - a) <= tol * max(1.0, abs(a)) or (a == 0.0 and abs(p) <= tol):
        return PLUS
    if abs(p + a) <= tol * max(1.0, abs(a)):
        return MINUS
    raise ValueError(f"{point} is not one of the singular points -a, +a, inf (a={a})")


class Regularity(Enum):
    REGULAR = "Regular"
    QUASI_REGULAR = "QuasiRegular"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class MeromFn:
    """Meromorphic function on a bisector region minus excluded balls.

    Parameters
    ----------
    eval_fn : callable
        Scalar evaluator z -> complex, holomorphic off the declared poles.
    poles, zeros : tuples of (location, order)
        Poles and zeros inside the region only; singularities outside the
        closed bisector (such as the basis pole at b) are not listed.
    limits : mapping id -> complex | math.inf
        Declared limits at the singular points; missing finite-point
        entries fall back to direct evaluation where the function is
        analytic, the limit at "inf" must always be declared when used.
    decay_orders : mapping id -> float
        Asymptotic orders; see the module docstring for the convention.
    phi : float
        The angle of the region Omega(phi, (s_d)) on which the function
        is declared holomorphic; contours must use phi' > phi.
    ball_radii : mapping id -> float
        The s_d of the function's domain (radii of balls removed around
        singular points outside the spectrum).
    """

    eval_fn: Callable[[complex], complex]
    poles: tuple[tuple[complex, int], ...] = ()
    zeros: tuple[tuple[complex, int], ...] = ()
    limits: Mapping[str, object] = field(default_factory=dict)
    decay_orders: Mapping[str, float] = field(default_factory=dict)
    phi: float = 0.0
    ball_radii: Mapping[str, float] = field(default_factory=dict)
    label: str = "f"
    kind: str = "expr"
    data: Mapping[str, object] = field(default_factory=dict)
    requires_zero_halfwidth: bool = False

    def __post_init__(self):
        object.__setattr__(self, "poles", tuple((complex(p), int(n)) for p, n in self.poles))
        object.__setattr__(self, "zeros", tuple((complex(p), int(n)) for p, n in self.zeros))
        object.__setattr__(self, "limits", dict(self.limits))
        object.__setattr__(self, "decay_orders", dict(self.decay_orders))
        object.__setattr__(self, "ball_radii", dict(self.ball_radii))
        object.__setattr__(self, "data", dict(self.data))

    def __call__(self, z: complex) -> complex:
        return complex(self.eval_fn(complex(z)))

    def limit_at(self, d: str, a: float | None = None):
        """Declared limit at singular point id d; finite points fall back
        to evaluation when the function is analytic there."""
        if d in self.limits:
            return self.limits[d]
        if d == INF or a is None:
            return None
        loc = a if d == PLUS else -a
        if any(abs(loc - p) <= _MERGE_TOL for p, _ in self.poles):
            return INFINITE
        try:
            val = self(loc)
        except (ZeroDivisionError, ValueError, OverflowError):
            return None
        if not (math.isfinite(val.real) and math.isfinite(val.imag)):
            return INFINITE
        return val

    def with_label(self, label: str) -> "MeromFn":
        return replace(self, label=label)


# ---------------------------------------------------------------------------
# factories


def constant_fn(c: complex, label: str | None = None) -> MeromFn:
    c = complex(c)
    return MeromFn(
        eval_fn=lambda z, c=c: c,
        limits={MINUS: c, PLUS: c, INF: c},
        label=label if label is not None else f"{c}",
        kind="rational",
        data={"num": (c,), "den": (1.0 + 0j,)},
    )


def zeta_fn() -> MeromFn:
    """The coordinate function z (generator of the calculus)."""
    return MeromFn(
        eval_fn=lambda z: z,
        limits={INF: INFINITE},
        decay_orders={INF: 1.0},
        label="z",
        kind="rational",
        data={"num": (0j, 1.0 + 0j), "den": (1.0 + 0j,)},
    )


def resolvent_basis_fn(b: complex, sign: int) -> MeromFn:
    """1/(b+z) for sign=+1, 1/(b-z) for sign=-1.

    The pole at -sign*b lies outside the closed bisector for admissible
    b, so it is not recorded in ``poles``.
    """
    b = complex(b)
    if sign not in (+1, -1):
        raise ValueError("sign must be +1 or -1")
    if sign > 0:
        ev = lambda z: 1.0 / (b + z)
        num, den = (1.0 + 0j,), (b, 1.0 + 0j)
        label = f"1/({b:g}+z)" if b.imag == 0 else f"1/(({b})+z)"
    else:
        ev = lambda z: 1.0 / (b - z)
        num, den = (1.0 + 0j,), (b, -1.0 + 0j)
        label = f"1/({b:g}-z)" if b.imag == 0 else f"1/(({b})-z)"
    return MeromFn(
        eval_fn=ev,
        limits={INF: 0j},
        decay_orders={INF: 1.0},
        label=label,
        kind="rational",
        data={"num": num, "den": den},
    )


def _poly_eval(coeffs: Sequence[complex], z: complex) -> complex:
    # coeffs in ascending order
    acc = 0j
    for c in reversed(coeffs):
        acc = acc * z + c
    return acc


def _poly_degree(coeffs: Sequence[complex], tol: float = 0.0) -> int:
    deg = -1
    scale = max((abs(c) for c in coeffs), default=0.0)
    for k, c in enumerate(coeffs):
        if abs(c) > tol * scale:
            deg = k
    return deg


def _poly_roots(coeffs: Sequence[complex]) -> list[complex]:
    deg = _poly_degree(coeffs, 1e-14)
    if deg <= 0:
        return []
    return [complex(r) for r in np.roots(list(reversed(coeffs[: deg + 1])))]


def _poly_root_order(coeffs: Sequence[complex], z0: complex) -> int:
    """Multiplicity of z0 as a root, by repeated synthetic division."""
    work = list(coeffs)
    scale = max((abs(c) for c in work), default=0.0)
    if scale == 0.0:
        return 0
    tol = 1e-8 * scale * max(1.0, abs(z0)) ** max(_poly_degree(work), 1)
    order = 0
    while len(work) > 1 and abs(_poly_eval(work, z0)) <= tol:
        descending = list(reversed(work))
        quotient = [descending[0]]
        for c in descending[1:-1]:
            quotient.append(c + z0 * quotient[-1])
        work = list(reversed(quotient))
        order += 1
        if order > 64:
            break
    return order


def _poly_mul(p: Sequence[complex], q: Sequence[complex]) -> tuple[complex, ...]:
    out = np.polynomial.polynomial.polymul(np.asarray(p, dtype=complex), np.asarray(q, dtype=complex))
    return tuple(complex(c) for c in np.atleast_1d(out))


def _poly_cancel(num: Sequence[complex], den: Sequence[complex]) -> tuple[tuple[complex, ...], tuple[complex, ...]]:
    """Remove common roots (to tolerance), rebuilding from roots and
    leading coefficients.  Keeps rational data evaluable at removable
    singularities."""
    n_deg, d_deg = _poly_degree(num, 1e-14), _poly_degree(den, 1e-14)
    if n_deg <= 0 or d_deg <= 0:
        return tuple(num), tuple(den)
    n_roots = _poly_roots(num)
    d_roots = _poly_roots(den)
    keep_d = list(d_roots)
    keep_n = []
    cancelled = False
    for r in n_roots:
        hit = next((i for i, s in enumerate(keep_d) if abs(r - s) <= 1e-7 * max(1.0, abs(r))), None)
        if hit is None:
            keep_n.append(r)
        else:
            keep_d.pop(hit)
            cancelled = True
    if not cancelled:
        return tuple(num), tuple(den)
    lead_n = num[n_deg]
    lead_d = den[d_deg]
    new_num = lead_n * np.polynomial.polynomial.polyfromroots(keep_n) if keep_n else np.array([lead_n])
    new_den = lead_d * np.polynomial.polynomial.polyfromroots(keep_d) if keep_d else np.array([lead_d])
    return tuple(complex(c) for c in np.atleast_1d(new_num)), tuple(complex(c) for c in np.atleast_1d(new_den))


def _cluster_roots(roots: Iterable[complex], tol: float) -> list[tuple[complex, int]]:
    out: list[tuple[complex, int]] = []
    for r in sorted(roots, key=lambda w: (round(w.real, 9), round(w.imag, 9))):
        for i, (loc, n) in enumerate(out):
            if abs(r - loc) <= tol:
                out[i] = ((loc * n + r) / (n + 1), n + 1)
                break
        else:
            out.append((r, 1))
    return out


def rational_fn(
    num: Sequence[complex],
    den: Sequence[complex] = (1.0,),
    *,
    phi: float = 0.0,
    ball_radii: Mapping[str, float] | None = None,
    region: BisectorRegion | None = None,
    label: str | None = None,
) -> MeromFn:
    """Rational function num(z)/den(z), coefficients in ascending order.

    Limits and asymptotic orders at infinity come from the degrees; the
    pole list keeps only denominator roots inside the given region (all
    of them when no region is supplied).
    """
    num = tuple(complex(c) for c in num)
    den = tuple(complex(c) for c in den)
    dn, dd = _poly_degree(num, 1e-14), _poly_degree(den, 1e-14)
    if dd < 0:
        raise ValueError("zero denominator")
    limits: dict[str, object] = {}
    decay: dict[str, float] = {}
    if dn < 0:
        limits[INF] = 0j
    elif dn < dd:
        limits[INF] = 0j
        decay[INF] = float(dd - dn)
    elif dn == dd:
        limits[INF] = num[dn] / den[dd]
        decay[INF] = 1.0
    else:
        limits[INF] = INFINITE
        decay[INF] = float(dn - dd)

    pole_roots = _cluster_roots(_poly_roots(den), 1e-7)
    # cancel common factors to tolerance: a numerator root at the same spot
    num_roots = _cluster_roots(_poly_roots(num), 1e-7)
    poles: list[tuple[complex, int]] = []
    for loc, n in pole_roots:
        cancel = next((m for r, m in num_roots if abs(r - loc) <= 1e-7), 0)
        n_eff = n - cancel
        if n_eff > 0 and (region is None or region.contains(loc)):
            poles.append((loc, n_eff))

    def ev(z, num=num, den=den):
        return _poly_eval(num, z) / _poly_eval(den, z)

    return MeromFn(
        eval_fn=ev,
        poles=tuple(poles),
        limits=limits,
        decay_orders=decay,
        phi=phi,
        ball_radii=dict(ball_radii or {}),
        label=label if label is not None else "rational",
        kind="rational",
        data={"num": num, "den": den},
    )


def power_fn(exponent: Fraction | float, label: str | None = None) -> MeromFn:
    """z^q on the principal branch (cut along the negative reals).

    Requires a region of half-width zero: for a > 0 the cut crosses the
    interior segment (-a, a).
    """
    q = Fraction(exponent).limit_denominator(10**6) if not isinstance(exponent, Fraction) else exponent
    qf = float(q)
    if qf == 0.0:
        return constant_fn(1.0, label="1")

    def ev(z, qf=qf):
        if z == 0:
            return 0j if qf > 0 else complex(math.inf, 0.0)
        return cmath.exp(qf * cmath.log(z))

    limits: dict[str, object] = {}
    decay: dict[str, float] = {}
    if qf > 0:
        limits[PLUS] = 0j
        decay[PLUS] = qf
        limits[INF] = INFINITE
        decay[INF] = qf
    else:
        limits[PLUS] = INFINITE
        decay[PLUS] = -qf
        limits[INF] = 0j
        decay[INF] = -qf
    return MeromFn(
        eval_fn=ev,
        limits=limits,
        decay_orders=decay,
        label=label if label is not None else f"z^({q})",
        kind="sqrt_branch",
        data={"exponent": q},
        requires_zero_halfwidth=True,
    )


def sqrt_fn() -> MeromFn:
    return power_fn(Fraction(1, 2), label="z^(1/2)")


def log_fn() -> MeromFn:
    """Principal-branch logarithm.  Grows slower than any power at 0 and
    infinity; the declared growth order 0.5 is an upper bound that makes
    the default regularizer pick exponent 1 at each singular point."""

    def ev(z):
        if z == 0:
            return complex(math.inf, 0.0)
        return cmath.log(z)

    return MeromFn(
        eval_fn=ev,
        limits={PLUS: INFINITE, INF: INFINITE},
        decay_orders={PLUS: 0.5, INF: 0.5},
        label="log(z)",
        kind="log_branch",
        requires_zero_halfwidth=True,
    )


# ---------------------------------------------------------------------------
# expression grammar: +, -, *, /, ^ (constant rational exponents on the
# principal branch), log, exp, the variable z and the imaginary unit i


class _Parser:
    def __init__(self, src: str):
        self.src = src
        self.pos = 0

    def error(self, msg: str):
        raise ValidationError([(f"/expr@{self.pos}", msg)])

    def peek(self) -> str:
        while self.pos < len(self.src) and self.src[self.pos].isspace():
            self.pos += 1
        return self.src[self.pos] if self.pos < len(self.src) else ""

    def parse(self):
        node = self.expr()
        if self.peek():
            self.error(f"unexpected character {self.peek()!r}")
        return node

    def expr(self):
        node = self.term()
        while self.peek() and self.peek() in "+-":
            op = self.src[self.pos]
            self.pos += 1
            rhs = self.term()
            node = ("+" if op == "+" else "-", node, rhs)
        return node

    def term(self):
        node = self.unary()
        while self.peek() and self.peek() in "*/":
            op = self.src[self.pos]
            self.pos += 1
            rhs = self.unary()
            node = (op, node, rhs)
        return node

    def unary(self):
        if self.peek() == "-":
            self.pos += 1
            return ("neg", self.unary())
        if self.peek() == "+":
            self.pos += 1
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek() == "^":
            self.pos += 1
            expo = self.unary()  # right associative
            return ("^", base, expo)
        return base

    def atom(self):
        ch = self.peek()
        if ch == "(":
            self.pos += 1
            node = self.expr()
            if self.peek() != ")":
                self.error("expected ')'")
            self.pos += 1
            return node
        if ch.isdigit() or ch == ".":
            return ("num", self.number())
        if ch.isalpha():
            start = self.pos
            while self.pos < len(self.src) and self.src[self.pos].isalpha():
                self.pos += 1
            name = self.src[start : self.pos]
            if name == "z":
                return ("z",)
            if name in ("i", "j"):
                return ("num", 1j)
            if name in ("log", "exp", "sqrt"):
                if self.peek() != "(":
                    self.error(f"{name} requires parentheses")
                self.pos += 1
                arg = self.expr()
                if self.peek() != ")":
                    self.error("expected ')'")
                self.pos += 1
                return (name, arg)
            self.error(f"unknown identifier {name!r}")
        self.error(f"unexpected character {ch!r}" if ch else "unexpected end of expression")

    def number(self) -> complex:
        start = self.pos
        while self.pos < len(self.src) and (self.src[self.pos].isdigit() or self.src[self.pos] in ".eE"):
            if self.src[self.pos] in "eE" and self.pos + 1 < len(self.src) and self.src[self.pos + 1] in "+-":
                self.pos += 2
            else:
                self.pos += 1
        try:
            val = float(self.src[start : self.pos])
        except ValueError:
            self.error(f"bad number {self.src[start:self.pos]!r}")
        if self.pos < len(self.src) and self.src[self.pos] in "ij":
            self.pos += 1
            return complex(0.0, val)
        return complex(val, 0.0)


def _const_value(node):
    """Fold a z-free AST to a complex constant, else None."""
    tag = node[0]
    if tag == "num":
        return node[1]
    if tag == "z":
        return None
    if tag == "neg":
        v = _const_value(node[1])
        return None if v is None else -v
    if tag in "+-*/^":
        lv, rv = _const_value(node[1]), _const_value(node[2])
        if lv is None or rv is None:
            return None
        if tag == "+":
            return lv + rv
        if tag == "-":
            return lv - rv
        if tag == "*":
            return lv * rv
        if tag == "/":
            return lv / rv
        return _principal_pow(lv, rv)
    v = _const_value(node[1])
    if v is None:
        return None
    return {"log": cmath.log, "exp": cmath.exp, "sqrt": cmath.sqrt}[tag](v)


def _principal_pow(base: complex, expo: complex) -> complex:
    if base == 0:
        if expo.real > 0:
            return 0j
        raise ZeroDivisionError("0 raised to a nonpositive power")
    return cmath.exp(expo * cmath.log(base))


def _eval_ast(node, z: complex) -> complex:
    tag = node[0]
    if tag == "num":
        return node[1]
    if tag == "z":
        return z
    if tag == "neg":
        return -_eval_ast(node[1], z)
    if tag == "+":
        return _eval_ast(node[1], z) + _eval_ast(node[2], z)
    if tag == "-":
        return _eval_ast(node[1], z) - _eval_ast(node[2], z)
    if tag == "*":
        return _eval_ast(node[1], z) * _eval_ast(node[2], z)
    if tag == "/":
        return _eval_ast(node[1], z) / _eval_ast(node[2], z)
    if tag == "^":
        return _principal_pow(_eval_ast(node[1], z), _eval_ast(node[2], z))
    if tag == "log":
        return cmath.log(_eval_ast(node[1], z))
    if tag == "exp":
        return cmath.exp(_eval_ast(node[1], z))
    if tag == "sqrt":
        return cmath.sqrt(_eval_ast(node[1], z))
    raise AssertionError(f"bad AST node {tag}")


def _ast_uses_branch(node) -> bool:
    tag = node[0]
    if tag in ("num", "z"):
        return False
    if tag == "^":
        expo = _const_value(node[2])
        if expo is None:
            raise ValidationError([("/expr", "exponents must be constant")])
        if expo.imag == 0 and float(expo.real).is_integer():
            return _ast_uses_branch(node[1])
        return True
    if tag in ("log", "sqrt"):
        return True
    return any(_ast_uses_branch(c) for c in node[1:] if isinstance(c, tuple))


def expr_fn(
    src: str,
    *,
    poles: Iterable[tuple[complex, int]] = (),
    zeros: Iterable[tuple[complex, int]] = (),
    limits: Mapping[str, object] | None = None,
    decay_orders: Mapping[str, float] | None = None,
    phi: float = 0.0,
    ball_radii: Mapping[str, float] | None = None,
    label: str | None = None,
) -> MeromFn:
    """Parse an arithmetic expression in z into a MeromFn.

    Singular data (poles, limits, decay orders) cannot be inferred from
    an evaluator and must be declared by the caller.
    """
    ast = _Parser(src).parse()
    branch = _ast_uses_branch(ast)
    return MeromFn(
        eval_fn=lambda z, ast=ast: _eval_ast(ast, z),
        poles=tuple(poles),
        zeros=tuple(zeros),
        limits=dict(limits or {}),
        decay_orders=dict(decay_orders or {}),
        phi=phi,
        ball_radii=dict(ball_radii or {}),
        label=label if label is not None else src,
        kind="expr",
        data={"expr": src},
        requires_zero_halfwidth=branch,
    )


# ---------------------------------------------------------------------------
# algebra


def _merge_order_maps(*fns: MeromFn) -> tuple[tuple[tuple[complex, int], ...], tuple[tuple[complex, int], ...]]:
    entries: list[tuple[complex, int]] = []
    for f in fns:
        entries.extend((loc, n) for loc, n in f.poles)
        entries.extend((loc, -n) for loc, n in f.zeros)
    merged: list[tuple[complex, int]] = []
    for loc, n in entries:
        for i, (m_loc, m_n) in enumerate(merged):
            if abs(loc - m_loc) <= _MERGE_TOL:
                merged[i] = (m_loc, m_n + n)
                break
        else:
            merged.append((loc, n))
    poles = tuple((loc, n) for loc, n in merged if n > 0)
    zeros = tuple((loc, -n) for loc, n in merged if n < 0)
    return poles, zeros


def _mul_limits(c1, c2):
    if c1 is None or c2 is None:
        return None
    inf1, inf2 = limit_is_infinite(c1), limit_is_infinite(c2)
    if inf1 and inf2:
        return INFINITE
    if inf1 or inf2:
        fin = c2 if inf1 else c1
        if fin == 0:
            return None  # indeterminate: caller must override
        return INFINITE
    return complex(c1) * complex(c2)


def product(
    f: MeromFn,
    g: MeromFn,
    *,
    limits: Mapping[str, object] | None = None,
    decay_orders: Mapping[str, float] | None = None,
    label: str | None = None,
) -> MeromFn:
    """Pointwise product with pole/zero cancellation by location.

    Limit algebra handles the determinate cases; indeterminate products
    (0 times infinity) come out None unless overridden via ``limits``.
    """
    poles, zeros = _merge_order_maps(f, g)
    lim: dict[str, object] = {}
    for d in set(f.limits) | set(g.limits):
        val = _mul_limits(f.limits.get(d), g.limits.get(d))
        if val is not None:
            lim[d] = val
    dec: dict[str, float] = {}
    for d in set(f.decay_orders) | set(g.decay_orders):
        bf, bg = f.decay_orders.get(d), g.decay_orders.get(d)
        cf, cg = f.limits.get(d), g.limits.get(d)
        if bf is not None and bg is not None and not limit_is_infinite(cf) and not limit_is_infinite(cg):
            dec[d] = min(bf, bg)
        elif bf is not None and cg is not None and not limit_is_infinite(cg) and cg != 0:
            dec[d] = bf
        elif bg is not None and cf is not None and not limit_is_infinite(cf) and cf != 0:
            dec[d] = bg
    if limits:
        lim.update(limits)
    if decay_orders:
        dec.update(decay_orders)
    return MeromFn(
        eval_fn=lambda z, f=f, g=g: f(z) * g(z),
        poles=poles,
        zeros=zeros,
        limits=lim,
        decay_orders=dec,
        phi=max(f.phi, g.phi),
        ball_radii={k: max(f.ball_radii.get(k, 0.0), g.ball_radii.get(k, 0.0))
                    for k in set(f.ball_radii) | set(g.ball_radii)},
        label=label if label is not None else f"({f.label})*({g.label})",
        kind="expr",
        requires_zero_halfwidth=f.requires_zero_halfwidth or g.requires_zero_halfwidth,
    )


def reciprocal(f: MeromFn) -> MeromFn:
    lim: dict[str, object] = {}
    for d, c in f.limits.items():
        if c is None:
            continue
        if limit_is_infinite(c):
            lim[d] = 0j
        elif c == 0:
            lim[d] = INFINITE
        else:
            lim[d] = 1.0 / complex(c)
    return MeromFn(
        eval_fn=lambda z, f=f: 1.0 / f(z),
        poles=f.zeros,
        zeros=f.poles,
        limits=lim,
        decay_orders=dict(f.decay_orders),
        phi=f.phi,
        ball_radii=dict(f.ball_radii),
        label=f"1/({f.label})",
        kind="expr",
        requires_zero_halfwidth=f.requires_zero_halfwidth,
    )


def subtract_const(f: MeromFn, mu: complex) -> MeromFn:
    """f - mu; zeros are unknown and left empty for general f."""
    mu = complex(mu)
    lim: dict[str, object] = {}
    for d, c in f.limits.items():
        if c is None:
            continue
        lim[d] = INFINITE if limit_is_infinite(c) else complex(c) - mu
    dec = {d: b for d, b in f.decay_orders.items()}
    out = MeromFn(
        eval_fn=lambda z, f=f, mu=mu: f(z) - mu,
        poles=f.poles,
        zeros=(),
        limits=lim,
        decay_orders=dec,
        phi=f.phi,
        ball_radii=dict(f.ball_radii),
        label=f"({f.label})-({mu})",
        kind=f.kind,
        requires_zero_halfwidth=f.requires_zero_halfwidth,
    )
    if f.kind == "rational" and "num" in f.data:
        num = list(f.data["num"])
        den = list(f.data["den"])
        width = max(len(num), len(den))
        num = num + [0j] * (width - len(num))
        shifted = [num[k] - mu * (den[k] if k < len(den) else 0j) for k in range(width)]
        object.__setattr__(out, "kind", "rational")
        object.__setattr__(out, "data", {"num": tuple(shifted), "den": tuple(den)})
    return out


# ---------------------------------------------------------------------------
# asymptotic orders


def _rational_beta(f: MeromFn, d: str, a: float) -> float | None:
    """Exact asymptotic order at a singular point for rational data.

    Returns the beta of the module convention: |f - c_d| ~ |z - d|^beta
    for finite limits, |f| ~ |z - d|^-beta for infinite ones (mirrored
    at infinity).  None when f carries no polynomial data.
    """
    if f.kind != "rational" or "num" not in f.data:
        return None
    num = tuple(f.data["num"])
    den = tuple(f.data["den"])
    c = f.limit_at(d, a)
    if c is None:
        return None
    if d == INF:
        dn, dd = _poly_degree(num, 1e-14), _poly_degree(den, 1e-14)
        if limit_is_infinite(c):
            return float(dn - dd) if dn > dd else None
        if complex(c) == 0:
            return float(dd - dn) if dd > dn else None
        shifted = [
            (num[k] if k < len(num) else 0j) - complex(c) * (den[k] if k < len(den) else 0j)
            for k in range(max(len(num), len(den)))
        ]
        ds = _poly_degree(shifted, 1e-12)
        return float(dd - ds) if dd > ds else None
    loc = complex(a if d == PLUS else -a)
    if limit_is_infinite(c):
        order = _poly_root_order(den, loc) - _poly_root_order(num, loc)
        return float(order) if order > 0 else None
    width = max(len(num), len(den))
    shifted = [
        (num[k] if k < len(num) else 0j) - complex(c) * (den[k] if k < len(den) else 0j)
        for k in range(width)
    ]
    order = _poly_root_order(shifted, loc) - _poly_root_order(den, loc)
    return float(order) if order > 0 else None


def beta_at(f: MeromFn, d: str, a: float) -> float | None:
    """Declared asymptotic order, falling back to exact rational data."""
    beta = f.decay_orders.get(d)
    if beta is not None:
        return float(beta)
    return _rational_beta(f, d, a)


# ---------------------------------------------------------------------------
# regularity probes


def _interior_direction(a: float, omega: float, d: str) -> complex:
    """A unit direction pointing from singular point d into the region."""
    candidates = [0.5 * math.pi, 0.5 * math.pi + 0.5 * omega, 0.5 * math.pi - 0.5 * omega,
                  0.75 * math.pi, 0.25 * math.pi]
    base = -1.0 if d == MINUS else 1.0
    loc = 0.0 if d == INF else base * a
    for th in candidates:
        w = cmath.exp(1j * th)
        probe = loc + 0.05 * w if d != INF else 10.0 * w
        if bisector_contains(omega, a, probe):
            return w
    return 1j


def _boundary_directions(a: float, phi_probe: float, d: str) -> list[complex]:
    """Unit directions of the bisector boundary rays meeting d."""
    if d == PLUS and a > 0.0:
        return [cmath.exp(1j * phi_probe), cmath.exp(-1j * phi_probe)]
    if d == MINUS:
        return [cmath.exp(1j * (math.pi - phi_probe)), cmath.exp(-1j * (math.pi - phi_probe))]
    # merged vertex (a=0) and infinity: all four rays
    return [
        cmath.exp(1j * phi_probe),
        cmath.exp(-1j * phi_probe),
        cmath.exp(1j * (math.pi - phi_probe)),
        cmath.exp(-1j * (math.pi - phi_probe)),
    ]


_PROBE_POINTS = 40
_PROBE_RATIO = 0.5
_INCREMENT_FACTOR = 1.2


def _probe_samples(f: MeromFn, a: float, d: str, direction: complex, anchor: complex):
    """|f(z) - c| style samples along a geometric ray toward d (or to inf)."""
    if d == INF:
        r0 = max(4.0 * (abs(a) + 1.0), 1.0)
        radii = [r0 / (_PROBE_RATIO ** k) for k in range(_PROBE_POINTS)]
        return [(r, anchor + r * direction) for r in radii]
    loc = a if d == PLUS else -a
    t0 = 0.5 * max(abs(loc), 1.0)
    pole_clear = min((abs(p - loc) for p, _ in f.poles), default=math.inf)
    t0 = min(t0, 0.4 * pole_clear) if math.isfinite(pole_clear) else t0
    ts = [t0 * (_PROBE_RATIO ** k) for k in range(_PROBE_POINTS)]
    return [(t, loc + t * direction) for t in ts]


def _regular_probe(f: MeromFn, a: float, omega: float, d: str) -> bool | None:
    """True when the defining integral condition plausibly converges at d.

    Declaration first: finite limit plus a positive decay order passes a
    log-log slope sanity check.  Otherwise the partial integrals of
    |f - c| / |z - d| along the boundary rays must have their last three
    increments decreasing by >= 1.2, which certifies power-law decay but
    deliberately refuses logarithmic-rate decay (Inconclusive upstream).
    """
    c = f.limit_at(d, a)
    if c is None:
        return None
    if limit_is_infinite(c):
        return False
    c = complex(c)
    phi_probe = 0.5 * (f.phi + 0.5 * math.pi)
    if phi_probe <= f.phi:
        phi_probe = 0.5 * (f.phi + math.pi / 2.0) + 1e-3
    beta = beta_at(f, d, a)
    directions = _boundary_directions(a, phi_probe, d)
    for direction in directions:
        samples = _probe_samples(f, a, d, direction, 0j)
        try:
            devs = [abs(f(z) - c) for _, z in samples]
        except (ZeroDivisionError, ValueError, OverflowError):
            return None
        if all(v <= 1e-14 * max(1.0, abs(c)) for v in devs):
            continue  # integrand identically ~0 on this ray
        if beta is not None and beta > 0.0:
            # slope sanity: log|f-c| vs log t on the tail of the ray
            ts = [t for t, _ in samples]
            xs, ys = [], []
            for t, v in zip(ts[-12:], devs[-12:]):
                if v > 0.0 and math.isfinite(v):
                    xs.append(math.log(t if d != INF else 1.0 / t))
                    ys.append(math.log(v))
            if len(xs) >= 4:
                slope = np.polyfit(xs, ys, 1)[0]
                if slope >= 0.25 * beta - 0.05:
                    continue
            return None
        # increment test on the partial integrals
        incs = []
        for k in range(1, _PROBE_POINTS):
            # |z - d| ~ t at a finite vertex, |z| ~ t at infinity
            seg = abs(samples[k - 1][0] - samples[k][0])
            incs.append(devs[k] / samples[k][0] * seg)
        tail = [v for v in incs[-3:]]
        if any(not math.isfinite(v) for v in tail):
            return None
        if tail[0] <= 0.0:
            continue
        if not (tail[0] >= _INCREMENT_FACTOR * tail[1] >= _INCREMENT_FACTOR ** 2 * tail[2]):
            return None
    return True


def regularity_probe(f: MeromFn, d, region: BisectorRegion) -> Regularity:
    """Classify f at the singular point d as Regular / QuasiRegular / Inconclusive.

    ``d`` may be a singular-point id or a concrete value (complex or
    math.inf).  Regular means a declared (or evaluable) finite limit
    whose deviation is integrable against |z - d|^-1 along the bisector
    boundary; QuasiRegular means 1/f passes the same test.
    """
    did = d if isinstance(d, str) else singular_id(d, region.halfwidth_a)
    a, omega = region.halfwidth_a, region.omega
    if _regular_probe(f, a, omega, did):
        return Regularity.REGULAR
    if _regular_probe(reciprocal(f), a, omega, did):
        return Regularity.QUASI_REGULAR
    return Regularity.INCONCLUSIVE


def check_pole_orders(f: MeromFn, window: tuple[float, float] = (1e-6, 1e6)) -> list[str]:
    """Sampled consistency of evaluator vs declared pole orders.

    Returns a list of complaints (empty when consistent): on a shrinking
    annulus around each declared pole, |f(z)| * |z - p|^n must stay inside
    the boundedness window.
    """
    lo, hi = window
    issues = []
    for p, n in f.poles:
        # an order off by one scales like radius^(+-1): the smallest
        # radius must push a mismatch out of the window
        for radius in (1e-2, 1e-4, 1e-7):
            for k in range(8):
                z = p + radius * cmath.exp(2j * math.pi * (k + 0.5) / 8)
                try:
                    scaled = abs(f(z)) * radius ** n
                except (ZeroDivisionError, ValueError, OverflowError):
                    issues.append(f"pole at {p}: evaluation failed at distance {radius}")
                    break
                if not (lo <= scaled <= hi):
                    issues.append(
                        f"pole at {p}: |f|*|z-p|^{n} = {scaled:.3e} outside [{lo}, {hi}] at distance {radius}"
                    )
                    break
            else:
                continue
            break
    return issues


# ---------------------------------------------------------------------------
# elementary decomposition E(A) = E0(A) + C/(b+z) + C/(b-z) + C*1


@dataclass(frozen=True)
class EDecomposition:
    """f = f0 + coef_plus/(b+z) + coef_minus/(b-z) + coef_one with f0
    vanishing at every singular point of the extended spectrum."""

    f0: MeromFn
    coef_plus: complex
    coef_minus: complex
    coef_one: complex
    base_b: complex
    degenerate: bool = False

    def basis_part(self, z: complex) -> complex:
        z = complex(z)
        return (
            self.coef_plus / (self.base_b + z)
            + self.coef_minus / (self.base_b - z)
            + self.coef_one
        )

    def reconstruct(self, z: complex) -> complex:
        return self.f0(z) + self.basis_part(z)


def decompose_E(f: MeromFn, M_A, b: complex) -> EDecomposition:
    """Split f in E(A) against the basis {1/(b+z), 1/(b-z), 1}.

    ``M_A`` is an iterable of concrete singular points: complex values
    at +-a and optionally ``math.inf`` (the string "inf" also works).
    The coefficients solve the linear system forcing the remainder's
    limits to vanish at every point of M_A; unused degrees of freedom
    are set to zero.  When the two finite vertices coincide (a = 0) the
    naive two-vertex system is singular; the decomposition then drops
    the 1/(b+z) direction, which realizes the degenerate basis
    {1/(b-z), 1/(b-z)^2, 1} with zero quadratic coefficient.
    """
    b = complex(b)
    finite_pts: list[complex] = []
    has_inf = False
    for p in M_A:
        if p == INF or (isinstance(p, str) and p == INF) or limit_is_infinite(p):
            has_inf = True
        else:
            finite_pts.append(complex(p))
    a = max((abs(p) for p in finite_pts), default=0.0)
    plus_pt = next((p for p in finite_pts if abs(p - a) <= _MERGE_TOL * max(1.0, a)), None)
    minus_pt = next((p for p in finite_pts if abs(p + a) <= _MERGE_TOL * max(1.0, a) and a > 0), None)
    if a == 0.0 and finite_pts:
        plus_pt = 0j

    def declared(d_id: str):
        c = f.limit_at(d_id, a)
        if c is None:
            raise UndeclaredLimit(f"limit of {f.label} at {d_id} is required for the decomposition")
        if limit_is_infinite(c):
            raise SpecCalcError(f"{f.label} has an infinite limit at {d_id}: not in E(A)")
        return complex(c)

    gamma = declared(INF) if has_inf else 0j
    alpha = 0j
    beta = 0j
    degenerate = False
    if plus_pt is not None and minus_pt is not None:
        c_p = declared(PLUS) - gamma
        c_m = declared(MINUS) - gamma
        mat = np.array(
            [[1.0 / (b + a), 1.0 / (b - a)], [1.0 / (b - a), 1.0 / (b + a)]],
            dtype=complex,
        )
        det = mat[0, 0] * mat[1, 1] - mat[0, 1] * mat[1, 0]
        if abs(det) < 1e-14:
            raise SingularSystem("coincident vertex system is singular")
        sol = np.linalg.solve(mat, np.array([c_p, c_m], dtype=complex))
        alpha, beta = complex(sol[0]), complex(sol[1])
    elif plus_pt is not None:
        c_p = declared(PLUS) - gamma
        if a == 0.0:
            # merged vertex: singular two-row system, degenerate basis fallback
            degenerate = True
            beta = b * c_p
        else:
            beta = c_p * (b - a)
    elif minus_pt is not None:
        c_m = declared(MINUS) - gamma
        alpha = c_m * (b - a)

    zero_limits: dict[str, object] = {}
    decay: dict[str, float] = {}
    if has_inf:
        zero_limits[INF] = 0j
        bf = f.decay_orders.get(INF)
        decay[INF] = min(bf, 1.0) if bf is not None else 1.0
    if plus_pt is not None:
        zero_limits[PLUS] = 0j
        bf = f.decay_orders.get(PLUS)
        decay[PLUS] = min(bf, 1.0) if bf is not None else 1.0
    if minus_pt is not None:
        zero_limits[MINUS] = 0j
        bf = f.decay_orders.get(MINUS)
        decay[MINUS] = min(bf, 1.0) if bf is not None else 1.0

    def f0_eval(z, f=f, alpha=alpha, beta=beta, gamma=gamma, b=b):
        return f(z) - alpha / (b + z) - beta / (b - z) - gamma

    f0 = MeromFn(
        eval_fn=f0_eval,
        poles=f.poles,
        limits={**{k: v for k, v in f.limits.items()}, **zero_limits},
        decay_orders={**dict(f.decay_orders), **decay},
        phi=f.phi,
        ball_radii=dict(f.ball_radii),
        label=f"({f.label}) - basis",
        kind="expr",
        requires_zero_halfwidth=f.requires_zero_halfwidth,
    )
    return EDecomposition(f0, alpha, beta, gamma, b, degenerate)


# ---------------------------------------------------------------------------
# regularizers


@dataclass(frozen=True)
class RegularizerContext:
    """Operator facts a regularizer construction needs.

    ``in_spectrum[d]`` says whether the singular point d lies in the
    extended spectrum; ``in_point_spectrum[d]`` whether it is an
    eigenvalue (infinity never is).  ``point_eigenvalues`` lists the
    eigenvalues used to rule out zeros of e at points of the point
    spectrum, which would destroy injectivity of e(A).
    """

    halfwidth_a: float
    base_b: complex
    in_spectrum: Mapping[str, bool]
    in_point_spectrum: Mapping[str, bool]
    point_eigenvalues: tuple[complex, ...] = ()
    omega: float = 0.5 * math.pi

    def exponent_allowed(self, d: str) -> bool:
        return bool(self.in_spectrum.get(d, False)) and not bool(self.in_point_spectrum.get(d, False))


def rational_factor(zeros: Sequence[tuple[complex, int]], b: complex) -> MeromFn:
    """r(z) = prod_j ((lambda_j - z)/(b - z))^(n_j).

    Vanishes at each lambda_j to the declared order and tends to 1 at
    infinity (each factor does).  The pole at b lies outside the region
    for admissible b and is not recorded.
    """
    b = complex(b)
    zs = [(complex(l), int(n)) for l, n in zeros]
    for i, (l1, _) in enumerate(zs):
        if abs(l1 - b) <= _MERGE_TOL:
            raise SpecCalcError(f"factor zero {l1} coincides with the base point b")
        for l2, _ in zs[i + 1 :]:
            if abs(l1 - l2) <= _MERGE_TOL:
                raise SpecCalcError(f"factor zeros must be pairwise distinct, got {l1} twice")

    def ev(z, zs=zs, b=b):
        acc = 1.0 + 0j
        for lam, n in zs:
            acc *= ((lam - z) / (b - z)) ** n
        return acc

    total = sum(n for _, n in zs)
    roots: list[complex] = []
    for lam, n in zs:
        roots.extend([lam] * n)
    num_poly = (-1.0) ** total * np.polynomial.polynomial.polyfromroots(roots)
    den_poly = (-1.0) ** total * np.polynomial.polynomial.polyfromroots([b] * total)
    return MeromFn(
        eval_fn=ev,
        zeros=tuple(zs),
        limits={INF: 1.0 + 0j},
        decay_orders={INF: 1.0} if total > 0 else {},
        label="prod((lambda_j - z)/(b - z))^n_j",
        kind="rational",
        data={
            "factor_zeros": tuple(zs),
            "base_b": b,
            "num": tuple(complex(c) for c in np.atleast_1d(num_poly)),
            "den": tuple(complex(c) for c in np.atleast_1d(den_poly)),
        },
    )


def _growth_order(f: MeromFn, a: float, omega: float, d: str) -> float:
    """Declared or probed growth order of |f| at a singular point with
    infinite limit.  Raises NoRegularizer when the probe is unstable."""
    beta = beta_at(f, d, a)
    if beta is not None and beta > 0.0:
        return float(beta)
    direction = _interior_direction(a, omega, d)
    samples = _probe_samples(f, a, d, direction, 0j)
    xs, ys = [], []
    for t, z in samples[-16:]:
        try:
            v = abs(f(z))
        except (ZeroDivisionError, ValueError, OverflowError):
            continue
        if v > 0.0 and math.isfinite(v):
            xs.append(math.log(t))
            ys.append(math.log(v))
    if len(xs) < 6:
        raise NoRegularizer(f"growth order of {f.label} at {d} undeclared and not probeable")
    slope = float(np.polyfit(xs, ys, 1)[0])
    order = -slope if d != INF else slope
    if not math.isfinite(order) or order <= 0.0:
        raise NoRegularizer(
            f"growth probe of {f.label} at {d} found no positive power-law order (slope {slope:.3f})"
        )
    return order


def default_regularizer(f: MeromFn, ctx: RegularizerContext) -> MeromFn:
    """Construct e with e*f in E(A) and e(A) injective for the modelled A.

    e(z) = (z-a)^m (z+a)^n / (b-z)^(l+m+n) * prod_j ((lambda_j - z)/(b-z))^(n_j),
    with the product running over the poles of f and the exponents the
    smallest integers covering f's growth orders at +a, -a, infinity.
    An exponent may be positive only at a point of the extended spectrum
    that is not an eigenvalue; identity is returned when f already
    needs no regularization.
    """
    a = ctx.halfwidth_a
    b = complex(ctx.base_b)
    omega = ctx.omega

    # only poles inside the closed bisector threaten contours or spectrum
    inner_poles = tuple(
        (p, n) for p, n in f.poles if closed_bisector_violation(omega, a, p) <= 1e-12
    )

    # pole-clearing factor: zeros of e at the poles of f
    for p, n in inner_poles:
        if any(abs(p - ev) <= 1e-9 for ev in ctx.point_eigenvalues):
            raise RegularizerNotInjective(
                f"pole of {f.label} at {p} is an eigenvalue: a regularizer must vanish there"
            )

    singular_ids = [d for d in (MINUS, PLUS, INF) if ctx.in_spectrum.get(d, False)]
    if a == 0.0 and MINUS in singular_ids:
        singular_ids.remove(MINUS)

    exponents = {MINUS: 0, PLUS: 0, INF: 0}
    for d in singular_ids:
        c = f.limit_at(d, a)
        if c is None:
            raise UndeclaredLimit(f"limit of {f.label} at {d} must be declared for regularization")
        if not limit_is_infinite(c):
            if _regular_probe(f, a, omega, d):
                continue
            # finite limit but no certified integrable approach: one vanishing order
            if not ctx.exponent_allowed(d):
                raise NoRegularizer(
                    f"{f.label} is not certifiably regular at the eigenvalue singular point {d}"
                )
            exponents[d] = 1
            continue
        if not ctx.exponent_allowed(d):
            if ctx.in_point_spectrum.get(d, False):
                raise RegularizerNotInjective(
                    f"{f.label} needs a vanishing factor at {d}, which is an eigenvalue"
                )
            raise NoRegularizer(f"{f.label} is singular at {d} but {d} is outside the spectrum")
        exponents[d] = math.ceil(_growth_order(f, a, omega, d))

    m, n, l = exponents[PLUS], exponents[MINUS], exponents[INF]

    # poles at the vertices are governed by the h exponents, not the product
    def _at_vertex(p):
        if abs(p - a) <= _MERGE_TOL * max(1.0, a):
            return True
        return a > 0.0 and abs(p + a) <= _MERGE_TOL * max(1.0, a)

    pole_zeros = tuple((p, k) for p, k in inner_poles if not _at_vertex(p))
    total_pole_order = sum(k for _, k in pole_zeros)
    denom_power = l + m + n + total_pole_order
    if denom_power == 0:
        return constant_fn(1.0, label="1")

    def ev(z, a=a, b=b, m=m, n=n, denom_power=denom_power, pole_zeros=pole_zeros):
        acc = 1.0 + 0j
        if m:
            acc *= (z - a) ** m
        if n:
            acc *= (z + a) ** n
        for lam, k in pole_zeros:
            acc *= (lam - z) ** k
        return acc / (b - z) ** denom_power

    num_roots = [complex(a)] * m + [complex(-a)] * n
    for lam, k in pole_zeros:
        num_roots.extend([lam] * k)
    num_poly = (-1.0) ** total_pole_order * np.polynomial.polynomial.polyfromroots(num_roots)
    den_poly = (-1.0) ** denom_power * np.polynomial.polynomial.polyfromroots([b] * denom_power)

    zeros = []
    if m:
        zeros.append((complex(a), m))
    if n:
        zeros.append((complex(-a), n))
    zeros.extend(pole_zeros)

    limits: dict[str, object] = {}
    decay: dict[str, float] = {}
    sign = (-1.0) ** denom_power
    if l > 0:
        limits[INF] = 0j
        decay[INF] = float(l)
    else:
        limits[INF] = complex(sign * (-1.0) ** (m + n + total_pole_order))
        decay[INF] = 1.0
    if m:
        limits[PLUS] = 0j
        decay[PLUS] = float(m)
    if n:
        limits[MINUS] = 0j
        decay[MINUS] = float(n)

    e = MeromFn(
        eval_fn=ev,
        zeros=tuple(zeros),
        limits=limits,
        decay_orders=decay,
        phi=f.phi,
        ball_radii=dict(f.ball_radii),
        label=f"(z-a)^{m}(z+a)^{n}(poles)/(b-z)^{denom_power}" if (m or n or pole_zeros) else f"1/(b-z)^{denom_power}",
        kind="rational",
        data={
            "h_exponents": (l, m, n),
            "base_b": b,
            "num": tuple(complex(c) for c in np.atleast_1d(num_poly)),
            "den": tuple(complex(c) for c in np.atleast_1d(den_poly)),
        },
    )

    ef = regularized_product(e, f, ctx)
    for d in singular_ids:
        if regularity_probe(ef, d, BisectorRegion(omega, a)) is not Regularity.REGULAR:
            raise NoRegularizer(
                f"candidate regularizer fails to make {f.label} regular at {d}"
            )
    return e


def _numeric_limit(fn: MeromFn, a: float, omega: float, d: str):
    """Last-resort limit estimate along an interior ray, None if unstable."""
    direction = _interior_direction(a, omega, d)
    samples = _probe_samples(fn, a, d, direction, 0j)
    vals = []
    for _, z in samples[-6:]:
        try:
            v = fn(z)
        except (ZeroDivisionError, ValueError, OverflowError):
            return None
        if not (math.isfinite(v.real) and math.isfinite(v.imag)):
            return None
        vals.append(v)
    if len(vals) < 4:
        return None
    scale = max(1.0, abs(vals[-1]))
    if abs(vals[-1] - vals[-2]) <= 1e-6 * scale and abs(vals[-2] - vals[-3]) <= 1e-5 * scale:
        return vals[-1]
    return None


def regularized_product(e: MeromFn, f: MeromFn, ctx: RegularizerContext) -> MeromFn:
    """e*f with singular-point limits derived exactly where possible.

    For rational e and f the product is composed at the coefficient
    level (with common-root cancellation), so limits and orders follow
    from the polynomial data.  Otherwise limits are forced from the
    declared growth and zero orders, with a numeric ray estimate as a
    last resort; naive limit algebra would lose the determinate
    0 * infinity cases a regularizer exists to create.
    """
    a = ctx.halfwidth_a
    omega = ctx.omega
    label = f"({e.label})*({f.label})"

    if (
        e.kind == "rational" and f.kind == "rational"
        and "num" in e.data and "num" in f.data
    ):
        num, den = _poly_cancel(
            _poly_mul(e.data["num"], f.data["num"]),
            _poly_mul(e.data["den"], f.data["den"]),
        )
        region = BisectorRegion(omega, a)
        out = rational_fn(num, den, phi=max(e.phi, f.phi),
                          ball_radii={k: max(e.ball_radii.get(k, 0.0), f.ball_radii.get(k, 0.0))
                                      for k in set(e.ball_radii) | set(f.ball_radii)},
                          region=region, label=label)
        return out

    limits: dict[str, object] = {}
    decay: dict[str, float] = {}
    for d in (MINUS, PLUS, INF):
        if a == 0.0 and d == MINUS:
            continue
        cf = f.limit_at(d, a)
        if cf is None:
            continue
        e_zero_order = 0.0
        for loc, k in e.zeros:
            if d != INF and abs(loc - (a if d == PLUS else -a)) <= _MERGE_TOL:
                e_zero_order += k
        if d == INF:
            lmn = e.data.get("h_exponents")
            if lmn:
                e_zero_order = float(lmn[0])
            elif beta_at(e, INF, a) is not None and not limit_is_infinite(e.limit_at(INF, a)) \
                    and e.limit_at(INF, a) == 0:
                e_zero_order = float(beta_at(e, INF, a))
        if limit_is_infinite(cf):
            growth = beta_at(f, d, a)
            if e_zero_order > 0 and growth is not None and e_zero_order > growth:
                limits[d] = 0j
                decay[d] = e_zero_order - float(growth)
                continue
        else:
            ce = e.limit_at(d, a)
            if ce is not None and not limit_is_infinite(ce):
                limits[d] = complex(ce) * complex(cf)
                if e_zero_order > 0:
                    decay[d] = float(e_zero_order)
                else:
                    cands = [v for v in (beta_at(f, d, a), beta_at(e, d, a)) if v is not None]
                    if cands:
                        decay[d] = min(cands)
                continue
        est = _numeric_limit(
            product(e, f, label=label), a, omega, d
        )
        if est is not None:
            limits[d] = est
    return product(e, f, limits=limits, decay_orders=decay, label=label)


# ---------------------------------------------------------------------------
# condition (P)


def condition_P_check(f: MeromFn, M_A, sigma_p_image, *, region: BisectorRegion | None = None) -> bool:
    """Polynomial lower-bound condition at singular points.

    For every singular point d whose limit c_d is finite and outside the
    point-spectrum image, a positive order beta_d must be declared and a
    log-log sampling of |f(z) - c_d| along a ray into d must show slope
    at most beta_d + 0.1 (a lower bound means decay no faster than the
    declared power).  Points with infinite limits or with c_d already in
    the image are vacuous.
    """
    a = 0.0
    finite_pts: list[complex] = []
    has_inf = False
    for p in M_A:
        if p == INF or (isinstance(p, str) and p == INF) or limit_is_infinite(p):
            has_inf = True
        else:
            finite_pts.append(complex(p))
    a = max((abs(p) for p in finite_pts), default=region.halfwidth_a if region else 0.0)
    omega = region.omega if region is not None else 0.25 * math.pi
    image = [complex(v) for v in sigma_p_image]

    ids: list[str] = []
    for p in finite_pts:
        ids.append(singular_id(p, a))
    if has_inf:
        ids.append(INF)

    for d in ids:
        c = f.limit_at(d, a)
        if c is None:
            raise UndeclaredLimit(f"limit of {f.label} at {d} required for condition (P)")
        if limit_is_infinite(c):
            continue
        c = complex(c)
        if any(abs(c - v) <= 1e-8 * max(1.0, abs(v)) for v in image):
            continue
        beta = beta_at(f, d, a)
        if beta is None or beta <= 0.0:
            return False
        direction = _interior_direction(a, omega, d)
        samples = _probe_samples(f, a, d, direction, 0j)
        xs, ys = [], []
        for t, z in samples:
            try:
                v = abs(f(z) - c)
            except (ZeroDivisionError, ValueError, OverflowError):
                continue
            if v > 0.0 and math.isfinite(v):
                xs.append(math.log(t) if d != INF else -math.log(t))
                ys.append(math.log(v))
        if len(xs) < 6:
            return False
        slope = float(np.polyfit(xs[-20:], ys[-20:], 1)[0])
        if slope > beta + 0.1:
            return False
    return True
