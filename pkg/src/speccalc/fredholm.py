"""Fredholm profiles, the ten operator classes, extended spectra.

For a closed operator T the profile records the kernel dimension, the
codimension of the range, the ascent and descent (stabilization indices
of the kernel and range chains), whether the range is closed, and the
two Hilbert-model complementation flags.  The membership classes are

    Phi_0 = invertible                  Phi_5 = {defect < inf}
    Phi_1 = {nul, defect < inf}         Phi_6 = Phi_4 union Phi_5
    Phi_2 = {nul < inf, range compl.}   Phi_7 = {nul = defect < inf}
    Phi_3 = {defect < inf, ker compl.}  Phi_8 = Phi_7 and ascent = descent < inf
    Phi_4 = {nul < inf, range closed}   Phi_9 = {ascent, descent < inf}

and the extended spectrum of index i collects the points mu (infinity
included) where mu - A falls outside Phi_i.

Model rules for diagonal operators follow from normality: eigenvalues
are semisimple, so the ascent is 0 or 1; a finite defect forces a
closed range, so at an accumulation point of the spectrum the defect
and the descent are infinite.  Membership of infinity is decided
through the resolvent: infinity lies in the index-i spectrum of A
exactly when 0 lies in the index-i spectrum of (mu0 - A)^{-1} for any
fixed mu0 in the resolvent set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import EmptyResolvent, RankIndeterminate, SingularResolvent
from .functions import rational_fn
from .geometry import BisectorRegion
from .operators import DenseOperator, DiagonalModel, SpectralSet, default_base_point

__all__ = [
    "FredholmProfile",
    "PhiMembership",
    "INCLUSION_EDGES",
    "profile",
    "classify",
    "extended_spectrum",
    "resolvent_transfer_check",
    "truncation_profile",
    "numeric_rank",
]

INF = math.inf

# (sub, super): every membership vector must satisfy member[sub] -> member[super]
INCLUSION_EDGES: tuple[tuple[int, int], ...] = (
    (0, 8), (8, 7), (7, 1),
    (1, 2), (2, 4), (4, 6),
    (1, 3), (3, 5), (5, 6),
    (8, 9),
)


@dataclass(frozen=True)
class FredholmProfile:
    """nul, defect, ascent, descent in N union {inf}, plus the range
    and complementation flags of the Hilbert model."""

    nul: float
    defect: float
    ascent: float
    descent: float
    range_closed: bool
    range_complemented: bool
    kernel_complemented: bool

    def describe(self) -> str:
        def fmt(v):
            return "inf" if v == INF else str(int(v))
        return (
            f"nul={fmt(self.nul)} def={fmt(self.defect)} "
            f"asc={fmt(self.ascent)} dsc={fmt(self.descent)} "
            f"range_closed={self.range_closed} "
            f"range_compl={self.range_complemented} "
            f"ker_compl={self.kernel_complemented}"
        )


@dataclass(frozen=True)
class PhiMembership:
    member: Mapping[int, bool]

    def __post_init__(self):
        object.__setattr__(self, "member", dict(self.member))
        for sub, sup in INCLUSION_EDGES:
            if self.member.get(sub) and not self.member.get(sup):
                raise ValueError(
                    f"membership vector violates the inclusion {sub} -> {sup}"
                )

    def holds(self, i: int) -> bool:
        return bool(self.member[i])

    @property
    def vector(self) -> tuple[bool, ...]:
        return tuple(bool(self.member[i]) for i in range(10))


# ---------------------------------------------------------------------------
# numerical rank


def numeric_rank(M: np.ndarray, gap_ratio: float = 10.0, floor: float = 0.0) -> int:
    """Rank by singular value threshold tau = sqrt(eps) * sigma_max * n.

    The singular values immediately above and below tau must differ by
    at least ``gap_ratio``, otherwise the rank decision would hinge on
    noise and RankIndeterminate is raised instead.  ``floor`` is an
    absolute scale below which the whole matrix counts as zero; without
    it a matrix made of pure roundoff reads as full rank, since the
    internal threshold is relative to its own largest singular value.
    """
    M = np.asarray(M, dtype=complex)
    n = max(M.shape)
    sv = np.linalg.svd(M, compute_uv=False)
    smax = float(sv[0]) if sv.size else 0.0
    if smax <= max(0.0, floor):
        return 0
    tau = math.sqrt(np.finfo(float).eps) * smax * n
    above = int(np.sum(sv >= tau))
    if 0 < above < sv.size:
        lo = float(sv[above])  # largest value below tau
        hi = float(sv[above - 1])
        if lo > 0.0 and hi / lo < gap_ratio:
            raise RankIndeterminate(
                f"singular values {hi:.3e} and {lo:.3e} straddle the rank "
                f"threshold {tau:.3e} with ratio {hi / lo:.2f} < {gap_ratio}"
            )
    return above


# ---------------------------------------------------------------------------
# profiles


def _dense_profile(op: DenseOperator, mu: complex, gap_ratio: float = 10.0) -> FredholmProfile:
    A = np.asarray(op.matrix, dtype=complex)
    n = A.shape[0]
    T = mu * np.eye(n, dtype=complex) - A
    # roundoff floor on the scale of mu and A, not of T itself: mu - A
    # can be numerically zero while still carrying noise entries
    scale = max(1.0, abs(mu), float(np.linalg.norm(A, 2)))
    floor = 100.0 * n * float(np.finfo(float).eps) * scale
    rank = numeric_rank(T, gap_ratio, floor=floor)
    nul = float(n - rank)
    # row and column rank agree, so the defect equals the nullity
    defect = nul
    # stabilization index of the power ranks; in finite dimension the
    # kernel and range chains stabilize together
    ranks = [n]
    P = np.eye(n, dtype=complex)
    for _k in range(1, n + 2):
        P = P @ T
        ranks.append(numeric_rank(P, gap_ratio, floor=floor))
        if ranks[-1] == ranks[-2]:
            break
    ascent = float(len(ranks) - 2)
    return FredholmProfile(
        nul=nul,
        defect=defect,
        ascent=ascent,
        descent=ascent,
        range_closed=True,
        range_complemented=True,
        kernel_complemented=True,
    )


def _diagonal_profile(op: DiagonalModel, mu: complex) -> FredholmProfile:
    mu = complex(mu)
    nul = op.multiplicity_at(mu)
    accumulating = op.is_accumulation_at(mu)
    range_closed = not accumulating
    defect = nul if range_closed else INF
    ascent = 0.0 if nul == 0 else 1.0
    descent = ascent if range_closed else INF
    return FredholmProfile(
        nul=float(nul) if nul != math.inf else INF,
        defect=defect,
        ascent=ascent,
        descent=descent,
        range_closed=range_closed,
        range_complemented=range_closed,
        kernel_complemented=True,
    )


def profile(op, mu: complex, gap_ratio: float = 10.0) -> FredholmProfile:
    """FredholmProfile of mu - A.

    Dense: kernel and range data from the numerical rank of mu - A and
    its powers.  Diagonal: closed-form rules; the nullity is the total
    multiplicity at mu, the range is closed exactly when mu is not an
    accumulation point of the rest of the spectrum, and a non-closed
    range carries infinite defect and descent.
    """
    if isinstance(op, DiagonalModel):
        return _diagonal_profile(op, mu)
    return _dense_profile(op, complex(mu), gap_ratio)


def classify(p: FredholmProfile) -> PhiMembership:
    """Evaluate the ten class predicates on a profile."""
    fin = lambda v: v != INF
    phi0 = p.nul == 0 and p.defect == 0
    phi1 = fin(p.nul) and fin(p.defect)
    phi2 = fin(p.nul) and p.range_complemented
    phi3 = fin(p.defect) and p.kernel_complemented
    phi4 = fin(p.nul) and p.range_closed
    phi5 = fin(p.defect)
    phi6 = phi4 or phi5
    phi7 = fin(p.nul) and p.nul == p.defect
    phi8 = phi7 and p.ascent == p.descent and fin(p.ascent)
    phi9 = fin(p.ascent) and fin(p.descent)
    return PhiMembership(member={
        0: phi0, 1: phi1, 2: phi2, 3: phi3, 4: phi4,
        5: phi5, 6: phi6, 7: phi7, 8: phi8, 9: phi9,
    })


# ---------------------------------------------------------------------------
# extended spectra


def _resolvent_model(op) -> object:
    """(mu0 - A)^{-1} at some real mu0 in the resolvent set."""
    b = default_base_point(op)
    for mu0 in (b, b + 1.5, 2.0 * b + 3.0):
        try:
            return op.resolve(mu0)
        except SingularResolvent:
            continue
    raise EmptyResolvent(
        "no resolvent point found on the real axis beyond the bisector"
    )


def _infinity_membership(op, i: int) -> bool:
    """Infinity belongs to the index-i spectrum of A iff 0 belongs to
    the index-i spectrum of a resolvent of A."""
    if isinstance(op, DenseOperator):
        return False
    R = _resolvent_model(op)
    return not classify(profile(R, 0.0)).holds(i)


def extended_spectrum(op, i: int) -> SpectralSet:
    """The index-i extended spectrum as a tagged spectral set.

    Index 0 is the spectrum itself.  For i >= 1 only infinite-
    multiplicity atoms and accumulation points can fail the class
    predicates on a diagonal model (isolated finite-multiplicity
    eigenvalues always pass), so candidates are the atom values and the
    finite tail limits; membership of infinity is decided through the
    resolvent.  Dense operators have empty index-i spectra for i >= 1.
    """
    if not (0 <= int(i) <= 9):
        raise ValueError(f"spectrum index must lie in 0..9, got {i}")
    i = int(i)
    sigma = op.spectrum()
    if i == 0:
        return sigma
    if isinstance(op, DenseOperator):
        return SpectralSet(points=(), includes_infinity=False)

    candidates: list[complex] = []
    def push(v: complex) -> None:
        for u in candidates:
            if abs(u - v) <= 1e-9 * max(1.0, abs(u), abs(v)):
                return
        candidates.append(v)

    for v, _m in op.atoms:
        push(complex(v))
    for t in op.tails:
        if not (isinstance(t.limit, float) and math.isinf(t.limit)):
            push(complex(t.limit))

    bad: list[complex] = []
    for mu in candidates:
        if not classify(profile(op, mu)).holds(i):
            bad.append(mu)

    def is_bad(v: complex) -> bool:
        return any(abs(v - u) <= 1e-9 * max(1.0, abs(v), abs(u)) for u in bad)

    points = tuple(p for p in sigma.points if is_bad(complex(p.value)))
    return SpectralSet(points=points,
                       includes_infinity=_infinity_membership(op, i))


def resolvent_transfer_check(op, mu: complex, b: complex) -> bool:
    """Membership is preserved by the bounded transform:
    mu - A lies in Phi_i exactly when (mu - A)(b - A)^{-1} does,
    for every i.  Returns whether the two membership vectors agree.
    """
    mu = complex(mu)
    left = classify(profile(op, mu)).vector

    if isinstance(op, DenseOperator):
        A = np.asarray(op.matrix, dtype=complex)
        n = A.shape[0]
        T = (mu * np.eye(n) - A) @ op.resolve(complex(b))
        transformed = DenseOperator(matrix=T, region=op.region)
        right = classify(profile(transformed, 0.0)).vector
        return left == right

    bb = complex(b)
    g = rational_fn(
        (mu, -1.0), (bb, -1.0),
        label=f"(mu-z)/({bb.real:g}-z)",
    )
    transformed = op.map(g)
    right = classify(profile(transformed, 0.0)).vector
    return left == right


def truncation_profile(op: DiagonalModel, mu: complex, N: int,
                       gap_ratio: float = 10.0) -> FredholmProfile:
    """Brute-force profile of an N-dimensional truncation.

    The oracle for the diagonal model rules: finite fields must agree
    exactly for N large enough, and infinite fields show up as values
    that grow with N.
    """
    M = op.truncate(N)
    region = op.region if op.region is not None else BisectorRegion(0.5 * math.pi, 0.0)
    return _dense_profile(DenseOperator(matrix=M, region=region), complex(mu), gap_ratio)
