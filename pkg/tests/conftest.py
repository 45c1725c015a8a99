import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from speccalc.geometry import BisectorRegion
from speccalc.operators import DenseOperator, DiagonalModel, Tail, certify

settings.register_profile(
    "suite",
    deadline=None,
    max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")


PI = math.pi


@pytest.fixture
def cone_pair():
    """Certified 2x2 diag(i, -i) on the quarter-turn cone."""
    region = BisectorRegion(omega=PI / 3, halfwidth_a=0.0)
    op = DenseOperator(
        matrix=np.diag([1j, -1j]).astype(complex), region=region
    )
    return certify(op)


@pytest.fixture
def strip_triple():
    """Certified diag(1, 3j, -3j) on the unit strip; eigenvalue at +a."""
    region = BisectorRegion(omega=PI / 2, halfwidth_a=1.0)
    op = DenseOperator(
        matrix=np.diag([1.0, 0.7, 3j, -3j]).astype(complex), region=region
    )
    return certify(op)


@pytest.fixture
def tail_model():
    """Certified diagonal model with one atom and a geometric tail to 0."""
    region = BisectorRegion(omega=PI / 4, halfwidth_a=0.0)
    op = DiagonalModel(
        atoms=((2j, math.inf),),
        tails=(Tail(limit=0j, kind="geometric", base=1j, ratio=0.5),),
        region=region,
    )
    return certify(op)


@pytest.fixture
def unbounded_model():
    """Certified diagonal model with an unbounded geometric tail."""
    region = BisectorRegion(omega=PI / 4, halfwidth_a=0.0)
    op = DiagonalModel(
        atoms=((1j, 1),),
        tails=(Tail(limit=complex(math.inf, 0.0), kind="geometric", base=1j, ratio=2.0),),
        region=region,
    )
    return certify(op)


def assert_point_values(spectral_set, expected, tol=1e-9):
    """The set's finite point values equal `expected` up to pairing."""
    got = sorted((p.value for p in spectral_set.points), key=lambda z: (z.real, z.imag))
    want = sorted((complex(v) for v in expected), key=lambda z: (z.real, z.imag))
    assert len(got) == len(want), f"point count {len(got)} != {len(want)}: {got} vs {want}"
    for g, w in zip(got, want):
        assert abs(g - w) <= tol * max(1.0, abs(w)), f"{g} != {w}"
