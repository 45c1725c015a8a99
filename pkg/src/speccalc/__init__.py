"""speccalc: holomorphic functional calculus for bisectorial-like operators.

The package is organized around four layers:

* :mod:`speccalc.geometry` -- bisector-shaped regions, admissible contours,
  adaptive contour quadrature.
* :mod:`speccalc.functions` -- meromorphic function objects, regularity
  probes, the elementary-class decomposition, regularizers.
* :mod:`speccalc.operators` / :mod:`speccalc.calculus` -- dense and diagonal
  operator backends and the primary / regularized calculi built on them.
* :mod:`speccalc.fredholm` / :mod:`speccalc.verifier` -- Fredholm-type
  spectral classification and the spectral mapping verdict engine.
"""

from .errors import (
    SpecCalcError,
    GeometryError,
    SingularSystem,
    NotBisectorial,
    SingularResolvent,
    QuadratureDiverged,
    NotClopen,
    RankIndeterminate,
    NoRegularizer,
    RegularizerNotInjective,
    EmptyResolvent,
    ZeroAtSingularPoint,
    UndeclaredLimit,
    ValidationError,
)

__all__ = [
    "SpecCalcError",
    "GeometryError",
    "SingularSystem",
    "NotBisectorial",
    "SingularResolvent",
    "QuadratureDiverged",
    "NotClopen",
    "RankIndeterminate",
    "NoRegularizer",
    "RegularizerNotInjective",
    "EmptyResolvent",
    "ZeroAtSingularPoint",
    "UndeclaredLimit",
    "ValidationError",
]

__version__ = "0.1.0"
