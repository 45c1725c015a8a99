"""Exception types shared across the package."""

from __future__ import annotations


class SpecCalcError(Exception):
    """Base class for all package-specific errors."""


class GeometryError(SpecCalcError):
    """Raised when contour or region parameters are inconsistent."""


class SingularSystem(SpecCalcError):
    """Raised when the elementary-decomposition system is singular.

    Happens when the two finite singular points coincide (half-width 0);
    callers fall back to a degenerate basis instead of propagating this.
    """


class NotBisectorial(SpecCalcError):
    """Certification failed: spectrum or resolvent bound violates the
    bisectorial-like conditions.  Carries the offending sample."""

    def __init__(self, message: str, sample=None):
        super().__init__(message)
        self.sample = sample


class SingularResolvent(SpecCalcError):
    """Resolvent requested at (or too close to) a spectral point."""


class QuadratureDiverged(SpecCalcError):
    """Adaptive contour quadrature could not reach the requested tolerance."""


class NotClopen(SpecCalcError):
    """Projection selector splits a connected spectral component."""


class RankIndeterminate(SpecCalcError):
    """Singular values straddle the rank threshold without a safe gap."""


class NoRegularizer(SpecCalcError):
    """No admissible regularizer exists for the requested function."""


class RegularizerNotInjective(SpecCalcError):
    """Candidate regularizer vanishes on an eigenvalue, so its operator
    image cannot be injective."""


class EmptyResolvent(SpecCalcError):
    """No resolvent point could be located for the operator."""


class ZeroAtSingularPoint(SpecCalcError):
    """Factorization target value is attained at a singular point, where
    zero orders are not defined."""


class UndeclaredLimit(SpecCalcError):
    """A limit at a singular point is required but was not declared."""


class UnboundedResult(SpecCalcError):
    """Raised only when an unbounded calculus result cannot be represented;
    normally unboundedness is reported via a flag, not an exception."""


class ValidationError(SpecCalcError):
    """Schema or semantic validation failure with JSON-pointer context."""

    def __init__(self, issues):
        self.issues = list(issues)
        lines = "; ".join(f"{path}: {msg}" for path, msg in self.issues)
        super().__init__(f"validation failed: {lines}")
