"""Exception hierarchy for spectral computations, solving and certification."""

from typing import Any, Optional


class KineticSpectralError(Exception):
    """Base class of every error raised by kinetic_spectral."""


class NonConvergence(KineticSpectralError):
    """Quadrature error estimate stalled above tolerance within the budget."""

    def __init__(self, message: str, value: float = float("nan"), error_estimate: float = float("inf"), evaluations: int = 0):
        super().__init__(message)
        self.value = value
        self.error_estimate = error_estimate
        self.evaluations = evaluations


class InvalidDomain(KineticSpectralError, ValueError):
    """Integration interval is empty or reversed."""


class DomainError(KineticSpectralError, ValueError):
    """Argument outside the domain of a special function or kernel."""


class DivergentMoment(KineticSpectralError):
    """A kernel moment whose integrand is not integrable was requested."""


class InvariantViolation(KineticSpectralError):
    """A SpectralTable failed one of its post-build invariants."""


class TruncationMismatch(KineticSpectralError, ValueError):
    """Mode vectors or tables with different truncation orders were combined."""


class InvalidInitialData(KineticSpectralError, ValueError):
    """Initial data has a component on the collision invariants (modes 0, 1)."""


class NumericBlowup(KineticSpectralError):
    """A mode coefficient exceeded the configured growth guard."""


class WeightOverflow(KineticSpectralError):
    """A weighted coefficient is not representable in double precision."""


class ConfigError(KineticSpectralError, ValueError):
    """Run configuration failed validation."""


class CertificationFailure(KineticSpectralError):
    """A numerical certification found a violation; carries the report."""

    def __init__(self, message: str, report: Optional[Any] = None):
        super().__init__(message)
        self.report = report


NUMERIC_FAILURES = (NonConvergence, NumericBlowup, WeightOverflow)
