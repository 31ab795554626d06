"""Exception hierarchy shared by the engine and the CLI."""


class UbiError(Exception):
    """Base class for all engine errors."""


class ValidationError(UbiError, ValueError):
    """Raised by :func:`validate_economy`; carries every violation found."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))

    def kinds(self):
        return {type(v) for v in self.violations}


class Violation(Exception):
    """A single failed model constraint (collected into ValidationError)."""


class InvalidPolicy(Violation):
    pass


class InvalidPreferences(Violation):
    pass


class ShareImbalance(Violation):
    pass


class LengthMismatch(Violation):
    pass


class InvalidDiffusion(Violation):
    pass


class DomainError(UbiError, ValueError):
    """Argument outside the open unit interval (or another function domain)."""


class ConsistencyError(UbiError, ArithmeticError):
    """Two independent computations of the same quantity disagree."""


class StepSizeError(UbiError, ValueError):
    pass


class GridError(UbiError, ValueError):
    pass


class NoConvergence(UbiError, RuntimeError):
    pass


class SeedRequired(UbiError, ValueError):
    pass


class OutOfGrid(UbiError, ValueError):
    pass


class RegimeError(UbiError, ValueError):
    pass


class InsufficientPaths(UbiError, ValueError):
    pass


class ConfigError(UbiError, ValueError):
    pass


class VerificationFailure(UbiError, RuntimeError):
    """A verification command found a violated identity or test."""
