"""Exception taxonomy for the bounds pipeline.

Every error raised by this package derives from QkdBoundsError so callers
can catch one type at the CLI boundary. The distinction that matters
operationally is between bad input (ConfigError, DomainError), a violated
validity condition of the math (ConditionViolation), and a failed
self-check (InternalInconsistencyError, VerificationError).
"""


class QkdBoundsError(Exception):
    """Base class for all package errors."""


class ConfigError(QkdBoundsError):
    """Malformed configuration or command-line usage. CLI exit code 2."""


class DomainError(QkdBoundsError):
    """Argument outside the mathematical domain of an operation."""


class ConditionViolation(QkdBoundsError):
    """A validity condition of the bound formulas does not hold.

    Messages state the violated inequality with the offending values so the
    failure is actionable without context. CLI exit code 3.
    """


class VacuousBoundsError(QkdBoundsError):
    """Tagged fraction plus sampling slack reach 1; no untagged bits remain."""


class UnsupportedModeError(QkdBoundsError):
    """Requested mode is outside what the implemented analysis supports."""


class ScaleError(QkdBoundsError):
    """Brute-force oracle invoked beyond its exhaustive-enumeration scale."""


class InternalInconsistencyError(QkdBoundsError):
    """A quantity that must be positive/finite by construction is not."""


class NoFeasiblePointError(QkdBoundsError):
    """Optimizer grid contains no point satisfying the validity conditions."""


class VerificationError(QkdBoundsError):
    """Soundness campaign found a bound violation. CLI exit code 4."""
