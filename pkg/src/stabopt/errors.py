"""Exception hierarchy shared by every module."""


class StaboptError(Exception):
    pass


class ConfigError(StaboptError, ValueError):
    """Invalid or unsupported configuration."""


class DegenerateDataError(StaboptError, ValueError):
    pass


class DomainError(StaboptError, ValueError):
    """Point outside the region where a map is defined."""


class SolverError(StaboptError, RuntimeError):
    """An inner numerical solve failed to reach its tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message if residual is None else f"{message} (residual={residual:.3e})")
        self.residual = residual


class NumericError(StaboptError, FloatingPointError):
    """Non-finite value produced during an iterative run."""

    def __init__(self, message, index=None, context=None):
        self.index = index
        self.context = dict(context or {})
        where = ", ".join(f"{k}={v}" for k, v in self.context.items())
        if index is not None:
            where = f"step={index}" + (f", {where}" if where else "")
        super().__init__(f"{message} [{where}]" if where else message)


class OracleError(StaboptError, RuntimeError):
    """The high-precision minimizer could not certify its answer."""


class ScheduleExhausted(StaboptError):
    """Regularization schedule underflowed machine precision."""
