"""Exception hierarchy.

Numerical failures (singular systems, non-convergence, infeasible calibration)
derive from :class:`NumericalError` so callers such as the CLI can map them to a
single exit status.
"""


class MRImputeError(Exception):
    """Base class for all package errors."""


class InvalidDesignError(MRImputeError, ValueError):
    """Sampling design parameters are inconsistent (e.g. n > N)."""


class IncompleteDataError(MRImputeError, ValueError):
    """A value required by a complete-data estimator is missing."""


class NotInSampleError(MRImputeError, KeyError):
    """A unit id was requested that is not a sample member."""


class ConfigError(MRImputeError, ValueError):
    """Invalid scenario or model configuration."""


class InputError(MRImputeError, ValueError):
    """Malformed user input file."""

    def __init__(self, message, row=None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class NumericalError(MRImputeError, ArithmeticError):
    """Base class for numerical failures."""


class SingularSystemError(NumericalError):
    """A linear system that must be solved is (numerically) singular."""

    def __init__(self, message, block=None):
        self.block = block
        if block is not None:
            message = f"{message} [block: {block}]"
        super().__init__(message)


class NonConvergenceError(NumericalError):
    """An iterative solver failed to converge.

    ``trace`` holds one ``(iteration, score_max_norm, step_size)`` tuple per
    iteration performed.
    """

    def __init__(self, message, trace=()):
        self.trace = list(trace)
        super().__init__(message)


class DegenerateCompressionError(NumericalError):
    """Score compression produced an all-zero coefficient vector."""


class CalibrationError(NumericalError):
    """Calibration problem is degenerate or the solver failed."""


class InfeasibleCalibrationError(CalibrationError):
    """The calibration target lies outside the attainable interval."""

    def __init__(self, message, interval=None):
        self.interval = interval
        if interval is not None:
            message = f"{message} (attainable interval: [{interval[0]:.6g}, {interval[1]:.6g}])"
        super().__init__(message)
