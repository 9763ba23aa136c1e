"""Exception types shared across the package."""


class QsrdgError(Exception):
    """Base class for all errors raised by qsrdg."""


class SingularMatrix(QsrdgError):
    """A pivot fell below the relative threshold during elimination."""


class NonFiniteEvaluation(QsrdgError):
    """A map produced NaN or infinity where a finite value was required."""


class ZeroDirection(QsrdgError):
    """A direction vector was too short to normalize or project against."""


class GridMismatch(QsrdgError):
    """Two time grids that must share nodes do not align."""


class AreNotConverged(QsrdgError):
    """Newton-Kleinman iteration did not reach the residual tolerance."""


class NotStabilizing(QsrdgError):
    """No stabilizing gain was found, or the closed loop is not Hurwitz."""


class UnknownExample(QsrdgError):
    """Requested benchmark system name is not one of the shipped ones."""


class IntegrationError(QsrdgError):
    """A time step failed; carries the index and time of the failing step.

    The original error is attached as ``__cause__``.
    """

    def __init__(self, step_index, time, message):
        super().__init__(f"step {step_index} (t = {time:.6g}) failed: {message}")
        self.step_index = step_index
        self.time = time


class NewtonDidNotConverge(UserWarning):
    """Newton residual still above tolerance after the iteration cap.

    This is a warning, not an error: the step result is returned anyway and
    the residual is recorded in the trajectory.
    """
