"""Exception types raised across the package."""


class RGLassoError(Exception):
    """Base class for all package errors."""


class BadConfig(RGLassoError, ValueError):
    pass


class BadPartition(RGLassoError, ValueError):
    pass


class InvalidTransition(RGLassoError, ValueError):
    pass


class ZeroSignEntry(RGLassoError, ValueError):
    pass


class OutOfRange(RGLassoError, ValueError):
    pass


class SingularUpdate(RGLassoError, ArithmeticError):
    """An incremental inverse update hit a near-zero pivot."""


class SingularSystem(RGLassoError, ArithmeticError):
    """A linear system is numerically singular."""


class NoConvergence(RGLassoError, RuntimeError):
    pass


class PathStall(RGLassoError, RuntimeError):
    """A homotopy run exceeded its event budget.

    ``state`` carries whatever diagnostics the raising path collected
    (parameter value, last events, active sets).
    """

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state if state is not None else {}
