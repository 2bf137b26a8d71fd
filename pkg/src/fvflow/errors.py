class FVFlowError(Exception):
    """Base class for all errors raised by fvflow."""


class GridError(FVFlowError, ValueError):
    pass


class SpecError(FVFlowError, ValueError):
    pass


class KernelError(FVFlowError, ArithmeticError):
    """Interaction kernel is not finite at a displacement the scheme needs."""


class MobilityRangeError(FVFlowError, ArithmeticError):
    """Mobility exponent too large in magnitude: e^{-V-W*rho} would overflow or underflow."""


class ConvergenceError(FVFlowError, RuntimeError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class LimiterError(FVFlowError, ValueError):
    pass


class ConfigError(FVFlowError, ValueError):
    pass
