"""Exception classes shared across the toolkit."""


class MagorbitError(Exception):
    """Base class for toolkit errors."""


class ConfigurationError(MagorbitError, ValueError):
    """Invalid algebra, config, or unsupported family."""


class InputError(MagorbitError, ValueError):
    """Malformed arguments (dimension mismatch, missing operands)."""


class InconsistentMomentumError(InputError):
    """Momentum value has a component along ann(x)."""


class UnsupportedInputError(InputError):
    """Operation not available for the given input (missing witness, wrong algebra)."""


class NumericalError(MagorbitError, ArithmeticError):
    """Numerical failure: divergence, non-convergence."""


class DivergenceError(NumericalError):
    def __init__(self, step, residual, limit):
        super().__init__(
            f"constraint residual {residual:.3e} exceeds {limit:.1e} at step {step}")
        self.step = step
        self.residual = residual


class ShapeError(NumericalError):
    """Trajectory does not have the expected shape (e.g. not a circle)."""
