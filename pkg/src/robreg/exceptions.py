"""Exception types shared across the package."""


class RobregError(Exception):
    """Base class for robreg-specific failures."""


class KernelCapabilityError(RobregError):
    """A loss family lacks the smoothness required for the requested derivative."""


class ScaleConvergenceError(RobregError):
    """The scale-equation solver exhausted its iteration budget.

    Carries the last bracketing interval so callers can inspect how far the
    solve got.
    """

    def __init__(self, message, bracket):
        super().__init__(f"{message} (last bracket: [{bracket[0]:.6g}, {bracket[1]:.6g}])")
        self.bracket = bracket


class DegenerateDesignError(RobregError):
    """The design matrix cannot support the requested fit (singular or too thin)."""


class ConfigurationError(RobregError):
    """Estimator components are mutually inconsistent (e.g. rho1 > rho0)."""


class AssumptionError(RobregError):
    """A quantity the asymptotic theory requires to be positive is not."""
