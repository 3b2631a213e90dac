"""Exception types raised by the solvers, the verifier and the simulator."""


class JumpControlError(Exception):
    """Base class for every error raised by this package."""


class ParameterError(JumpControlError, ValueError):
    """Invalid model or problem parameters."""


class DomainError(JumpControlError, ValueError):
    """Evaluation point outside the state space [0, inf)."""


class PoleAtEta(JumpControlError, ZeroDivisionError):
    """G(gamma) evaluated at its pole gamma = eta."""


# the generator hits the same pole when an exponential piece has rate eta
PoleGuard = PoleAtEta


class BracketFailure(JumpControlError, RuntimeError):
    """No sign change could be bracketed for a scalar root search."""


class NoSignChange(BracketFailure):
    """The second-order smooth-fit residual never changes sign on the scan interval."""


class TrendNotPositive(ParameterError):
    """mu + lambda/eta <= 0, so the harvesting barrier does not exist."""


class ConfigError(JumpControlError, ValueError):
    """Simulation or run configuration violating its invariants."""
