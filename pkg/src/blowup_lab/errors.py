"""Exception types shared across the lab."""


class BlowupLabError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(BlowupLabError):
    """A force or operator specification failed its construction checks."""


class DomainExceededError(BlowupLabError):
    """F(s) reached the operator's energy ceiling B_sup inside an integration range.

    Raised by operators with finite B_sup (e.g. mean curvature) instead of
    extrapolating B^-1 beyond its domain.
    """


class DivergenceError(BlowupLabError):
    """An improper integral was detected as divergent (tail not decaying)."""


class BracketError(BlowupLabError):
    """Monotone root finding could not bracket the requested value."""


class ProfileDomainError(BlowupLabError):
    """A profile was evaluated at or beyond its blow-up location."""


class SolverError(BlowupLabError):
    """The nonlinear grid solver failed to converge or overflowed."""


class ConfigError(BlowupLabError):
    """An experiment configuration is malformed or inconsistent."""
