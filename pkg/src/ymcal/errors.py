"""Error types shared across the package.

Each carries a short machine-readable ``code`` so CLI output and tests can
match on the failure kind rather than on message text.
"""


class YmcalError(Exception):
    code = "error"


class ProfileRangeError(YmcalError):
    """Requested s-interval is not covered by the stored profile."""

    code = "profile-range"


class UnsupportedOrderError(YmcalError):
    """Derivative substitution requested beyond the supported order."""

    code = "unsupported-order"


class FlowDivergedError(YmcalError):
    """Sup-norm blow-up guard tripped (CFL violation or bad data)."""

    code = "flow-diverged"


class CflViolationError(YmcalError):
    """Hyperbolic step ratio above the stability bound."""

    code = "cfl-violation"


class SupportOverflowError(YmcalError):
    """Rescaled data would leave the middle third of the torus."""

    code = "support-overflow"


class GaugeOdeDriftError(YmcalError):
    """Group ODE solution left the unit sphere beyond tolerance."""

    code = "gauge-ode-drift"


class ConstraintViolatedError(YmcalError):
    """Initial data fails the Gauss constraint tolerance required by a check."""

    code = "constraint-violated"


class ConfigError(YmcalError):
    """Malformed experiment configuration."""

    code = "config"
