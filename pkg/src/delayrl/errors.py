"""Exception types shared across the package."""


class DelayRLError(Exception):
    pass


class ConfigurationError(DelayRLError, ValueError):
    """Inconsistent shapes, unknown names or invalid parameters."""


class CapabilityError(DelayRLError):
    """The requested operation is not supported (missing substeps, size cap)."""


class StateError(DelayRLError, RuntimeError):
    """An object was used in the wrong lifecycle state (e.g. step before reset)."""


class NumericalError(DelayRLError, ArithmeticError):
    pass


class UsageError(DelayRLError, ValueError):
    pass
