"""Exception types shared across the package."""


class RunwaygripError(Exception):
    """Base class for all package-specific errors."""


class InputError(RunwaygripError):
    """Invalid user-supplied data (bad labels, schema mismatch, malformed rows)."""


class ConfigError(RunwaygripError):
    """Invalid or incomplete configuration."""


class UsageError(RunwaygripError):
    """An API was called in a way its contract forbids."""


class DegenerateLeafError(RunwaygripError):
    """Leaf weight is undefined because the hessian mass plus lambda is zero."""


class StaleDataError(InputError):
    """No recent enough observation exists to serve the request."""
