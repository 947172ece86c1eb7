"""Exception types shared across the package."""


class ContractViolation(ValueError):
    """An operation was called with arguments outside its contract."""


class ResourceLimitError(MemoryError):
    """The requested problem size exceeds a simulation cap."""


class ConfigurationError(ValueError):
    """An experiment configuration could not be parsed or validated."""


class NonFiniteError(FloatingPointError):
    """A NaN or infinity appeared in a quantity that must be finite."""
