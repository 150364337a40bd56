class DimensionError(ValueError):
    """Input length does not match the hash dimensions."""


class ParameterError(ValueError):
    """A count or size argument is out of range."""


class DomainError(ValueError):
    """A numeric argument lies outside the function's domain."""


class InfeasibleError(ValueError):
    """No parameter choice satisfies the requested bound."""
