"""Exception types shared across the package."""


class ParameterError(ValueError):
    """A numeric argument is outside the domain of the model."""


class GraphError(ValueError):
    """The mobility graph description is invalid or disconnected."""


class MobilityEstimationError(ValueError):
    """Not enough signal data to evaluate the mobility metric for a window."""


class ConfigError(ValueError):
    """A configuration file or override does not satisfy the schema or its invariants."""
