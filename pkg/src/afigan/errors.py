"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """Malformed or non-finite array input."""


class InvalidParameterError(ValueError):
    """Scalar parameter outside its documented range."""


class StateError(RuntimeError):
    """Operation called in the wrong order (e.g. backward before forward)."""


class ConfigError(ValueError):
    """Bad experiment configuration or dataset spec."""


class TrainingDivergence(RuntimeError):
    """A loss or parameter became non-finite during training."""

    def __init__(self, iteration, message="non-finite value", last_record=None):
        super().__init__(f"training diverged at iteration {iteration}: {message}")
        self.iteration = iteration
        self.last_record = last_record
