"""Exception types shared across the package."""


class MdpZooError(Exception):
    """Base class for all mdpzoo errors."""


class InvalidInputError(MdpZooError):
    """Malformed instance data or arguments that violate a precondition."""


class ResourceLimitError(MdpZooError):
    """A configured ceiling (state count, brute-force bound) was exceeded."""

    def __init__(self, message, layer=None):
        super().__init__(message)
        self.layer = layer


class SimulationBoundsError(MdpZooError):
    """A Turing machine head left the fixed-length tape."""


class InvalidPolicyError(MdpZooError):
    """A policy returned no action, or an illegal action, for a reached state."""

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state


class FixedPointOverflowError(MdpZooError):
    """An MLP intermediate exceeded the representable fixed-point range."""

    def __init__(self, message, layer=None):
        super().__init__(message)
        self.layer = layer
