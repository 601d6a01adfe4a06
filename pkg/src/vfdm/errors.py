"""Exception types raised by the simulator."""


class VFDMError(Exception):
    """Base class for all simulator errors."""


class DegenerateChannelError(VFDMError):
    """The cross-channel polynomial has a vanishing leading coefficient.

    This is a probability-zero event for continuous fading; callers are
    expected to redraw the channel.
    """


class ConditioningError(VFDMError):
    """A precoder column cannot be represented in floating point."""

    def __init__(self, message, root_magnitude=None):
        super().__init__(message)
        self.root_magnitude = root_magnitude


class InvalidConfigError(VFDMError, ValueError):
    """An experiment configuration failed validation."""
