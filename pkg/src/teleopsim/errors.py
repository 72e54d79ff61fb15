"""Exception types shared across the simulator."""


class TeleopsimError(Exception):
    """Base class for all simulator errors."""


class StateIntegrityError(TeleopsimError):
    """A state or input became non-finite."""


class ClockError(TeleopsimError):
    """Time went backwards on a channel or loop clock."""


class ConfigurationError(TeleopsimError):
    """Invalid scenario, predictor, or model configuration."""


class TopologyError(ConfigurationError):
    """Network weight shapes inconsistent with the declared topology."""


class NumericError(TeleopsimError):
    """Non-finite activation, loss, or gradient during training."""


class ParseError(TeleopsimError):
    """Malformed log or checkpoint file.

    Carries the 1-based line number when the problem is localized.
    """

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"{message} (line {line})"
        super().__init__(message)
