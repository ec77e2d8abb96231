"""Exception hierarchy shared by all stereoid modules.

The CLI maps these onto exit codes: ConfigError -> 2, DataError -> 3,
anything else -> 4.
"""


class StereoidError(Exception):
    """Base class for all stereoid errors."""


class ConfigError(StereoidError):
    """Invalid configuration value or combination."""


class DataError(StereoidError):
    """Malformed input data: files, manifests, label sets."""


class ShapeError(DataError):
    """Array dimensions or channel counts violate an operation's contract."""


class BackendError(StereoidError):
    """A depth backend failed to load or run inference."""


class CheckpointError(StereoidError):
    """Checkpoint file is unreadable or incompatible with the requested config."""


class NumericsError(StereoidError):
    """Non-finite values where finite ones are required (diverged training, bad gradients)."""
