"""Exception hierarchy shared by all simulator layers."""


class AmcError(Exception):
    """Base class for every simulator-specific error."""


class IllegalModeError(AmcError):
    """The (technology, mode) combination does not exist in hardware."""


class WrongModeError(AmcError):
    """Operation is not available in the cell's current mode."""


class EmptyCellError(AmcError):
    """Read addressed a cell location that holds no datum."""


class ExpiredReadError(AmcError):
    """Dynamic datum has decayed past its retention window."""


class MissingEntryError(AmcError):
    """Energy or delay table has no entry for the requested operation."""


class NoAnchorError(AmcError):
    """Retention table has no anchors for the (technology, bias) pair."""


class OutOfRangeError(AmcError):
    """Temperature outside the configured model range."""


class AddressOutOfRangeError(AmcError):
    """Address does not fall inside the targeted sub-array."""


class ZeroDimensionError(AmcError):
    """Sub-array rows/cols must be at least 1."""


class OutOfOrderError(AmcError):
    """Command timestamps regressed; the controller queue is time-sorted."""


class ConfigError(AmcError):
    """Invalid run or model configuration."""


class TraceError(AmcError):
    """Malformed trace file content.

    Carries the 1-based line number of the offending line when known.
    """

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
