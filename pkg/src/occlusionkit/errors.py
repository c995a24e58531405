"""Exception types shared across the toolkit."""


class ToolkitError(Exception):
    """Base class for all occlusionkit errors."""


class EmptyMaskError(ToolkitError):
    """An operation that requires at least one set pixel got an empty mask."""


class DimensionMismatchError(ToolkitError):
    """Two rasters that must share dimensions do not."""


class DegenerateBBoxError(ToolkitError):
    """A bounding box with zero width or height where a proper box is required."""


class MalformedFileError(ToolkitError):
    """An on-disk artifact failed to decode.

    ``offset`` is the byte offset at which parsing failed, when known.
    """

    def __init__(self, message: str, offset: int | None = None):
        super().__init__(message if offset is None else f"{message} (byte offset {offset})")
        self.offset = offset


class InvalidMotionSpecError(ToolkitError):
    """An image-to-video motion spec that cannot be realized."""


class RegionTooSmallError(ToolkitError):
    """A metric crop region smaller than the metric's minimum window."""


class CompleterContractError(ToolkitError):
    """A completer returned frames violating the window contract."""
