"""Exception hierarchy shared by all flipkit modules."""


class FlipkitError(Exception):
    """Base class for every error raised by flipkit."""


class InvalidInputError(FlipkitError, ValueError):
    pass


class ConfigError(InvalidInputError):
    """A descriptor or run configuration violates its invariants."""


class ImageLoadError(FlipkitError, OSError):
    def __init__(self, path, reason):
        self.path = str(path)
        self.reason = str(reason)
        super().__init__(f"cannot read image {self.path!r}: {self.reason}")


class EmptyIndexError(FlipkitError):
    pass


class IndexFormatError(FlipkitError):
    """The index file is malformed. ``offset`` is the byte position of the failure."""

    def __init__(self, message, offset):
        self.offset = offset
        super().__init__(f"{message} (at byte offset {offset})")


class UnsupportedVersionError(IndexFormatError):
    pass


class EvaluationError(FlipkitError):
    pass
