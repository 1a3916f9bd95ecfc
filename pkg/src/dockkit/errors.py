"""Exception hierarchy shared by all dockkit modules."""


class DockkitError(Exception):
    """Base class for every error raised by dockkit."""


class InvalidArgumentError(DockkitError, ValueError):
    pass


class ShapeError(DockkitError, ValueError):
    pass


class InvalidIntrinsicsError(InvalidArgumentError):
    pass


class InvalidStateError(DockkitError, RuntimeError):
    pass


class OutOfBoundsError(InvalidArgumentError, IndexError):
    pass


class RejectedEpisodeError(DockkitError, RuntimeError):
    """Start pose is in collision; the episode cannot be run."""


class MissingComponentError(DockkitError, FileNotFoundError):
    """An episode archive lacks one of its files."""

    def __init__(self, filename, directory=None):
        self.filename = filename
        where = f" in {directory}" if directory is not None else ""
        super().__init__(f"missing archive component {filename!r}{where}")


class CorruptArchiveError(DockkitError, ValueError):
    pass


class ParseError(DockkitError, ValueError):
    """Malformed text input. ``line`` is 1-based when known."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        loc = ""
        if path is not None:
            loc += f"{path}"
        if line is not None:
            loc += f":{line}" if loc else f"line {line}"
        super().__init__(f"{loc}: {message}" if loc else message)
