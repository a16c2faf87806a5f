"""Exception types shared across the package."""


class GraphFormatError(ValueError):
    """A graph file violates the on-disk format.

    `byte_offset` points at the first offending byte when it is known.
    """

    def __init__(self, message, byte_offset=None):
        if byte_offset is not None:
            message = f"{message} (byte offset {byte_offset})"
        super().__init__(message)
        self.byte_offset = byte_offset


class FootprintError(RuntimeError):
    """Auxiliary memory precheck failed; nothing was allocated."""

    def __init__(self, required_bytes, limit_bytes):
        super().__init__(
            f"footprint exceeds limit: needs {required_bytes} bytes, "
            f"limit is {limit_bytes} bytes"
        )
        self.required_bytes = required_bytes
        self.limit_bytes = limit_bytes


class CounterOverflowError(RuntimeError):
    """A 32-bit degree counter or insertion cursor would overflow."""
