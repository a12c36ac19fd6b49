from typing import Optional


class ScmxError(Exception):
    """Base class for all simulator errors"""


class ConfigurationError(ScmxError, ValueError):
    """Invalid parameters, unknown configuration keys or an impossible pairing"""

    def __init__(self, message: str, key: Optional[str] = None):
        self.key = key
        if key:
            message = f"{key}: {message}"
        super().__init__(message)


class TraceFormatError(ScmxError, ValueError):
    """A trace record could not be parsed or violates a record invariant"""

    def __init__(self, message: str, record: Optional[int] = None, offset: Optional[int] = None):
        self.record = record
        self.offset = offset
        where = []
        if record is not None:
            where.append(f"record {record}")
        if offset is not None:
            where.append(f"offset {offset}")
        if where:
            message = f"{message} (at {', '.join(where)})"
        super().__init__(message)


class SimulationError(ScmxError, RuntimeError):
    """A request stream violated a device or hierarchy constraint at run time"""
