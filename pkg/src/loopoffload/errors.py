"""Exception hierarchy shared by every pipeline stage."""


class OffloadError(Exception):
    """Base class for all toolchain errors."""


class CSyntaxError(OffloadError, SyntaxError):
    """Malformed C that prevents statement-tree recovery."""

    def __init__(self, message, file=None, line=None):
        super().__init__(f"{file}:{line}: {message}" if file else message)
        self.filename = file
        self.lineno = line


class AnnotationError(OffloadError):
    pass


class InvalidConfig(OffloadError):
    pass


class CodegenError(OffloadError):
    pass


class UnsupportedLoop(CodegenError):
    pass


class UnrollError(CodegenError):
    pass


class ModelError(OffloadError):
    pass


class ReportParseError(OffloadError):
    pass


class DomainError(OffloadError, ValueError):
    pass


class EmptyCandidates(OffloadError):
    pass


class SidecarError(OffloadError):
    pass


class BackendError(OffloadError):
    """A single measurement failed; the search records it and moves on."""


class CompileError(BackendError):
    pass


class MeasurementTimeout(BackendError):
    pass


class RunError(BackendError):
    pass


class TimeTokenError(BackendError):
    """The run finished but printed no ``OFFLOAD_TIME_MS=`` line."""
