"""Exception types shared across the package."""


class DstileError(Exception):
    """Base class for package errors."""


class CorpusParseError(DstileError):
    """A corpus record could not be parsed; carries the 1-based line number."""

    def __init__(self, line_number: int, message: str):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class EmptyCorpusError(DstileError):
    """The corpus file contained no records."""


class PartitionError(DstileError):
    """The corpus cannot be partitioned into tiers."""


class SplitError(DstileError):
    """Requested test split exceeds what a tier can provide."""


class SelectionError(DstileError):
    """An exemplar selector was invoked with unsatisfiable arguments."""


class OracleTooLargeError(DstileError):
    """Brute-force enumeration would exceed the configured subset budget."""


class GatewayError(DstileError):
    """The completion endpoint could not be reached within the retry budget."""


class CassetteMissError(DstileError):
    """Replay mode saw a prompt that is not in the cassette."""


class NormalizationError(DstileError):
    """A geometry artifact is degenerate and cannot be normalized."""
