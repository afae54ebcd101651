"""Exception hierarchy shared across the toolkit.

The CLI maps these onto exit codes: usage errors exit 2, DataError and
subclasses exit 3, NumericError exits 4.
"""


class TlnasError(Exception):
    """Base class for all toolkit errors."""


class InvalidLayerError(TlnasError):
    """Layer specification is inconsistent (e.g. fan_in = 0)."""


class DimensionError(TlnasError):
    """Tensor shapes do not line up with the network contract."""


class ProtocolError(TlnasError):
    """Operations called out of order (e.g. backward without a cached forward)."""


class NumericError(TlnasError):
    """Non-finite values where finite ones are required."""

    def __init__(self, message: str, node: str | None = None):
        super().__init__(message if node is None else f"{message} (node: {node})")
        self.node = node


class DataError(TlnasError):
    """Problems with input data files."""


class FormatError(DataError):
    """Malformed bytes in a dataset or fixture file."""


class FixtureError(DataError):
    """Benchmark fixture is missing, malformed, or lacks a requested entry."""


class ParseError(TlnasError):
    """Malformed architecture string."""


class NoValidCandidateError(TlnasError):
    """Every candidate in a run was filtered out (all scores degenerate)."""
