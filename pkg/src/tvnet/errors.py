"""Exception hierarchy with machine-readable categories.

Every error raised by the package derives from :class:`TvnetError` and
carries a stable ``category`` string that the CLI reports on exit.
"""

from __future__ import annotations

import numpy as np


class TvnetError(Exception):
    """Base class for all package errors."""

    category = "error"


class InvalidArgumentError(TvnetError):
    """Malformed or inconsistent inputs (dimension mismatches, bad flags)."""

    category = "invalid-argument"


class CapacityError(TvnetError):
    """Requested computation exceeds a hard size cap."""

    category = "capacity"


class EmptyWindowError(TvnetError):
    """No observation receives positive kernel weight at the target time."""

    category = "empty-window"

    def __init__(self, tau: float, bandwidth: float):
        self.tau = tau
        self.bandwidth = bandwidth
        super().__init__(
            f"no time point within bandwidth {bandwidth:g} of tau={tau:g}; "
            "all kernel weights are zero"
        )


class ConvergenceError(TvnetError):
    """Solver hit its iteration cap; carries the last iterate and trace."""

    category = "convergence-failure"

    def __init__(self, message: str, iterate: np.ndarray, trace: np.ndarray):
        self.iterate = iterate
        self.trace = trace
        super().__init__(message)


class ParseError(TvnetError):
    """Unreadable input value; locates the offending row and column."""

    category = "parse"

    def __init__(self, message: str, row: int | None = None, column: int | None = None):
        self.row = row
        self.column = column
        loc = ""
        if row is not None:
            loc = f" (row {row}" + (f", column {column})" if column is not None else ")")
        super().__init__(message + loc)


class ValidationError(TvnetError):
    """Structurally valid input that violates a documented constraint."""

    category = "validation"


class GenerationError(TvnetError):
    """Synthetic-graph rewiring could not satisfy its constraints."""

    category = "generation"


class GridSearchError(TvnetError):
    """Every grid cell failed to produce an estimate."""

    category = "grid-search"


class OutputError(TvnetError):
    """I/O failure while writing results; carries the path context."""

    category = "io"
