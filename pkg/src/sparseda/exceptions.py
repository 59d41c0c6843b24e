"""Exception types shared across the package.

Input problems raise ValueError subclasses; numeric failures (singular
systems, solver non-convergence) raise NumericError subclasses so callers
and the CLI can tell the two apart.
"""

from __future__ import annotations


class NumericError(RuntimeError):
    """A numeric routine failed (singular system, non-convergence)."""


class SingularMatrixError(NumericError):
    """Cholesky pivot collapsed; `index` is the offending pivot position."""

    def __init__(self, message: str, index: int):
        super().__init__(message)
        self.index = index


class ConvergenceError(NumericError):
    """Iterative solver exhausted its budget; `report` holds diagnostics."""

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


class DataFormatError(ValueError):
    """Malformed input file; carries 1-based line/column positions."""

    def __init__(self, message: str, line: int, column: int = 0):
        super().__init__(f"line {line}, column {column}: {message}" if column else f"line {line}: {message}")
        self.line = line
        self.column = column
