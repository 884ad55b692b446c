"""Exception types shared across the package."""

from __future__ import annotations


class InputError(ValueError):
    """Invalid user-supplied input (structure, sequence, or parameter file).

    Carries optional 1-based ``line``/``column`` describing where the
    offending token sits, so the CLI can report precise locations.
    """

    def __init__(self, message: str, *, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = ""
        if line is not None and column is not None:
            where = f" (line {line}, column {column})"
        elif line is not None:
            where = f" (line {line})"
        elif column is not None:
            where = f" (column {column})"
        super().__init__(message + where)


class StructureError(InputError):
    """Malformed or invalid secondary structure."""


class SequenceError(InputError):
    """Malformed nucleotide sequence."""


class ParamsError(InputError):
    """Malformed or incomplete energy parameter file."""
