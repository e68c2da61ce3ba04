"""Error hierarchy shared by the library and the command line."""
from typing import Optional


class DemonError(Exception):
    """Base class for every error raised by the simulator."""


class DimensionError(DemonError):
    """Matrix shapes do not agree or leave the supported 2/4 dimensions."""


class NonHermitianError(DemonError):
    """A Hermitian matrix was required."""


class ParseError(DemonError):
    """Malformed pulse-program text."""

    def __init__(self, message: str, line: int, column: int = 1):
        self.description = message
        self.line = line
        self.column = column
        super().__init__(f"line {line}, column {column}: {message}")


class EnginePreconditionError(DemonError):
    """A protocol was asked to run outside its parameter domain."""

    def __init__(self, message: str, instruction_index: Optional[int] = None):
        self.description = message
        self.instruction_index = instruction_index
        if instruction_index is not None:
            message = f"instruction {instruction_index}: {message}"
        super().__init__(message)

    def at(self, instruction_index: int) -> "EnginePreconditionError":
        return EnginePreconditionError(self.description, instruction_index)


class InvariantViolationError(DemonError):
    """A density-matrix or ledger invariant failed after a step."""

    def __init__(self, message: str, instruction_index: Optional[int] = None):
        self.description = message
        self.instruction_index = instruction_index
        if instruction_index is not None:
            message = f"instruction {instruction_index}: {message}"
        super().__init__(message)
