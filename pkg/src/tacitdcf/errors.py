"""Exception types shared across the engine."""


class NumericError(ArithmeticError):
    """A numeric contract was violated (non-Hermitian spectrum, singular system)."""


class StackFormatError(ValueError):
    """A feature-stack file is malformed; `offset` is the failing byte position."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset
