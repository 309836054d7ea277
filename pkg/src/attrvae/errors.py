"""Shared exception types."""


class ShapeError(ValueError):
    """Operand shapes are incompatible with the requested operation."""


class DomainError(ValueError):
    """Operand values are outside the operation's domain (e.g. log of <= 0)."""


class FormatError(ValueError):
    """A serialized file does not match the documented format or its digest."""


class TrainingDiverged(RuntimeError):
    """Training produced a non-finite loss; carries epoch/batch context."""
