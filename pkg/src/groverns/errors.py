"""Exception types shared across the package."""


class GroverNoiseError(Exception):
    """Base class for all package errors."""


class SizeError(GroverNoiseError, ValueError):
    """A register or enumeration exceeds the configured resource cap."""


class ShapeError(GroverNoiseError, ValueError):
    """Operand dimensions do not match."""


class UnitaryError(GroverNoiseError, ValueError):
    """A matrix or parameter set that should be unitary is not."""


class SiteIndexError(GroverNoiseError, IndexError):
    """A qubit position lies outside the register."""


class DomainError(GroverNoiseError, ValueError):
    """An argument lies outside the domain of the function."""


class ConsistencyError(GroverNoiseError, RuntimeError):
    """Two independent evaluations of the same quantity disagree."""


class UnsupportedClassification(GroverNoiseError, ValueError):
    """The operation is only defined for good-noise unitaries."""
