"""Exception types shared across the compiler modules."""


class BraidcError(Exception):
    """Base class for all package-specific errors."""


class NonUnitaryInput(BraidcError):
    """A matrix failed its unitarity check."""


class UninitializedNetwork(BraidcError):
    """A network was used before its parameters were allocated."""


class ShapeMismatch(BraidcError):
    """An array argument has the wrong shape or length."""


class CorruptCheckpoint(BraidcError):
    """A checkpoint file failed version or shape validation."""


class SpecMismatch(BraidcError):
    """Two networks with different architecture specs were combined."""


class DivergenceDetected(BraidcError):
    """The training loss became non-finite."""


class EmptyGateSet(BraidcError):
    """A gate set with no actions was passed to the search."""


class DepthGuardExceeded(BraidcError):
    """A brute-force enumeration was requested beyond the cost guard."""


class CommutatorDecompositionFailure(BraidcError):
    """The balanced group-commutator step could not recompose its input."""
