"""Exception types shared across the package."""


class PackmechError(Exception):
    """Base class for all package errors."""


class InstanceError(PackmechError):
    """Malformed or inconsistent instance document."""


class SizeGateError(PackmechError):
    """An exact computation was refused because the input exceeds its size gate.

    Raised instead of silently falling back to an approximation.
    """


class TapeError(PackmechError):
    """A mechanism requested a random draw the tape cannot serve."""


class MechanismError(PackmechError):
    """A mechanism produced an outcome violating its own contract."""


class LemmaInapplicable(PackmechError):
    """Input does not satisfy the precondition of the sampling lemma."""
