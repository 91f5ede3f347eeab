"""Exception types shared across the package."""


class SemisurjError(Exception):
    """Base class for all errors raised by this package."""


class TagCollision(SemisurjError):
    """A derived tag clashes with a tag already in the universe."""


class ConflictingUnion(SemisurjError):
    """Domains of maps passed to a disjoint union overlap."""


class InvalidAction(SemisurjError):
    """A renaming action is not bijective on the declared universe."""


class DisjointnessViolation(SemisurjError):
    """Sets required to be pairwise disjoint are not."""


class NotPartialSurjection(SemisurjError):
    """A map fails its declared partial-surjection contract."""


class NotSurjectionPair(SemisurjError):
    """A pair of maps fails the surjection-pair contract."""


class ExpansivityRequired(SemisurjError):
    """Iterated-image construction needs A to be contained in f[A]."""


class InvalidFamily(SemisurjError):
    """A tailed family violates its invariants."""


class InvalidChain(SemisurjError):
    """A chain family violates its invariants."""


class NonStabilizing(SemisurjError):
    """An omega-limit did not stabilize (or verifiably accelerate) in budget.

    Attributes:
        steps: number of iterations performed before giving up.
        last_delta: the last nonempty difference observed, if any.
    """

    def __init__(self, message, steps=None, last_delta=None):
        super().__init__(message)
        self.steps = steps
        self.last_delta = last_delta


class NotDescending(SemisurjError):
    """A chain declared descending produced a non-subset step."""


class Unsupported(SemisurjError):
    """The implemented derivation does not cover this instance."""

    def __init__(self, reason):
        super().__init__(reason)
        self.reason = reason


class SizeGuard(SemisurjError):
    """A brute-force oracle was asked to exceed its size bounds."""
