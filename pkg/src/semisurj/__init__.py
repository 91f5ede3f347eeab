"""semisurj: exact partial-surjection algebra on eventually periodic sets."""

__version__ = "0.1.0"

from .sets import Element, Progression, SemilinearSet, tag_product
from .errors import (
    SemisurjError,
    TagCollision,
    ConflictingUnion,
    InvalidAction,
    DisjointnessViolation,
    NotPartialSurjection,
    NotSurjectionPair,
    ExpansivityRequired,
    InvalidFamily,
    InvalidChain,
    NonStabilizing,
    NotDescending,
    Unsupported,
    SizeGuard,
)

__all__ = [
    "Element",
    "Progression",
    "SemilinearSet",
    "tag_product",
    "SemisurjError",
    "TagCollision",
    "ConflictingUnion",
    "InvalidAction",
    "DisjointnessViolation",
    "NotPartialSurjection",
    "NotSurjectionPair",
    "ExpansivityRequired",
    "InvalidFamily",
    "InvalidChain",
    "NonStabilizing",
    "NotDescending",
    "Unsupported",
    "SizeGuard",
]
