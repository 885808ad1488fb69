"""Local models of glued Anosov flows: affine saddle flow, surgery gluing,
derivative cocycle, cone-field checks, Birkhoff-section combinatorics and
helicoidal sections."""

from .errors import (
    ClassificationError,
    ConfigError,
    DataError,
    ModelError,
    NeverExitsError,
    NotApplicableError,
    ParameterDomainError,
    ResolutionError,
)
from .geometry import ModelParams, Point3

__all__ = [
    "ClassificationError",
    "ConfigError",
    "DataError",
    "ModelError",
    "ModelParams",
    "NeverExitsError",
    "NotApplicableError",
    "ParameterDomainError",
    "Point3",
    "ResolutionError",
]
