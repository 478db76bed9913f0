"""Fixed-point fast-rotation SVD: angle estimators, shift-add rotation datapath, sweeps."""

from .angles import BoundaryMode, DirectVariant, FastRotation, RotationPair
from .fixedpoint import FixedFormat, FixedMatrix, FixedWord, OverflowLog
from .rotate import ScaleConfig
from .sweep import AlgorithmVariant, Arithmetic, SvdConfig, SvdResult, decompose, decompose2x2, schedule

__all__ = [
    "AlgorithmVariant",
    "Arithmetic",
    "BoundaryMode",
    "DirectVariant",
    "FastRotation",
    "FixedFormat",
    "FixedMatrix",
    "FixedWord",
    "OverflowLog",
    "RotationPair",
    "ScaleConfig",
    "SvdConfig",
    "SvdResult",
    "decompose",
    "decompose2x2",
    "schedule",
]
