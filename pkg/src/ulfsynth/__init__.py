"""Toolkit for ultra-low-field infant MRI segmentation pipelines.

Covers the non-training machinery around a domain-randomization segmentation
model: synthetic image generation from label maps, label-scheme
harmonization, segmentation metrics with challenge-style normalized ranking,
majority-vote ensembling, and human-in-the-loop annotation QC (library, CLI,
and HTTP service).
"""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    ContractError,
    DimensionalityError,
    EmptyStructureError,
    FormatError,
    UlfsynthError,
    UnsupportedTypeError,
)
from .volume import DisplacementField, Grid, LabelMap, Volume

__all__ = [
    "ConfigError",
    "ContractError",
    "DimensionalityError",
    "DisplacementField",
    "EmptyStructureError",
    "FormatError",
    "Grid",
    "LabelMap",
    "UlfsynthError",
    "UnsupportedTypeError",
    "Volume",
    "__version__",
]
