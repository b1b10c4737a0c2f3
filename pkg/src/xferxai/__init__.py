"""Sparse linear surrogate explainers with affine transfer across domains."""

from .algebra import (
    AffineTransfer,
    HomogeneousTransform,
    LinearExplainer,
    Mapping,
    MappingPartition,
    Scaling,
    Translation,
    apply_affine,
    compose,
    map_factors,
    map_values,
    recover_bias,
    to_homogeneous,
)
from .schema import Attribute, AttributeSchema, simple_schema

__version__ = "0.1.0"

__all__ = [
    "AffineTransfer",
    "Attribute",
    "AttributeSchema",
    "HomogeneousTransform",
    "LinearExplainer",
    "Mapping",
    "MappingPartition",
    "Scaling",
    "Translation",
    "apply_affine",
    "compose",
    "map_factors",
    "map_values",
    "recover_bias",
    "simple_schema",
    "to_homogeneous",
]
