"""Clustering-preserving correction of error-bounded particle compression."""

from ._core import (
    DataError,
    FormatError,
    absolute_bound,
    base_compress,
    bound_violations,
    correct,
    fof_labels,
    gen_synthetic,
    linking_length,
    mcc,
    reconstruct,
    vulnerable_pairs,
)

__all__ = [
    "DataError",
    "FormatError",
    "absolute_bound",
    "base_compress",
    "bound_violations",
    "correct",
    "fof_labels",
    "gen_synthetic",
    "linking_length",
    "mcc",
    "reconstruct",
    "vulnerable_pairs",
]
