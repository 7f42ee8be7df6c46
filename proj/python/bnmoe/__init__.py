"""Bayesian-network-gated mixture of experts.

The heavy lifting lives in the compiled extension; this package re-exports
its public names. Matrices are C-contiguous float64 numpy arrays.
"""

from ._core import (
    ClusterModel,
    GatedEnsemble,
    count_dags,
    dickey_fuller,
    kmeans,
    metrics,
    synth,
    train,
    xmeans,
)

__all__ = [
    "ClusterModel",
    "GatedEnsemble",
    "count_dags",
    "dickey_fuller",
    "kmeans",
    "metrics",
    "synth",
    "train",
    "xmeans",
]
