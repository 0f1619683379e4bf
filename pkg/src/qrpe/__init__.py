"""Quantum reservoir parameter estimation.

Exact simulation of pair-wise coupled reservoir networks, linear readout
training, unbiased snapshot estimators for linear and quadratic functions of
unknown states, variance bounds and sample-complexity planning.
"""

__version__ = "0.1.0"

from qrpe.reservoir import ReservoirParams, PairDynamics, pair_effects
from qrpe.training import TrainingData, WeightVector, weights_dense, weights_factored
from qrpe.sampling import SnapshotSet, exact_distribution, sample_snapshots

__all__ = [
    "ReservoirParams",
    "PairDynamics",
    "pair_effects",
    "TrainingData",
    "WeightVector",
    "weights_dense",
    "weights_factored",
    "SnapshotSet",
    "exact_distribution",
    "sample_snapshots",
]
