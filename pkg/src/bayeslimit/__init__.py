"""Bayesian quantum limits for single-parameter waveform estimation.

Computes the minimum Bayesian mean-square error of coherent-state and
single-particle waveform families, the covariant (whitening) measurement
that attains it for wide priors, and Monte-Carlo BMSEs of concrete
measurement schemes for comparison.
"""
from . import bayes, errors, geometry, measurements, signals, subspace, whitening

__version__ = "0.1.0"

__all__ = [
    "bayes", "errors", "geometry", "measurements", "signals", "subspace",
    "whitening", "__version__",
]
