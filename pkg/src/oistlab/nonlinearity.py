"""Elementwise shrinkage nonlinearity used by the online update.

The update applies eta(x) = x - phi(x)/p to every coordinate, where
phi is the shrinkage force derived from the sparsity penalty:

    phi(x) = 0                  (no thresholding, plain Oja)
    phi(x) = beta * sign(x)     (iterative soft thresholding)

We fix sign(0) = 0, so eta always maps the origin to itself.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

Threshold = "SoftThreshold | None"


@dataclass(frozen=True)
class SoftThreshold:
    """Soft-thresholding shrinkage with strength beta >= 0."""

    beta: float

    def __post_init__(self):
        if self.beta < 0:
            raise ValueError(f"soft threshold beta must be >= 0, got {self.beta}")


def phi_eval(x, threshold):
    """Shrinkage force phi at x (scalar or array); zero when thresholding is off."""
    if threshold is None:
        return np.zeros_like(np.asarray(x, dtype=float))
    return threshold.beta * np.sign(x)


def eta_map(x_vec, threshold, p: int):
    """Elementwise shrinkage map eta(x) = x - phi(x)/p."""
    x_vec = np.asarray(x_vec, dtype=float)
    if threshold is None:
        return x_vec
    return x_vec - phi_eval(x_vec, threshold) / p


def beta_of(threshold) -> float:
    """Shrinkage strength as a plain float (0 when thresholding is off)."""
    return 0.0 if threshold is None else threshold.beta
