"""Balanced penalty psi(y) = 1/P(Y=y) and its estimate from a block of samples.

The estimate on an index set S is #S / #{j in S: Y^j = y}, or 0 when y never
occurs in S (the 0/0 := 0 convention). It depends on S only through the
response counts, so it is symmetric in the order of the indices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Dataset


@dataclass(frozen=True)
class PenaltyEstimate:
    """Estimated penalty per response value, stored at position y + m."""

    values: np.ndarray
    m: int
    source_fold_size: int

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def __getitem__(self, y: int) -> float:
        return float(self.values[int(y) + self.m])

    def as_dict(self) -> dict[int, float]:
        return {y: float(self.values[y + self.m]) for y in range(-self.m, self.m + 1)}


def default_eps(N: int) -> float:
    """Regularization level N^(-1/4)."""
    return float(N) ** -0.25


def response_counts(responses: np.ndarray, m: int) -> np.ndarray:
    return np.bincount(np.asarray(responses, dtype=np.int64) + m, minlength=2 * m + 1)


def _fold(data: Dataset, fold) -> np.ndarray:
    idx = np.asarray(fold, dtype=np.intp)
    if idx.size == 0:
        raise ValueError("fold must be nonempty")
    if idx.min() < 0 or idx.max() >= data.N:
        raise IndexError(f"fold indices must lie in 0..{data.N - 1}")
    return idx


def empirical_marginal(data: Dataset, fold) -> dict[int, float]:
    """Relative frequency of every response value over ``fold`` (0-based indices)."""
    idx = _fold(data, fold)
    counts = response_counts(data.responses[idx], data.m)
    return {y: counts[y + data.m] / idx.size for y in range(-data.m, data.m + 1)}


def psi_from_counts(counts: np.ndarray, eps: float | None = None) -> np.ndarray:
    """#S / count(y) with 0 for absent y; optionally clipped at 1/eps."""
    counts = np.asarray(counts)
    size = counts.sum()
    psi = np.zeros(counts.shape, dtype=float)
    present = counts > 0
    psi[present] = size / counts[present]
    if eps is not None:
        if not eps > 0:
            raise ValueError(f"eps must be positive, got {eps}")
        psi = np.minimum(psi, 1.0 / eps)
    return psi


def psi_hat(data: Dataset, fold) -> PenaltyEstimate:
    idx = _fold(data, fold)
    counts = response_counts(data.responses[idx], data.m)
    return PenaltyEstimate(psi_from_counts(counts), data.m, int(idx.size))


def psi_hat_clipped(data: Dataset, fold, eps: float) -> PenaltyEstimate:
    """:func:`psi_hat` capped at ``1/eps``; zeros stay zero."""
    idx = _fold(data, fold)
    counts = response_counts(data.responses[idx], data.m)
    return PenaltyEstimate(psi_from_counts(counts, eps), data.m, int(idx.size))
