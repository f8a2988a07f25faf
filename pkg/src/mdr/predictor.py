"""Empirical per-cell predictor on a factor subset.

Fitting replaces the probabilities of the weighted L1-Bayes rule by training
counts: a cell predicts ``argmin_z sum_y psi(y) |y - z| count(cell, y)``. Cells
never seen in training fall back to the same rule applied to the training
marginal counts. Ties go to the smallest z.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Dataset, FactorSubset, decode_cell, encode_cells
from .oracle import argmin_smallest, cost_table
from .penalty import PenaltyEstimate


@dataclass(frozen=True)
class PredictionTable:
    beta: FactorSubset
    lookup: np.ndarray  # dense cell code -> y, fallback already filled in
    seen: np.ndarray
    fallback: int
    train_size: int
    base: int
    m: int

    @property
    def cells(self) -> dict[tuple[int, ...], int]:
        """Predictions for the cells observed in training."""
        return {decode_cell(c, self.base, self.beta.r): int(self.lookup[c])
                for c in np.flatnonzero(self.seen)}

    def predict_many(self, factors: np.ndarray) -> np.ndarray:
        X = np.asarray(factors)
        return self.lookup[encode_cells(X[:, self.beta.columns], self.base)]


def cell_response_counts(data: Dataset, rows: np.ndarray, beta: FactorSubset) -> np.ndarray:
    """counts[cell, y + m] over the given rows."""
    base, n_y = data.s + 1, 2 * data.m + 1
    codes = encode_cells(data.factors[rows][:, beta.columns], base)
    flat = codes * n_y + (data.responses[rows] + data.m)
    return np.bincount(flat, minlength=base ** beta.r * n_y).reshape(base ** beta.r, n_y)


def fallback_from_counts(marginal_counts: np.ndarray, psi_values: np.ndarray, m: int) -> int:
    return int(argmin_smallest(cost_table(marginal_counts[None, :], psi_values, m))[0]) - m


def fit(data: Dataset, train, beta: FactorSubset, psi: PenaltyEstimate) -> PredictionTable:
    """Fit the per-cell rule on the 0-based ``train`` rows."""
    rows = np.asarray(train, dtype=np.intp)
    if rows.size == 0:
        raise ValueError("training set must be nonempty")
    beta = FactorSubset(beta)
    beta.check(data.factor_space)
    m = data.m
    counts = cell_response_counts(data, rows, beta)
    seen = counts.sum(axis=1) > 0
    lookup = argmin_smallest(cost_table(counts, psi.values, m)) - m
    fallback = fallback_from_counts(counts.sum(axis=0), psi.values, m)
    lookup[~seen] = fallback
    lookup.flags.writeable = False
    seen.flags.writeable = False
    return PredictionTable(beta, lookup, seen, fallback, int(rows.size), data.s + 1, m)


def predict(table: PredictionTable, x) -> int:
    """Prediction for one full factor vector ``x`` (length n, codes 0..s)."""
    x = np.asarray(x)
    code = encode_cells(x[table.beta.columns][None, :], table.base)[0]
    return int(table.lookup[code])
