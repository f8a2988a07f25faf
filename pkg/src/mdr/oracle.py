"""Exact computations on explicitly enumerated discrete laws.

A :class:`JointLaw` is a dense table ``probs[cell, y + m]`` over the cells of a
factor subset (mixed-radix codes, see :func:`mdr.core.encode_cells`) and the
response values. Everything here is brute-force enumeration; these routines are
the ground truth the sample-based estimators are checked against.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .core import FactorSubset, PenaltyVector, decode_cell, encode_cells

PROB_TOL = 1e-12


@dataclass(frozen=True)
class JointLaw:
    """Joint law of (X_beta, Y) with ``r`` factors coded 0..s and Y in {-m..m}."""

    probs: np.ndarray
    r: int
    s: int
    m: int

    def __post_init__(self):
        p = np.array(self.probs, dtype=float)
        shape = ((self.s + 1) ** self.r, 2 * self.m + 1)
        if p.shape != shape:
            raise ValueError(f"law table must have shape {shape}, got {p.shape}")
        if np.any(p < 0):
            raise ValueError("negative probability in law")
        if abs(p.sum() - 1.0) > PROB_TOL:
            raise ValueError(f"law probabilities sum to {p.sum()!r}, not 1")
        p.flags.writeable = False
        object.__setattr__(self, "probs", p)

    @classmethod
    def from_support(cls, support: Iterable[tuple[tuple[int, ...], int, float]],
                     r: int, s: int, m: int) -> "JointLaw":
        """Build from ``(cell_tuple, y, probability)`` triples; repeats accumulate."""
        p = np.zeros(((s + 1) ** r, 2 * m + 1))
        for cell, y, prob in support:
            cell = tuple(cell)
            if len(cell) != r or any(c < 0 or c > s for c in cell):
                raise ValueError(f"cell {cell} outside {{0..{s}}}^{r}")
            if not -m <= y <= m:
                raise ValueError(f"response {y} outside [-{m}, {m}]")
            p[encode_cells(np.array(cell), s + 1)[0], y + m] += prob
        return cls(p, r, s, m)

    @property
    def n_cells(self) -> int:
        return self.probs.shape[0]

    @property
    def y_values(self) -> np.ndarray:
        return np.arange(-self.m, self.m + 1)

    def y_marginal(self) -> np.ndarray:
        return self.probs.sum(axis=0)

    def cell_marginal(self) -> np.ndarray:
        return self.probs.sum(axis=1)

    def cells(self) -> list[tuple[int, ...]]:
        return [decode_cell(c, self.s + 1, self.r) for c in range(self.n_cells)]

    def marginalize(self, keep: Iterable[int]) -> "JointLaw":
        """Law of (X_keep, Y); ``keep`` are 0-based positions within this law's cell."""
        keep = list(keep)
        base = self.s + 1
        full = np.array(self.cells(), dtype=np.int64).reshape(self.n_cells, self.r)
        codes = encode_cells(full[:, keep], base) if keep else np.zeros(self.n_cells, np.int64)
        out = np.zeros((base ** len(keep), 2 * self.m + 1))
        np.add.at(out, codes, self.probs)
        return JointLaw(out, len(keep), self.s, self.m)


@dataclass(frozen=True)
class PredictorFn:
    """Total map cell code -> predicted y (an integer in {-m..m})."""

    table: np.ndarray
    m: int

    def __post_init__(self):
        t = np.array(self.table, dtype=np.int64)
        if t.ndim != 1:
            raise ValueError("predictor table must be one-dimensional")
        if np.any(np.abs(t) > self.m):
            raise ValueError(f"predictions must lie in [-{self.m}, {self.m}]")
        t.flags.writeable = False
        object.__setattr__(self, "table", t)

    @classmethod
    def constant(cls, z: int, n_cells: int, m: int) -> "PredictorFn":
        return cls(np.full(n_cells, z), m)


def _check(law: JointLaw, f: PredictorFn | None = None, psi: PenaltyVector | None = None):
    if f is not None and (f.m != law.m or f.table.shape[0] != law.n_cells):
        raise ValueError("predictor and law live on different spaces")
    if psi is not None and psi.m != law.m:
        raise ValueError("penalty and law have different response spaces")


def err_exact_def(law: JointLaw, f: PredictorFn, psi: PenaltyVector) -> float:
    """Sum over (y, z) of |y - z| psi(y) P(Y = y, f(X) = z)."""
    _check(law, f, psi)
    m = law.m
    ys = law.y_values
    # P(Y=y, f(X)=z): push each cell's mass onto its predicted z
    joint = np.zeros((2 * m + 1, 2 * m + 1))
    for c in range(law.n_cells):
        joint[:, f.table[c] + m] += law.probs[c]
    total = 0.0
    for a, y in enumerate(ys):
        for b, z in enumerate(ys):
            total += abs(y - z) * psi.values[a] * joint[a, b]
    return total


def err_exact_telescoped(law: JointLaw, f: PredictorFn, psi: PenaltyVector) -> float:
    """The same error written as a sum over thresholds i = 0..2m-1 and i-m < |y| <= m."""
    _check(law, f, psi)
    m = law.m
    dev = np.abs(f.table[:, None] - law.y_values[None, :])
    total = 0.0
    for i in range(2 * m):
        for y in law.y_values:
            if i - m < abs(y) <= m:
                a = y + m
                total += psi.values[a] * law.probs[dev[:, a] > i, a].sum()
    return total


def cost_table(weighted_counts: np.ndarray, psi_values: np.ndarray, m: int) -> np.ndarray:
    """cost[c, z] = sum_y psi(y) |y - z| w[c, y], accumulated over y in ascending order.

    The fixed accumulation order matters: the compiled search kernel repeats it
    operation for operation so that argmin ties resolve identically.
    """
    w = np.asarray(weighted_counts, dtype=float)
    n_y = 2 * m + 1
    cost = np.zeros((w.shape[0], n_y))
    for z in range(n_y):
        acc = np.zeros(w.shape[0])
        for a in range(n_y):
            acc = acc + psi_values[a] * abs(a - z) * w[:, a]
        cost[:, z] = acc
    return cost


def argmin_smallest(cost: np.ndarray) -> np.ndarray:
    """Row-wise argmin with ties going to the first (smallest z) column."""
    return np.argmin(cost, axis=1)


def optimal_predictor(law: JointLaw, beta, psi: PenaltyVector) -> PredictorFn:
    """psi-weighted L1-Bayes rule: per cell, argmin_z sum_y |y - z| psi(y) P(Y=y, X_beta=cell).

    ``beta`` is a :class:`FactorSubset` of 1-based positions within the law's
    cells (the law is marginalized onto them first) or ``None`` for all of them.
    Ties go to the smallest z; zero-mass cells therefore predict -m.
    """
    _check(law, psi=psi)
    if beta is None:
        sub = law
    else:
        cols = list(FactorSubset(beta).columns)
        if cols[-1] >= law.r:
            raise ValueError(f"subset {tuple(beta)} exceeds the law's {law.r} coordinates")
        sub = law.marginalize(cols)
    z_idx = argmin_smallest(cost_table(sub.probs, psi.values, sub.m))
    return PredictorFn(z_idx - sub.m, sub.m)


def balanced_psi(law: JointLaw) -> PenaltyVector:
    """psi(y) = 1 / P(Y = y), with 0 where P(Y = y) = 0."""
    py = law.y_marginal()
    vals = np.divide(1.0, py, out=np.zeros_like(py), where=py > 0)
    return PenaltyVector(vals, law.m)


def _v_outcomes(law: JointLaw, f: PredictorFn) -> np.ndarray:
    """V evaluated at every (cell, y) outcome; rows with P(Y=y)=0 left at 0."""
    m = law.m
    py = law.y_marginal()
    dev = np.abs(f.table[:, None] - law.y_values[None, :])
    v = np.zeros_like(law.probs)
    for i in range(2 * m):
        for y in law.y_values:
            if not i - m < abs(y) <= m:
                continue
            a = y + m
            if py[a] == 0:
                continue
            cond = law.probs[dev[:, a] > i, a].sum() / py[a]
            v[:, a] += ((dev[:, a] > i).astype(float) - cond) / py[a]
    return v


def sigma2_exact(law: JointLaw, f: PredictorFn) -> float:
    """Variance of the balanced-penalty V statistic, by enumerating all outcomes.

    V = sum_i sum_{i-m<|y|<=m} 1{Y=y}/P(Y=y) (1{|f(X)-y|>i} - P(|f(X)-y|>i | Y=y)).
    Response values with zero probability carry no mass and are skipped.
    """
    _check(law, f)
    v = _v_outcomes(law, f)
    mean = float((law.probs * v).sum())
    return max(float((law.probs * v * v).sum()) - mean * mean, 0.0)


def sigma2_raw_exact(law: JointLaw, f: PredictorFn, psi: PenaltyVector) -> float:
    """Variance of W = sum_i sum_y psi(y) 1{Y=y, |f(X)-y|>i} = psi(Y) |f(X) - Y|.

    This is the limiting variance of the prefix-column statistic, where the
    penalty estimate settles faster than the prefix average.
    """
    _check(law, f, psi)
    m = law.m
    dev = np.abs(f.table[:, None] - law.y_values[None, :])
    w = np.zeros_like(law.probs)
    for i in range(2 * m):
        for y in law.y_values:
            if i - m < abs(y) <= m:
                a = y + m
                w[:, a] += psi.values[a] * (dev[:, a] > i)
    mean = float((law.probs * w).sum())
    return max(float((law.probs * w * w).sum()) - mean * mean, 0.0)
