"""K-fold cross-validated estimate of the penalty-weighted prediction error.

For every fold S_k the predictor is trained on the complement, a penalty
estimate is taken either from the fold itself (``PsiScope.FOLD``) or from the
complement (``PsiScope.COMPLEMENT``), and the held-out error is accumulated as

    sum_{i=0}^{2m-1} sum_{i-m<|y|<=m} psi_hat(y) #{j in S_k: Y^j=y, |f(X^j)-y|>i} / #S_k

before averaging over the K folds. The code below keeps that threshold sum
explicit; :mod:`mdr.search` uses a compiled kernel that collapses it to
``psi_hat(Y) |f(X) - Y|`` and is tested against this module.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .core import Dataset, FactorSubset, FoldPartition, make_partition
from .penalty import PenaltyEstimate, default_eps, psi_from_counts, response_counts
from .predictor import fallback_from_counts, fit


class PsiScope(str, enum.Enum):
    FOLD = "fold"
    COMPLEMENT = "complement"


@dataclass(frozen=True)
class ErrEstimate:
    value: float
    beta: FactorSubset
    K: int
    N: int
    scope: PsiScope
    eps: float


@dataclass(frozen=True)
class FoldPenalties:
    """Per-fold quantities that do not depend on the factor subset.

    ``fit[k]`` is the clipped penalty from the training complement (used to fit
    the predictor), ``evaluate[k]`` the clipped penalty of the requested scope,
    ``fallback[k]`` the prediction for cells unseen in training.
    """

    partition: FoldPartition
    fit: np.ndarray
    evaluate: np.ndarray
    fallback: np.ndarray


def fold_penalties(data: Dataset, partition: FoldPartition, eps: float,
                   scope: PsiScope = PsiScope.FOLD) -> FoldPenalties:
    scope = PsiScope(scope)
    m, n_y = data.m, 2 * data.m + 1
    total = response_counts(data.responses, m)
    psi_fit = np.empty((partition.K, n_y))
    psi_eval = np.empty((partition.K, n_y))
    fallback = np.empty(partition.K, dtype=np.int64)
    for k in range(partition.K):
        fold_counts = response_counts(data.responses[partition.block0(k)], m)
        train_counts = total - fold_counts
        psi_fit[k] = psi_from_counts(train_counts, eps)
        psi_eval[k] = psi_from_counts(fold_counts if scope is PsiScope.FOLD else train_counts, eps)
        fallback[k] = fallback_from_counts(train_counts, psi_fit[k], m)
    return FoldPenalties(partition, psi_fit, psi_eval, fallback)


def _check_args(data: Dataset, beta, K: int, eps):
    beta = FactorSubset(beta)
    beta.check(data.factor_space)
    if not 1 < K <= data.N:
        raise ValueError(f"need 1 < K <= N, got K={K}, N={data.N}")
    eps = default_eps(data.N) if eps is None else float(eps)
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    return beta, eps


def _threshold_sum(y_fold: np.ndarray, pred: np.ndarray, psi: np.ndarray, m: int, rows: int) -> float:
    acc = 0.0
    for i in range(2 * m):
        for y in range(-m, m + 1):
            if i - m < abs(y) <= m:
                hits = np.count_nonzero((y_fold == y) & (np.abs(pred - y) > i))
                acc += psi[y + m] * hits / rows
    return acc


def err_hat_K(data: Dataset, beta, K: int = 10, eps: float | None = None,
              scope: PsiScope = PsiScope.FOLD) -> ErrEstimate:
    """Cross-validated error of the per-cell predictor on ``beta``.

    ``eps`` defaults to N^(-1/4); both penalty estimates are clipped at 1/eps.
    """
    beta, eps = _check_args(data, beta, K, eps)
    scope = PsiScope(scope)
    part = make_partition(data.N, K)
    pens = fold_penalties(data, part, eps, scope)
    total = 0.0
    for k in range(K):
        fold, train = part.block0(k), part.complement0(k)
        table = fit(data, train, beta, PenaltyEstimate(pens.fit[k], data.m, train.size))
        pred = table.predict_many(data.factors[fold])
        total += _threshold_sum(data.responses[fold], pred, pens.evaluate[k], data.m, fold.size)
    return ErrEstimate(float(total / K), beta, K, data.N, scope, eps)


def err_hat_partial(data: Dataset, beta, K: int, m_N: int, eps: float | None = None,
                    scope: PsiScope = PsiScope.FOLD) -> float:
    """Prefix-column variant: only the first ``m_N`` samples of each fold are scored.

    The penalty estimate still uses the whole fold (or complement). Requires
    K | N. Returned on the same 1/K-averaged scale as :func:`err_hat_K`, so
    ``m_N = N/K`` reproduces it.
    """
    beta, eps = _check_args(data, beta, K, eps)
    if data.N % K:
        raise ValueError(f"K={K} must divide N={data.N}")
    q = data.N // K
    if not 1 <= m_N <= q:
        raise ValueError(f"need 1 <= m_N <= N/K={q}, got {m_N}")
    part = make_partition(data.N, K)
    pens = fold_penalties(data, part, eps, scope)
    total = 0.0
    for k in range(K):
        fold, train = part.block0(k), part.complement0(k)
        table = fit(data, train, beta, PenaltyEstimate(pens.fit[k], data.m, train.size))
        head = fold[:m_N]
        pred = table.predict_many(data.factors[head])
        total += _threshold_sum(data.responses[head], pred, pens.evaluate[k], data.m, m_N)
    return float(total / K)
