"""Exhaustive ranking of all r-subsets of factors by cross-validated error."""

from __future__ import annotations

import itertools
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from math import comb

import numpy as np

from .core import Dataset, FactorSubset, make_partition
from .cv import PsiScope, fold_penalties
from .penalty import default_eps
from .simgen import GeneratorSpec, generate
from ._kernel import epe_chunk


@dataclass(frozen=True)
class RankedResult:
    beta: FactorSubset
    epe: float


@dataclass(frozen=True)
class SearchReport:
    top: list[RankedResult]
    total_evaluated: int
    config: dict = field(default_factory=dict)

    @property
    def best(self) -> RankedResult:
        return self.top[0]


def enumerate_subsets(n: int, r: int) -> np.ndarray:
    """All r-subsets of 0..n-1 in lexicographic order, one per row."""
    total = comb(n, r)
    out = np.fromiter(itertools.chain.from_iterable(itertools.combinations(range(n), r)),
                      dtype=np.int64, count=total * r)
    return out.reshape(total, r)


def default_workers() -> int:
    return os.cpu_count() or 1


def evaluate_subsets(data: Dataset, subsets: np.ndarray, K: int = 10, eps: float | None = None,
                     scope: PsiScope = PsiScope.FOLD, workers: int | None = None) -> np.ndarray:
    """Cross-validated error of every row of ``subsets`` (0-based columns).

    Work is split into contiguous chunks evaluated on a thread pool; each value
    is computed in isolation, so the result is identical for any ``workers``.
    """
    subsets = np.ascontiguousarray(subsets, dtype=np.int64)
    if subsets.ndim != 2 or subsets.shape[0] == 0:
        raise ValueError("need a nonempty 2-D array of subsets")
    if not 1 < K <= data.N:
        raise ValueError(f"need 1 < K <= N, got K={K}, N={data.N}")
    eps = default_eps(data.N) if eps is None else float(eps)
    part = make_partition(data.N, K)
    pens = fold_penalties(data, part, eps, scope)
    XT = np.ascontiguousarray(data.factors.T.astype(np.int64))
    yi = data.responses + data.m
    args = (XT, yi, part.fold_of(), part.sizes().astype(np.float64), pens.fit, pens.evaluate,
            pens.fallback + data.m)
    out = np.empty(subsets.shape[0])
    workers = max(1, int(workers or default_workers()))
    n_chunks = min(workers, subsets.shape[0])
    bounds = np.linspace(0, subsets.shape[0], n_chunks + 1).astype(np.int64)

    def run(i):
        lo, hi = bounds[i], bounds[i + 1]
        epe_chunk(*args, subsets[lo:hi], data.s + 1, 2 * data.m + 1, out[lo:hi])

    if n_chunks == 1:
        run(0)
    else:
        with ThreadPoolExecutor(max_workers=n_chunks) as pool:
            list(pool.map(run, range(n_chunks)))
    return out


def rank(subsets: np.ndarray, values: np.ndarray, L: int) -> list[RankedResult]:
    """L best by (epe, lexicographic subset); ``subsets`` is already lexicographic."""
    order = np.lexsort((np.arange(values.size), values))[:L]
    return [RankedResult(FactorSubset(subsets[i] + 1), float(values[i])) for i in order]


def search_all(data: Dataset, r: int, K: int = 10, eps: float | None = None,
               scope: PsiScope = PsiScope.FOLD, L: int = 10, workers: int | None = None,
               seed: int | None = None) -> SearchReport:
    """Evaluate every r-subset of the n factors and keep the L lowest errors."""
    if not 1 <= r <= data.n:
        raise ValueError(f"need 1 <= r <= n={data.n}, got r={r}")
    if L < 1:
        raise ValueError(f"report size L must be positive, got {L}")
    eps = default_eps(data.N) if eps is None else float(eps)
    subsets = enumerate_subsets(data.n, r)
    values = evaluate_subsets(data, subsets, K, eps, scope, workers)
    config = {"r": r, "K": K, "eps": eps, "scope": PsiScope(scope).value, "L": L, "seed": seed,
              "N": data.N, "n": data.n}
    return SearchReport(rank(subsets, values, L), subsets.shape[0], config)


@dataclass(frozen=True)
class IdentificationRun:
    rate: float
    hits: int
    reps: int
    target_epe: np.ndarray  # error of the significant subset per replicate
    best_other_epe: np.ndarray


def identification_rate(spec: GeneratorSpec, r: int | None = None, reps: int = 100, K: int = 10,
                        eps: float | None = None, scope: PsiScope = PsiScope.FOLD,
                        workers: int | None = None, progress=None) -> IdentificationRun:
    """Fraction of replicates whose significant subset is the unique minimizer.

    Replicate ``i`` uses stream ``i`` of ``spec.seed`` (see :mod:`mdr.simgen`).
    """
    if reps < 1:
        raise ValueError("reps must be positive")
    target = spec.significant
    r = target.r if r is None else r
    subsets = enumerate_subsets(spec.n, r)
    t_idx = None
    if r == target.r:
        hit_rows = np.flatnonzero((subsets == target.columns).all(axis=1))
        t_idx = int(hit_rows[0])
    hits = 0
    t_epe = np.full(reps, np.nan)
    other = np.full(reps, np.nan)
    for rep in range(reps):
        data = generate(spec, stream=rep)
        values = evaluate_subsets(data, subsets, K, eps, scope, workers)
        if t_idx is not None:
            t_epe[rep] = values[t_idx]
            rest = np.delete(values, t_idx)
            other[rep] = rest.min() if rest.size else np.inf
            hits += bool(t_epe[rep] < other[rep])
        if progress is not None:
            progress(rep, hits)
    return IdentificationRun(hits / reps, hits, reps, t_epe, other)
