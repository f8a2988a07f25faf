"""Variance estimation, confidence intervals and Monte Carlo checks of asymptotic normality.

Two limiting variances appear:

* the full K-fold estimate, scaled by sqrt(N), has the variance of
  ``V = sum_i sum_{i-m<|y|<=m} 1{Y=y}/P(Y=y) (1{|f(X)-y|>i} - P(|f(X)-y|>i | Y=y))``;
* the prefix statistic that scores only m_N samples per fold settles to the
  variance of ``W = psi(Y) |f(X) - Y|`` instead, because the penalty estimate
  from the full fold converges faster than the prefix average.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special, stats

from .core import Dataset, FactorSubset
from .cv import ErrEstimate, PsiScope, err_hat_K, err_hat_partial
from .oracle import (JointLaw, PredictorFn, balanced_psi, err_exact_def, optimal_predictor,
                     sigma2_exact, sigma2_raw_exact)
from .penalty import PenaltyEstimate, default_eps, psi_from_counts, response_counts
from .predictor import fit
from .simgen import SIGNIFICANT, GeneratorSpec, exact_law, generate, make_rng


@dataclass(frozen=True)
class VarianceEstimate:
    sigma2_hat: float
    N: int
    method: str


@dataclass(frozen=True)
class Interval:
    lower: float
    upper: float
    level: float
    degenerate: bool = False

    def covers(self, value: float) -> bool:
        return self.lower <= value <= self.upper


@dataclass
class MCReport:
    replicates: int
    mean: float
    variance: float
    ks: float
    statistics: np.ndarray
    degenerate: bool = False
    extra: dict = field(default_factory=dict)

    def passes(self, mean_tol=0.15, var_band=(0.8, 1.2), ks_tol=0.08) -> bool:
        return (abs(self.mean) < mean_tol and var_band[0] <= self.variance <= var_band[1]
                and self.ks < ks_tol)


def std_normal_cdf(x):
    return special.ndtr(x)


def ks_distance(sample) -> float:
    """Kolmogorov-Smirnov distance between the empirical CDF and N(0, 1)."""
    x = np.sort(np.asarray(sample, dtype=float))
    n = x.size
    if n == 0:
        raise ValueError("empty sample")
    cdf = std_normal_cdf(x)
    upper = np.arange(1, n + 1) / n - cdf
    lower = cdf - np.arange(0, n) / n
    return float(max(upper.max(), lower.max()))


def summarize(statistics, degenerate: bool = False, **extra) -> MCReport:
    s = np.asarray(statistics, dtype=float)
    var = float(s.var(ddof=1)) if s.size > 1 else 0.0
    return MCReport(int(s.size), float(s.mean()), var, ks_distance(s), s, degenerate, dict(extra))


# ---------------------------------------------------------------- V statistic

def v_ingredients_exact(law: JointLaw, f: PredictorFn):
    """P(Y=y) and P(|f(X)-y| > i | Y=y) from an explicit law (0 where P(Y=y)=0)."""
    m = law.m
    py = law.y_marginal()
    dev = np.abs(f.table[:, None] - law.y_values[None, :])
    cond = np.zeros((2 * m, 2 * m + 1))
    for i in range(2 * m):
        for a in range(2 * m + 1):
            if py[a] > 0:
                cond[i, a] = law.probs[dev[:, a] > i, a].sum() / py[a]
    return py, cond


def v_ingredients_empirical(y: np.ndarray, pred: np.ndarray, m: int):
    y = np.asarray(y)
    pred = np.asarray(pred)
    counts = response_counts(y, m)
    py = counts / y.size
    cond = np.zeros((2 * m, 2 * m + 1))
    for i in range(2 * m):
        for a in range(2 * m + 1):
            if counts[a]:
                rows = y == a - m
                cond[i, a] = np.count_nonzero(np.abs(pred[rows] - (a - m)) > i) / counts[a]
    return py, cond


def v_values(y, fx, py, cond, m: int) -> np.ndarray:
    """V at each observed (f(X), Y) pair."""
    y = np.atleast_1d(np.asarray(y))
    fx = np.atleast_1d(np.asarray(fx))
    out = np.zeros(y.shape, dtype=float)
    for i in range(2 * m):
        for yv in range(-m, m + 1):
            if not i - m < abs(yv) <= m:
                continue
            a = yv + m
            rows = y == yv
            if not rows.any():
                continue
            if py[a] <= 0:
                raise ValueError(f"response {yv} observed but has zero marginal probability")
            out[rows] += ((np.abs(fx[rows] - yv) > i).astype(float) - cond[i, a]) / py[a]
    return out


def v_realization(y: int, fx: int, py, cond, m: int) -> float:
    """V for one observation with prediction ``fx`` and response ``y``."""
    return float(v_values([y], [fx], py, cond, m)[0])


def _full_fit_predictions(data: Dataset, beta: FactorSubset, eps: float) -> np.ndarray:
    rows = np.arange(data.N)
    counts = response_counts(data.responses, data.m)
    psi = PenaltyEstimate(psi_from_counts(counts, eps), data.m, data.N)
    return fit(data, rows, beta, psi).predict_many(data.factors)


def sigma2_hat(data: Dataset, beta, K: int = 10, eps: float | None = None) -> VarianceEstimate:
    """Plug-in estimate of Var(V).

    The predictor is fit once on the whole sample, marginals and conditional
    exceedance frequencies are empirical. ``K`` is accepted for symmetry with
    :func:`mdr.cv.err_hat_K`; it only has to be a valid fold count.
    """
    beta = FactorSubset(beta)
    beta.check(data.factor_space)
    if not 1 < K <= data.N:
        raise ValueError(f"need 1 < K <= N, got K={K}")
    eps = default_eps(data.N) if eps is None else eps
    pred = _full_fit_predictions(data, beta, eps)
    py, cond = v_ingredients_empirical(data.responses, pred, data.m)
    v = v_values(data.responses, pred, py, cond, data.m)
    return VarianceEstimate(float(v.var()), data.N, "plug-in variance of V, predictor fit on full sample")


def sigma2_raw_hat(data: Dataset, beta, eps: float | None = None) -> VarianceEstimate:
    """Plug-in estimate of Var(psi(Y) |f(X) - Y|) with psi the empirical balanced penalty."""
    beta = FactorSubset(beta)
    eps = default_eps(data.N) if eps is None else eps
    pred = _full_fit_predictions(data, beta, eps)
    psi = psi_from_counts(response_counts(data.responses, data.m))
    w = psi[data.responses + data.m] * np.abs(pred - data.responses)
    return VarianceEstimate(float(w.var()), data.N, "plug-in variance of psi(Y)|f(X)-Y|")


def confidence_interval(epe: ErrEstimate, var: VarianceEstimate, level: float = 0.95) -> Interval:
    """epe +- z_{(1+level)/2} sigma_hat / sqrt(N); a zero variance gives a flagged point interval."""
    if not 0 < level < 1:
        raise ValueError(f"level must lie in (0, 1), got {level}")
    if var.sigma2_hat <= 0:
        return Interval(epe.value, epe.value, level, degenerate=True)
    half = stats.norm.ppf(0.5 * (1 + level)) * math.sqrt(var.sigma2_hat / epe.N)
    return Interval(epe.value - half, epe.value + half, level)


# ---------------------------------------------------------------- oracle targets

@dataclass(frozen=True)
class OracleTarget:
    err: float
    sigma2: float
    sigma2_raw: float
    law: JointLaw
    predictor: PredictorFn


def oracle_target(spec: GeneratorSpec, beta) -> OracleTarget:
    """Exact error, Var(V) and Var(W) of the optimal rule on ``beta``.

    Factors outside the significant set are independent of everything else,
    so the law on ``beta`` reduces to the law on its significant members.
    """
    beta = FactorSubset(beta)
    alpha = SIGNIFICANT[spec.example]
    law = exact_law(spec)
    keep = [alpha.index(i) for i in beta.indices if i in alpha]
    sub = law.marginalize(keep)
    psi = balanced_psi(sub)
    f = optimal_predictor(sub, None, psi)
    return OracleTarget(err_exact_def(sub, f, psi), sigma2_exact(sub, f), sigma2_raw_exact(sub, f, psi),
                        sub, f)


# ---------------------------------------------------------------- Monte Carlo

def default_m_N(N: int, K: int) -> int:
    return max(1, math.isqrt(N // K))


@dataclass
class Replicate:
    epe: float
    sigma2: float
    partial: float
    sigma2_raw: float


def run_replicates(spec: GeneratorSpec, beta, K: int, eps, scope, N: int, replicates: int,
                   m_N: int | None = None) -> list[Replicate]:
    if N % K:
        raise ValueError(f"K={K} must divide N={N}")
    m_N = default_m_N(N, K) if m_N is None else m_N
    gen = spec.with_N(N)
    out = []
    for rep in range(replicates):
        data = generate(gen, stream=rep)
        e = err_hat_K(data, beta, K, eps, scope).value
        s2 = sigma2_hat(data, beta, K, eps).sigma2_hat
        part = err_hat_partial(data, beta, K, m_N, eps, PsiScope.FOLD)
        s2r = sigma2_raw_hat(data, beta, eps).sigma2_hat
        out.append(Replicate(e, s2, part, s2r))
    return out


def mc_normality(spec: GeneratorSpec, beta, K: int = 10, eps: float | None = None,
                 scope: PsiScope = PsiScope.COMPLEMENT, N: int = 2000, replicates: int = 500,
                 seed: int | None = None, prefix: bool = False, m_N: int | None = None,
                 reps: list[Replicate] | None = None) -> MCReport:
    """Studentized errors across simulated replicates.

    Default: sqrt(N) (err_hat_K - Err) / sigma_hat with sigma_hat^2 the plug-in
    Var(V). With ``prefix=True``: sqrt(K m_N) (prefix estimate - Err) / sigma_raw,
    m_N = floor(sqrt(N/K)) unless given. Replicate i uses stream i of ``seed``
    (``spec.seed`` when omitted). Precomputed ``reps`` may be passed to share
    one simulation between both statistics.
    """
    if replicates < 1:
        raise ValueError("replicates must be positive")
    if seed is not None:
        spec = GeneratorSpec(spec.example, spec.N, seed, spec.n, spec.gamma)
    m_N = default_m_N(N, K) if m_N is None else m_N
    target = oracle_target(spec, beta)
    if reps is None:
        reps = run_replicates(spec, beta, K, eps, scope, N, replicates, m_N)
    values = np.array([rp.partial if prefix else rp.epe for rp in reps])
    s2 = np.array([rp.sigma2_raw if prefix else rp.sigma2 for rp in reps])
    scale = math.sqrt(K * m_N) if prefix else math.sqrt(N)
    degenerate = bool(np.all(s2 <= 0))
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(s2 > 0, scale * (values - target.err) / np.sqrt(s2), 0.0)
    report = summarize(z, degenerate, oracle_err=target.err,
                       oracle_sigma2=target.sigma2_raw if prefix else target.sigma2,
                       estimates=values, sigma2_hat=s2, N=N, K=K, m_N=m_N if prefix else None,
                       statistic="prefix" if prefix else "full")
    return report


# ---------------------------------------------------------------- exchangeable arrays

EXCHANGEABLE_CONSTRUCTIONS = ("iid_normal", "shared_effect", "urn")


def _exchangeable_row(construction: str, k: int, rng: np.random.Generator, effect_sd: float):
    if construction == "iid_normal":
        return rng.standard_normal(k), 1.0
    if construction == "shared_effect":
        # X_i = A + (E_i - 1), E_i ~ Exp(1): E X1^2 - E X1 X2 = Var(E) = 1
        a = effect_sd * rng.standard_normal()
        return a + rng.standard_exponential(k) - 1.0, 1.0
    if construction == "urn":
        # a random permutation of fixed centered unit-variance values (drawing without
        # replacement): E X1^2 - E X1 X2 = 1 + 1/(k - 1)
        urn = np.linspace(-1.0, 1.0, k)
        urn = (urn - urn.mean()) / urn.std()
        return rng.permutation(urn), 1.0 + 1.0 / (k - 1)
    raise ValueError(f"unknown construction {construction!r}; expected one of {EXCHANGEABLE_CONSTRUCTIONS}")


def exchangeable_harness(construction: str = "iid_normal", k: int = 10_000, alpha: float = 0.0,
                   replicates: int = 500, seed: int = 0, effect_sd: float = 2.0) -> MCReport:
    """Partial sums (1/sqrt(m)) sum_{i<=m} (X_i - mean of all k) of exchangeable rows.

    ``alpha = 0`` uses m = floor(sqrt(k)); otherwise m = round(alpha k). The
    statistics are divided by sqrt((1 - m/k) sigma^2), so the report should look
    standard normal; ``extra['variance_ratio']`` is the raw empirical variance
    over (1 - m/k) sigma^2.
    """
    if not 0 <= alpha < 1:
        raise ValueError("alpha must lie in [0, 1)")
    if replicates < 1 or k < 2:
        raise ValueError("need replicates >= 1 and k >= 2")
    m = math.isqrt(k) if alpha == 0 else int(round(alpha * k))
    m = min(max(m, 1), k - 1)
    raw = np.empty(replicates)
    sigma2 = 1.0
    for rep in range(replicates):
        x, sigma2 = _exchangeable_row(construction, k, make_rng(seed, rep), effect_sd)
        raw[rep] = (x[:m] - x.mean()).sum() / math.sqrt(m)
    target = (1 - m / k) * sigma2
    report = summarize(raw / math.sqrt(target), construction=construction, k=k, m=m,
                       target_variance=target)
    report.extra["variance_ratio"] = float(raw.var(ddof=1) / target)
    return report


lemma1_harness = exchangeable_harness


# ---------------------------------------------------------------- traces

TRACE_COLUMNS = ("N", "epe", "oracle_err", "ci_lower", "ci_upper", "sigma2_hat")


def stabilization_trace(spec: GeneratorSpec, beta, K: int = 10, eps_rule=default_eps,
                        scope: PsiScope = PsiScope.COMPLEMENT, N_grid=(100, 200, 500, 1000, 2000, 5000),
                        seed: int | None = None, level: float = 0.95) -> list[tuple]:
    """One simulated dataset per grid point (stream = grid position) with estimate and CI."""
    grid = [int(n) for n in N_grid]
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("N grid must be strictly increasing")
    if seed is not None:
        spec = GeneratorSpec(spec.example, spec.N, seed, spec.n, spec.gamma)
    target = oracle_target(spec, beta)
    rows = []
    for pos, N in enumerate(grid):
        data = generate(spec.with_N(N), stream=pos)
        eps = eps_rule(N) if callable(eps_rule) else float(eps_rule)
        e = err_hat_K(data, beta, K, eps, scope)
        v = sigma2_hat(data, beta, K, eps)
        ci = confidence_interval(e, v, level)
        rows.append((N, float(e.value), float(target.err), float(ci.lower), float(ci.upper),
                     float(v.sigma2_hat)))
    return rows
