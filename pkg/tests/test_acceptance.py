"""Acceptance suite: one test per criterion, each recording a PASS/FAIL line.

All randomness uses the fixed seed below, chosen before any of these runs.
The long identification runs are marked slow (about 20 minutes on one core).
"""

import itertools
import time

import numpy as np
import pytest

from mdr.cli import main as cli_main
from mdr.clt import (confidence_interval, exchangeable_harness, EXCHANGEABLE_CONSTRUCTIONS, mc_normality,
                     oracle_target, run_replicates, sigma2_hat, VarianceEstimate)
from mdr.core import validate_dataset
from mdr.cv import ErrEstimate, PsiScope, err_hat_K
from mdr.oracle import (PredictorFn, balanced_psi, err_exact_def, err_exact_telescoped, optimal_predictor,
                        sigma2_exact)
from mdr.search import identification_rate
from mdr.simgen import GeneratorSpec, generate, sample_law

from _brute import brute_err
from _laws import handcrafted_laws, random_law, random_params, random_predictor, random_psi

SEED = 2024


@pytest.fixture(scope="module")
def ex1_identification():
    return identification_rate(GeneratorSpec("ex1", 500, SEED), reps=100)


@pytest.fixture(scope="module")
def ex1_replicates():
    spec = GeneratorSpec("ex1", 2000, SEED)
    return spec, run_replicates(spec, spec.significant, 10, None, PsiScope.COMPLEMENT, 2000, 500)


def test_formula_identity(criterion):
    rng = np.random.default_rng(SEED)
    started = time.perf_counter()
    worst = 0.0
    for _ in range(1000):
        law = random_law(rng, *random_params(rng))
        f, psi = random_predictor(rng, law), random_psi(rng, law.m)
        worst = max(worst, abs(err_exact_def(law, f, psi) - err_exact_telescoped(law, f, psi)))
    elapsed = time.perf_counter() - started
    ok = worst <= 1e-12 and elapsed < 10
    assert criterion(1, ok, f"max |def - telescoped| = {worst:.1e} over 1000 laws in {elapsed:.1f}s")


def test_optimality_oracle(criterion):
    rng = np.random.default_rng(SEED)
    started = time.perf_counter()
    checked, worst_gap = 0, -np.inf
    while checked < 100:
        m, s, r = random_params(rng)
        n_cells, n_y = (s + 1) ** r, 2 * m + 1
        if n_cells * n_y > 200 or n_y ** n_cells > 20_000:
            continue
        law, psi = random_law(rng, m, s, r), random_psi(rng, m)
        best = err_exact_def(law, optimal_predictor(law, None, psi), psi)
        brute = min(err_exact_def(law, PredictorFn(np.array(t), m), psi)
                    for t in itertools.product(range(-m, m + 1), repeat=n_cells))
        worst_gap = max(worst_gap, best - brute)
        checked += 1
    elapsed = time.perf_counter() - started
    ok = worst_gap <= 1e-12 and elapsed < 60
    assert criterion(2, ok, f"optimal - enumerated minimum <= {worst_gap:.1e} on 100 instances in {elapsed:.1f}s")


def test_hand_check_small_dataset(criterion):
    data = validate_dataset([[0], [1], [0], [1]], [1, -1, 1, 1], m=1, s=1)
    got = err_hat_K(data, [1], K=2, eps=0.01).value
    by_hand = (2 * 2 / 2 + 1 * 2 / 2) / 2  # see tests/test_cv.py for the fold-by-fold working
    brute = brute_err([[0], [1], [0], [1]], [1, -1, 1, 1], [1], 2, 0.01, 1)
    ok = got == by_hand == brute
    assert criterion(3, ok, f"estimate {got} vs hand {by_hand} vs brute force {brute}")


@pytest.mark.slow
def test_ex1_identification(criterion, ex1_identification):
    run = ex1_identification
    assert criterion(4, run.hits >= 95, f"ex1 N=500: (2,3,5) unique argmin in {run.hits}/100")


@pytest.mark.slow
@pytest.mark.parametrize("example,N,needed", [("ex2", 500, 92), ("ex3", 500, 60), ("ex3", 1000, 85)])
def test_identification_rates(criterion, example, N, needed):
    spec = GeneratorSpec(example, N, SEED)
    started = time.perf_counter()
    run = identification_rate(spec, reps=100)
    elapsed = time.perf_counter() - started
    per_rep = 230_300 / (elapsed / 100)
    ok = run.hits >= needed
    assert criterion(5, ok, f"{example} N={N}: {run.hits}/100 (need {needed}); "
                            f"{elapsed:.0f}s, {per_rep:,.0f} subsets/s")


@pytest.mark.slow
def test_epe_centering(criterion, ex1_identification):
    spec = GeneratorSpec("ex1", 500, SEED)
    oracle = oracle_target(spec, spec.significant).err
    mean = float(np.mean(ex1_identification.target_epe))
    ok = abs(mean - oracle) <= 0.08
    assert criterion(6, ok, f"mean estimate {mean:.4f} vs oracle {oracle:.5f} (gap {mean - oracle:+.4f})")


def test_clt_gates(criterion, ex1_replicates):
    spec, reps = ex1_replicates
    full = mc_normality(spec, spec.significant, 10, None, PsiScope.COMPLEMENT, 2000, 500, reps=reps)
    prefix = mc_normality(spec, spec.significant, 10, None, PsiScope.COMPLEMENT, 2000, 500, prefix=True,
                          reps=reps)
    ok = full.passes() and prefix.passes()
    detail = "; ".join(f"{name}: mean {r.mean:+.3f} var {r.variance:.3f} KS {r.ks:.3f}"
                       for name, r in (("full", full), ("prefix", prefix)))
    assert criterion(7, ok, detail)


def test_variance_oracle_agreement(criterion):
    rows = []
    spec = GeneratorSpec("ex1", 100_000, SEED)
    exact = oracle_target(spec, spec.significant).sigma2
    rows.append(("ex1", sigma2_hat(generate(spec), spec.significant).sigma2_hat, exact))
    for i, law in enumerate(handcrafted_laws()):
        data = sample_law(law, 100_000, SEED, stream=i)
        exact = sigma2_exact(law, optimal_predictor(law, None, balanced_psi(law)))
        rows.append((f"law{i + 1}", sigma2_hat(data, list(range(1, law.r + 1))).sigma2_hat, exact))
    rel = [abs(est / exact - 1) for _, est, exact in rows]
    ok = max(rel) <= 0.05
    detail = ", ".join(f"{name} {est:.4f}/{exact:.4f}" for name, est, exact in rows)
    assert criterion(8, ok, f"{detail} (max rel. gap {max(rel):.1%})")


def test_exchangeable_array_variance(criterion):
    ratios = {}
    for c in EXCHANGEABLE_CONSTRUCTIONS:
        rep = exchangeable_harness(c, k=10_000, alpha=0.5, replicates=500, seed=SEED)
        ratios[c] = rep.extra["variance_ratio"]
    ok = all(abs(v - 1) <= 0.10 for v in ratios.values())
    detail = ", ".join(f"{c} {v:.3f}" for c, v in ratios.items())
    assert criterion(9, ok, f"variance / (1-alpha) sigma^2 at alpha=1/2: {detail}")


def test_ci_coverage(criterion, ex1_replicates):
    spec, reps = ex1_replicates
    oracle = oracle_target(spec, spec.significant).err
    hits = 0
    for rp in reps:
        est = ErrEstimate(rp.epe, spec.significant, 10, 2000, PsiScope.COMPLEMENT, 2000 ** -0.25)
        hits += confidence_interval(est, VarianceEstimate(rp.sigma2, 2000, "plug-in"), 0.95).covers(oracle)
    rate = hits / len(reps)
    assert criterion(10, abs(rate - 0.95) <= 0.03, f"95% intervals cover the oracle in {rate:.1%} of 500")


def _cli_outputs(tmp, workers):
    out = tmp / f"w{workers}"
    w = ["--workers", str(workers)]
    codes = [
        cli_main(["simulate", "--example", "ex1", "--N", "400", "--seed", str(SEED), "--out", str(out)] + w),
        cli_main(["search", "--data", str(out / "dataset.csv"), "--r", "3", "--out", str(out)] + w),
        cli_main(["search", "--example", "ex1", "--N", "300", "--seed", str(SEED), "--r", "2", "--reps", "3",
                  "--out", str(out)] + w),
        cli_main(["clt-check", "--example", "ex1", "--N", "401", "--seed", str(SEED), "--reps", "20",
                  "--statistic", "both", "--out", str(out)] + w),
        cli_main(["trace", "--example", "ex1", "--seed", str(SEED), "--grid", "100,200,400", "--out", str(out)] + w),
    ]
    return codes, {p.name: p.read_bytes() for p in sorted(out.iterdir())}


def test_cli_determinism(criterion, tmp_path):
    codes_a, first = _cli_outputs(tmp_path / "a", 1)
    codes_b, rerun = _cli_outputs(tmp_path / "b", 1)
    codes_c, wide = _cli_outputs(tmp_path / "c", 4)
    expected = {"dataset.csv", "dataset.meta.json", "search_report.csv", "identification.csv",
                "mc_full.csv", "mc_prefix.csv", "trace.csv"}
    # clt-check may exit with the gate-failure code at 20 replicates; that is not a crash
    ran = all(c in (0, 5) for c in codes_a + codes_b + codes_c) and set(first) == expected
    ok = ran and first == rerun == wide
    assert criterion(11, ok, f"{len(first)} files byte-identical across reruns and 1 vs 4 workers")
