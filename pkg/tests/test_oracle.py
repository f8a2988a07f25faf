import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mdr.core import FactorSubset, PenaltyVector
from mdr.oracle import (JointLaw, PredictorFn, balanced_psi, err_exact_def, err_exact_telescoped,
                        optimal_predictor, sigma2_exact, sigma2_raw_exact)
from mdr.simgen import GeneratorSpec, exact_law

from _laws import random_law, random_params, random_predictor, random_psi

ONE = PenaltyVector.constant(1)


def y_only_law(weights: dict[int, float], m: int = 1) -> JointLaw:
    """Law with a single cell (r=1, s=0) and the given response distribution."""
    return JointLaw.from_support([((0,), y, p) for y, p in weights.items()], r=1, s=0, m=m)


def test_simple_error_values():
    law = y_only_law({-1: 0.5, 1: 0.5})
    assert err_exact_def(law, PredictorFn.constant(1, 1, 1), ONE) == pytest.approx(1.0)
    uni = y_only_law({-1: 1 / 3, 0: 1 / 3, 1: 1 / 3})
    assert err_exact_def(uni, PredictorFn.constant(0, 1, 1), ONE) == pytest.approx(2 / 3)
    assert err_exact_telescoped(uni, PredictorFn.constant(1, 1, 1), ONE) == pytest.approx(1.0)


def test_perfect_predictor_has_zero_error():
    law = JointLaw.from_support([((0,), -1, 0.2), ((1,), 1, 0.5), ((2,), 0, 0.3)], r=1, s=2, m=1)
    f = PredictorFn(np.array([-1, 1, 0]), 1)
    assert err_exact_def(law, f, ONE) == 0.0
    assert sigma2_exact(law, f) == 0.0


def test_definition_matches_telescoped_on_random_laws():
    rng = np.random.default_rng(20240601)
    for _ in range(1000):
        m, s, r = random_params(rng)
        law = random_law(rng, m, s, r)
        f, psi = random_predictor(rng, law), random_psi(rng, m)
        assert abs(err_exact_def(law, f, psi) - err_exact_telescoped(law, f, psi)) <= 1e-12


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(0.01, 100.0))
def test_error_scales_with_penalty(seed, c):
    rng = np.random.default_rng(seed)
    law = random_law(rng, *random_params(rng))
    f, psi = random_predictor(rng, law), random_psi(rng, law.m)
    assert err_exact_def(law, f, psi.scaled(c)) == pytest.approx(c * err_exact_def(law, f, psi), rel=1e-12)
    assert np.array_equal(optimal_predictor(law, None, psi.scaled(c)).table,
                          optimal_predictor(law, None, psi).table)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_zero_error_iff_almost_sure_agreement(seed):
    rng = np.random.default_rng(seed)
    law = random_law(rng, *random_params(rng))
    f = random_predictor(rng, law)
    psi = PenaltyVector(rng.random(2 * law.m + 1) + 0.1, law.m)
    agree = sum(law.probs[c, f.table[c] + law.m] for c in range(law.n_cells))
    assert (err_exact_def(law, f, psi) < 1e-15) == (abs(agree - 1) < 1e-12)


def test_optimal_predictor_examples():
    law = JointLaw.from_support([((c,), 1, 1 / 3) for c in range(3)], r=1, s=2, m=1)
    assert optimal_predictor(law, None, ONE).table.tolist() == [1, 1, 1]
    # one cell with P(1)=0.3, P(-1)=0.1; costs z=1: 0.2, z=0: 0.4, z=-1: 0.6
    law = JointLaw.from_support([((0,), 1, 0.3), ((0,), -1, 0.1), ((1,), -1, 0.6)], r=1, s=1, m=1)
    assert optimal_predictor(law, None, ONE).table.tolist() == [1, -1]


def _enumeration_instances(rng, count):
    """Random instances whose full predictor-table enumeration stays small."""
    out = []
    while len(out) < count:
        m, s, r = random_params(rng)
        n_cells, n_y = (s + 1) ** r, 2 * m + 1
        if n_cells * n_y <= 200 and n_y ** n_cells <= 20_000:
            out.append(random_law(rng, m, s, r))
    return out


def test_optimal_predictor_beats_every_table():
    rng = np.random.default_rng(7)
    for law in _enumeration_instances(rng, 100):
        psi = random_psi(rng, law.m)
        best = err_exact_def(law, optimal_predictor(law, None, psi), psi)
        ys = range(-law.m, law.m + 1)
        tables = np.array(list(itertools.product(ys, repeat=law.n_cells)))
        # per-table error as a sum over cells, spot-checked against err_exact_def below
        loss = np.array([[sum(abs(y - z) * psi[y] * law.probs[c, y + law.m] for y in ys) for z in ys]
                         for c in range(law.n_cells)])
        errs = loss[np.arange(law.n_cells), tables + law.m].sum(axis=1)
        for t in rng.choice(len(tables), size=min(5, len(tables)), replace=False):
            assert errs[t] == pytest.approx(err_exact_def(law, PredictorFn(tables[t], law.m), psi), abs=1e-12)
        assert best <= errs.min() + 1e-12


def test_marginalized_predictor_uses_only_beta():
    rng = np.random.default_rng(3)
    law = random_law(rng, 1, 2, 3)
    f = optimal_predictor(law, FactorSubset([2]), ONE)
    assert f.table.shape == (3,)
    assert np.array_equal(f.table, optimal_predictor(law.marginalize([1]), None, ONE).table)


def test_law_rejects_bad_tables():
    with pytest.raises(ValueError):
        JointLaw(np.full((2, 3), 0.2), 1, 1, 1)
    with pytest.raises(ValueError):
        JointLaw(np.array([[1.5, 0, -0.5]]), 1, 0, 1)


def _ex1_brute_force(gamma: float):
    """(Err, Var V) for the Ex1 optimal rule by walking the 27 cells and the flip."""
    outcomes = []  # (prob, y, y0)
    for x2, x3, x5 in itertools.product((-1, 0, 1), repeat=3):
        y0 = 1 if (x2 == 1 and x3 >= 0) or (x2 == -1 and x3 + x5 >= 1) else -1
        outcomes += [((1 - gamma) / 27, y0, y0), (gamma / 27, -y0, y0)]
    py = {y: sum(p for p, yy, _ in outcomes if yy == y) for y in (-1, 1)}
    err = sum(p * abs(y - f) / py[y] for p, y, f in outcomes)
    # m = 1: thresholds i = 0, 1; y = 0 has no mass
    cond = {(i, y): sum(p for p, yy, f in outcomes if yy == y and abs(f - y) > i) / py[y]
            for i in (0, 1) for y in (-1, 1)}
    v = [(p, sum(((abs(f - y) > i) - cond[i, y]) / py[y] for i in (0, 1))) for p, y, f in outcomes]
    mean = sum(p * x for p, x in v)
    return err, sum(p * (x - mean) ** 2 for p, x in v)


def test_ex1_oracle_values_match_brute_force():
    law = exact_law(GeneratorSpec("ex1", 1, 0))
    psi = balanced_psi(law)
    f = optimal_predictor(law, None, psi)
    err, var = _ex1_brute_force(0.1)
    closed = 0.2 * ((1 / 3) / (2 / 3 * 0.9 + 1 / 3 * 0.1) + (2 / 3) / (1 / 3 * 0.9 + 2 / 3 * 0.1))
    assert err_exact_def(law, f, psi) == pytest.approx(err, abs=1e-12)
    assert err == pytest.approx(closed, abs=1e-12)
    assert err_exact_telescoped(law, f, psi) == pytest.approx(err, abs=1e-12)
    assert sigma2_exact(law, f) == pytest.approx(var, abs=1e-12) and var > 0


def test_sigma2_vanishes_for_deterministic_error_given_y():
    law = y_only_law({-1: 0.4, 1: 0.6})
    assert sigma2_exact(law, PredictorFn.constant(1, 1, 1)) == pytest.approx(0.0, abs=1e-15)


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_variances_nonnegative(seed):
    rng = np.random.default_rng(seed)
    law = random_law(rng, *random_params(rng))
    f = random_predictor(rng, law)
    assert sigma2_exact(law, f) >= 0
    assert sigma2_raw_exact(law, f, balanced_psi(law)) >= 0


def test_raw_variance_is_variance_of_weighted_deviation():
    rng = np.random.default_rng(11)
    law = random_law(rng, 2, 1, 2)
    f, psi = random_predictor(rng, law), random_psi(rng, 2)
    w = np.array([[psi[y] * abs(f.table[c] - y) for y in law.y_values] for c in range(law.n_cells)])
    mean = (law.probs * w).sum()
    assert sigma2_raw_exact(law, f, psi) == pytest.approx((law.probs * (w - mean) ** 2).sum(), abs=1e-12)
    assert math.isfinite(mean)
