"""Bootstrap calibration, Kupiec backtest, grid-robust core gate."""

import numpy as np
import pytest
import scipy.stats

import oracles
from wkmetric import (
    InvalidConfigError,
    ValidationPolicy,
    WeightConfig,
    absolute,
    bootstrap_null,
    critical_value,
    grid_robust_distance,
    hybrid_validate,
    kupiec_pof,
    p_value,
    weighted_distance_to_model,
)
from wkmetric.distributions import Gaussian, StudentT, sample

CFG = WeightConfig(absolute(), 1.0)


def test_bootstrap_null_range_and_determinism():
    null = bootstrap_null(Gaussian(), n=50, cfg=CFG, B=120, seed=3)
    assert null.shape == (120,)
    assert np.all(null >= 0.0) and np.all(null <= 1.0)
    again = bootstrap_null(Gaussian(), n=50, cfg=CFG, B=120, seed=3)
    assert np.array_equal(null, again)
    other = bootstrap_null(Gaussian(), n=50, cfg=CFG, B=120, seed=4)
    assert not np.array_equal(null, other)


def test_bootstrap_null_cache(tmp_path):
    cache = str(tmp_path)
    first = bootstrap_null(Gaussian(), n=30, cfg=CFG, B=110, seed=1, cache_dir=cache)
    files = list(tmp_path.iterdir())
    assert len(files) == 1
    second = bootstrap_null(Gaussian(), n=30, cfg=CFG, B=110, seed=1, cache_dir=cache)
    assert np.array_equal(first, second)
    assert list(tmp_path.iterdir()) == files


def test_critical_value_conventions():
    null = np.arange(1, 101) / 100.0
    assert critical_value(null, 0.0) == 1.0  # alpha=0 -> sample max
    # ceil(0.95 * 100) = 95th smallest
    assert critical_value(null, 0.05) == 0.95
    with pytest.raises(InvalidConfigError):
        critical_value(null, 1.0)


def test_p_value_conventions():
    null = np.arange(1, 101) / 100.0
    assert p_value(-np.inf, null) == 1.0
    assert p_value(2.0, null) == 0.0
    med = float(np.median(null))
    assert abs(p_value(med, null) - 0.5) <= 1.0 / 100 + 1e-12


def test_kupiec_exact_coverage():
    lr, pval = kupiec_pof(5, 500, 0.01)
    assert lr == pytest.approx(0.0, abs=1e-12)
    assert pval == pytest.approx(1.0, abs=1e-12)


def test_kupiec_frozen_values():
    # frozen from 30-digit arithmetic: LR = -2*250*ln(0.99), p = erfc(sqrt(LR/2))
    lr, pval = kupiec_pof(0, 250, 0.01)
    assert lr == pytest.approx(5.0251679267507206, rel=1e-12)
    assert pval == pytest.approx(0.02498150305344977, rel=1e-10)
    lr10, pval10 = kupiec_pof(10, 250, 0.01)
    assert lr10 == pytest.approx(12.955491062356042, rel=1e-12)
    assert pval10 < 0.001


def test_kupiec_against_chi2_oracle():
    # the p-value route is erfc-based; scipy's chi2.sf is an independent
    # implementation (regularized incomplete gamma)
    for x, n, p in [(0, 250, 0.01), (2, 250, 0.01), (10, 250, 0.01), (30, 1000, 0.05)]:
        lr, pval = kupiec_pof(x, n, p)
        assert pval == pytest.approx(float(scipy.stats.chi2.sf(lr, 1)), abs=1e-12)


def test_kupiec_input_validation():
    with pytest.raises(InvalidConfigError):
        kupiec_pof(-1, 250, 0.01)
    with pytest.raises(InvalidConfigError):
        kupiec_pof(300, 250, 0.01)
    with pytest.raises(InvalidConfigError):
        kupiec_pof(0, 250, 0.0)


def test_p_value_uniform_under_null_smoke():
    # small version of the calibration experiment (acceptance runs the
    # full n=500/B=500/500-rep protocol)
    reps = 200
    pvals = []
    for rep in range(reps):
        data = sample(Gaussian(), seed=10_000 + rep, n=100)
        obs = weighted_distance_to_model(data, Gaussian(), CFG).value
        null = bootstrap_null(Gaussian(), n=100, cfg=CFG, B=199, seed=rep)
        pvals.append(p_value(obs, null))
    pvals = np.sort(np.asarray(pvals))
    ks = float(
        np.max(
            np.maximum(
                np.arange(1, reps + 1) / reps - pvals,
                pvals - np.arange(reps) / reps,
            )
        )
    )
    # 0.2% KS band for 200 points: very unlikely to trip if calibrated
    assert ks < 1.95 / np.sqrt(reps)


def test_grid_robust_single_q():
    data = sample(StudentT(2.5), seed=6, n=300)
    single = grid_robust_distance(data, StudentT(2.5), absolute(), (1.2,))
    direct = weighted_distance_to_model(data, StudentT(2.5), WeightConfig(absolute(), 1.2))
    assert single.d_rob == direct.value
    assert single.argmax_q == 1.2


def test_grid_robust_attained_at_smallest_q():
    data = sample(StudentT(2.5), seed=7, n=300)
    res = grid_robust_distance(data, Gaussian(0.0, np.sqrt(5.0)), absolute(), (0.5, 1.0, 2.5))
    vals = dict(res.per_q)
    assert res.argmax_q == 0.5
    assert res.d_rob == vals[0.5]
    assert vals[0.5] >= vals[1.0] >= vals[2.5]


def test_grid_robust_orders_models():
    # heavier-tailed truth: the matched-variance gaussian null should look
    # consistently worse than the student null on the same data
    Q = (0.5, 1.0, 1.5, 2.0, 2.5)
    wins = 0
    for seed in range(20):
        data = sample(StudentT(2.5), seed=seed, n=1500)
        d_t = grid_robust_distance(data, StudentT(2.5), absolute(), Q).d_rob
        d_g = grid_robust_distance(data, Gaussian(0.0, np.sqrt(5.0)), absolute(), Q).d_rob
        wins += d_g > d_t
    assert wins >= 18


def test_policy_validation():
    with pytest.raises(InvalidConfigError):
        ValidationPolicy(Q=(), eps_core=0.05)
    with pytest.raises(InvalidConfigError):
        ValidationPolicy(Q=(1.0, 0.5), eps_core=0.05)  # not sorted
    with pytest.raises(InvalidConfigError):
        ValidationPolicy(Q=(0.5, 1.0))  # neither gate
    with pytest.raises(InvalidConfigError):
        ValidationPolicy(Q=(0.5,), eps_core=0.05, alpha_core=0.05)  # both
    with pytest.raises(InvalidConfigError):
        ValidationPolicy(Q=(0.5,), eps_core=0.05, B=50)


def test_hybrid_truth_table():
    # force each (core, tail) combination via the eps threshold and
    # injected exceptions; accept must be the conjunction
    model = Gaussian()
    base = sample(model, seed=42, n=1000)
    v01 = float(model.quantile(0.01))
    clean = np.where(base < v01, np.abs(base), base)  # no exceptions at all
    breach = clean.copy()
    breach[:50] = v01 - 1.0  # 5x the expected exception count

    # core pass needs a generous eps; core fail a tiny one
    for core_pass in (True, False):
        for tail_pass in (True, False):
            eps = 10.0 if core_pass else 1e-6
            if tail_pass:
                data = base  # model's own draws: expected exception count
            else:
                data = breach
            policy = ValidationPolicy(Q=(0.5, 1.0), eps_core=eps, var_level=0.01)
            verdict = hybrid_validate(data, model, policy)
            assert verdict.core_pass is core_pass
            assert verdict.tail_pass is tail_pass, (core_pass, tail_pass)
            assert verdict.accept is (core_pass and tail_pass)


def test_hybrid_null_case_accepts():
    model = StudentT(2.5)
    data = sample(model, seed=11, n=2000)
    policy = ValidationPolicy(Q=(0.5, 1.0, 2.0), eps_core=0.1, var_level=0.01)
    verdict = hybrid_validate(data, model, policy)
    assert verdict.accept
    ks = verdict.diagnostics["kupiec"]
    assert ks["exceptions"] == pytest.approx(20, abs=15)


def test_hybrid_bootstrap_core_gate():
    model = Gaussian()
    data = sample(model, seed=12, n=200)
    policy = ValidationPolicy(Q=(0.5, 1.0), alpha_core=0.05, B=150, seed=5)
    verdict = hybrid_validate(data, model, policy)
    b = verdict.diagnostics["bootstrap"]
    assert b["B"] == 150
    assert 0.0 <= b["p_value"] <= 1.0
    assert verdict.core_pass == (verdict.diagnostics["d_rob"] <= b["critical_value"])


def test_verdict_json_deterministic():
    model = Gaussian()
    data = sample(model, seed=13, n=150)
    policy = ValidationPolicy(Q=(0.5, 1.0), alpha_core=0.1, B=120, seed=2)
    j1 = hybrid_validate(data, model, policy).to_json()
    j2 = hybrid_validate(data, model, policy).to_json()
    assert j1 == j2
    assert '"accept"' in j1
