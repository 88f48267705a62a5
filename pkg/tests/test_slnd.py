import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from selfsim.errors import DomainError, ZeroForm
from selfsim.process_models import ProcessSpec, covariance, variance
from selfsim.slnd import (
    ConditioningProblem,
    conditional_variance,
    estimate_kappa_slnd,
    lnd_ratio,
)

SPECS = [ProcessSpec.fbm(0.5), ProcessSpec.fbm(0.75), ProcessSpec.sub_fbm(0.3),
         ProcessSpec.sub_fbm(0.7), ProcessSpec.bi_fbm(0.6, 0.8)]


def regression_residual(spec, t, s):
    """Residual variance of the least-squares regression of X_t on X_s."""
    s = np.asarray(s, dtype=float)
    K = covariance(spec, s[:, None], s[None, :])
    k = covariance(spec, s, t)
    beta, *_ = np.linalg.lstsq(K, k, rcond=None)
    return float(variance(spec, t) - 2 * beta @ k + beta @ K @ beta)


def test_brownian_examples():
    bm = ProcessSpec.fbm(0.5)
    assert conditional_variance(ConditioningProblem(bm, 2.0, (1.0,))) == pytest.approx(1.0, abs=1e-12)
    assert conditional_variance(ConditioningProblem(bm, 2.0, (0.5, 1.0, 1.5))) == pytest.approx(0.5, abs=1e-12)


def test_brownian_markov_many():
    bm = ProcessSpec.fbm(0.5)
    rng = np.random.default_rng(0)
    for _ in range(1000):
        t = rng.uniform(0.1, 10)
        s = np.sort(rng.uniform(0, t, rng.integers(1, 8)))
        v = conditional_variance(ConditioningProblem(bm, t, tuple(s)))
        assert abs(v - (t - s[-1])) <= 1e-10


def test_subfbm_regression_oracle():
    spec = ProcessSpec.sub_fbm(0.7)
    v = conditional_variance(ConditioningProblem(spec, 1.0, (0.4, 0.8)))
    assert v == pytest.approx(regression_residual(spec, 1.0, [0.4, 0.8]), abs=1e-10)


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: s.label())
@given(data=st.data())
def test_schur_equals_regression(spec, data):
    t = data.draw(st.floats(0.5, 10))
    m = data.draw(st.integers(1, 5))
    fr = sorted(data.draw(st.lists(st.floats(0.05, 0.95), min_size=m, max_size=m, unique=True)))
    s = [f * t for f in fr]
    if min(np.diff([0.0] + s + [t])) < 1e-3 * t:
        return
    v = conditional_variance(ConditioningProblem(spec, t, tuple(s)))
    assert v == pytest.approx(regression_residual(spec, t, s), abs=1e-10 * variance(spec, t))
    assert 0 <= v <= variance(spec, t)


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: s.label())
def test_conditioning_monotone(spec):
    rng = np.random.default_rng(1)
    for _ in range(200):
        t = rng.uniform(0.1, 10)
        s = np.sort(rng.uniform(0, t, 6))
        prev = variance(spec, t)
        for k in range(1, 7):
            sub = np.sort(s[:k])
            v = conditional_variance(ConditioningProblem(spec, t, tuple(sub)))
            assert v <= prev * (1 + 1e-9) + 1e-13
            prev = v


def test_duplicates_deduplicated():
    spec = ProcessSpec.sub_fbm(0.4)
    a = conditional_variance(ConditioningProblem(spec, 1.0, (0.3, 0.3, 0.6)))
    b = conditional_variance(ConditioningProblem(spec, 1.0, (0.3, 0.6)))
    assert a == pytest.approx(b, rel=1e-12)


def test_problem_validation():
    bm = ProcessSpec.fbm(0.5)
    with pytest.raises(DomainError):
        ConditioningProblem(bm, 1.0, ())
    with pytest.raises(DomainError):
        ConditioningProblem(bm, 1.0, (0.5, 0.2))
    with pytest.raises(DomainError):
        ConditioningProblem(bm, 1.0, (0.5, 1.0))


def test_kappa_brownian():
    est = estimate_kappa_slnd(ProcessSpec.fbm(0.5), trials=3000, m_max=6, seed=0)
    assert est.kappa_hat >= 1 - 1e-8
    assert est.kappa_hat == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("spec", [ProcessSpec.bi_fbm(0.6, 0.8), ProcessSpec.sub_fbm(0.3), ProcessSpec.sub_fbm(0.7)],
                         ids=lambda s: s.label())
def test_kappa_positive(spec):
    est = estimate_kappa_slnd(spec, trials=3000, m_max=6, seed=2)
    assert est["kappa_hat"] > 0
    w = est.worst_case
    # worst case reproduces the reported ratio
    r = conditional_variance(w) / (w.t - w.s[-1]) ** (2 * spec.H_eff)
    assert r == pytest.approx(est.kappa_hat, rel=1e-6)
    # the tested inequality on every sample
    assert np.all(est.ratios >= est.kappa_hat)


def test_kappa_export(tmp_path):
    est = estimate_kappa_slnd(ProcessSpec.sub_fbm(0.3), trials=30, m_max=3, seed=2)
    out = est.export_worst_cases(tmp_path / "worst.csv")
    lines = out.read_text().splitlines()
    assert lines[0].startswith("family,H,K,t,m,s,ratio")
    assert len(lines) == 2


def test_lnd_brownian_exact():
    rng = np.random.default_rng(3)
    for _ in range(100):
        s = np.sort(rng.uniform(0.01, 5, 4))
        x = rng.normal(size=4)
        assert lnd_ratio(ProcessSpec.fbm(0.5), s, x).ratio == pytest.approx(1.0, rel=1e-12)


def test_lnd_fbm07_positive():
    spec = ProcessSpec.fbm(0.7)
    rng = np.random.default_rng(4)
    ratios = []
    for _ in range(10_000):
        s = np.sort(rng.uniform(0.01, 5, 3))
        ratios.append(lnd_ratio(spec, s, rng.normal(size=3)).ratio)
    assert min(ratios) > 0


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: s.label())
def test_lnd_single_increment(spec):
    r = lnd_ratio(spec, [1.7], [[0.3, -2.0]])
    assert r.variance == pytest.approx(4.09 * variance(spec, 1.7), rel=1e-12)
    assert r.ratio == pytest.approx(variance(spec, 1.7) / 1.7 ** (2 * spec.H_eff), rel=1e-12)


def test_lnd_zero_form():
    with pytest.raises(ZeroForm):
        lnd_ratio(ProcessSpec.fbm(0.5), [1.0, 2.0], [0.0, 0.0])
