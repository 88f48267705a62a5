import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from selfsim.errors import DomainError, HypothesisError
from selfsim.limit_moments import (
    MomentQuery,
    determinacy_check,
    limit_moment,
    moment_coefficient,
    moment_upper_bound,
    sample_limit_mixture,
    stirling_growth,
    write_moment_table,
)
from selfsim.process_models import ProcessSpec, covariance
from selfsim.slnd import estimate_kappa_slnd

BM = ProcessSpec.fbm(0.5)
SQRT_2_PI = math.sqrt(2 / math.pi)


def q(intervals, m, lam=0.0, spec=BM, C=1.0):
    return MomentQuery(tuple(intervals), tuple(m), (lam,) if np.isscalar(lam) else tuple(lam), spec, C)


def lemma_integrand(spec, u, lam):
    """(2 pi)^{qd/2} det K^{-d/2} exp(-|lam|^2 1'K^{-1}1 / 2) built from the covariance."""
    u = np.asarray(u, dtype=float)
    d = spec.dimension
    K = covariance(spec, u[:, None], u[None, :])
    det = np.linalg.det(K)
    if det <= 0:
        return 0.0
    one = np.ones(len(u))
    quad_form = one @ np.linalg.solve(K, one)
    return (2 * np.pi) ** (len(u) * d / 2) * det ** (-d / 2) * math.exp(-0.5 * np.dot(lam, lam) * quad_form)


def oracle_m2(spec, a, b, lam, C=1.0):
    d = spec.dimension
    H = spec.H_eff
    lam2 = float(np.dot(lam, lam))
    f = lambda u: (2 * np.pi * u ** (2 * H)) ** (-d / 2) * math.exp(-0.5 * lam2 / u ** (2 * H))
    return C * integrate.quad(f, a, b, limit=200)[0]


def test_odd_orders_vanish():
    assert limit_moment(q([(0, 1)], [3])).value == 0.0
    assert limit_moment(q([(0, 0.5), (0.5, 1)], [2, 1])).value == 0.0


def test_query_validation():
    with pytest.raises(DomainError):
        q([(0, 1), (0.5, 2)], [2, 2])
    with pytest.raises(DomainError):
        q([(0, 1)], [2, 2])
    with pytest.raises(DomainError):
        q([(0, 1)], [0])
    with pytest.raises(DomainError):
        q([(0, 1)], [2], lam=(0.0, 0.0))
    assert q([(0, 1), (1, 2)], [2, 4]).order == 6


def test_coefficient():
    assert moment_coefficient(2, 1) == pytest.approx(1 / (2 * math.pi))
    assert moment_coefficient(4, 1) == pytest.approx(24 / (4 * (2 * math.pi) ** 2 * 2))
    assert moment_coefficient(2, 2) == pytest.approx(1 / (2 * math.pi) ** 2)


def test_brownian_m2():
    v = limit_moment(q([(0, 1)], [2]))
    assert v.value == pytest.approx(SQRT_2_PI, rel=5e-3)
    assert abs(v.value - SQRT_2_PI) <= max(4 * v.se, 1e-6)


def test_brownian_m4_and_m6_levy():
    # L_1(0) of Brownian motion has the law of |N(0,1)|
    v4 = limit_moment(q([(0, 1)], [4]))
    assert v4.value == pytest.approx(3.0, rel=1e-2)
    v6 = limit_moment(q([(0, 1)], [6]))
    assert v6.value == pytest.approx(15 * 2 * SQRT_2_PI, rel=1e-2)


@settings(max_examples=15)
@given(H=st.floats(0.2, 0.8), a=st.floats(0.0, 0.8), w=st.floats(0.1, 1.0), lam=st.floats(-1.0, 1.0),
       C=st.floats(0.1, 3.0))
def test_m2_equals_mean_local_time(H, a, w, lam, C):
    spec = ProcessSpec.fbm(H)
    v = limit_moment(q([(a, a + w)], [2], lam, spec, C), points=4096)
    assert v.value == pytest.approx(oracle_m2(spec, a, a + w, [lam], C), rel=2e-3)


def test_m2_sub_and_bi():
    for spec in (ProcessSpec.sub_fbm(0.4), ProcessSpec.bi_fbm(0.6, 0.8)):
        # the one-point Gram is Var(X_u), so the oracle uses the variance directly
        lam = 0.3
        f = lambda u: (2 * np.pi * covariance(spec, u, u)) ** -0.5 * math.exp(-0.5 * lam ** 2 / covariance(spec, u, u))
        want = integrate.quad(f, 0.2, 1.1)[0]
        assert limit_moment(q([(0.2, 1.1)], [2], lam, spec)).value == pytest.approx(want, rel=2e-3)


def test_two_dimensional_m2():
    spec = ProcessSpec.fbm(0.3, dimension=2)
    lam = (0.2, -0.1)
    v = limit_moment(q([(0, 1)], [2], lam, spec))
    assert v.value == pytest.approx(oracle_m2(spec, 0, 1, lam), rel=5e-3)


@pytest.mark.parametrize("spec,lam", [(BM, 0.0), (ProcessSpec.fbm(0.3), 0.5), (ProcessSpec.sub_fbm(0.6), 0.2)],
                         ids=["bm", "fbm0.3", "sub0.6"])
def test_m4_against_2d_quadrature(spec, lam):
    coef = moment_coefficient(4, 1)
    g = lambda v, u: lemma_integrand(spec, [u, v], [lam])
    # unordered box = twice the ordered triangle
    tri = integrate.dblquad(g, 0, 1, 0, lambda u: u, epsabs=1e-10, epsrel=1e-8)[0]
    want = coef * 2 * tri
    got = limit_moment(q([(0, 1)], [4], lam, spec))
    assert got.value == pytest.approx(want, rel=1e-2)


def test_cross_moment_against_2d_quadrature():
    spec = ProcessSpec.fbm(0.7)
    iv = [(0.1, 0.5), (0.6, 1.2)]
    g = lambda v, u: lemma_integrand(spec, [u, v], [0.1])
    box = integrate.dblquad(g, *iv[0], *iv[1], epsabs=1e-12, epsrel=1e-9)[0]
    want = moment_coefficient(2, 1) ** 2 * box
    got = limit_moment(q(iv, [2, 2], 0.1, spec))
    assert got.value == pytest.approx(want, rel=1e-2)


def test_C_scaling():
    base = limit_moment(q([(0, 1)], [4], 0.2, ProcessSpec.fbm(0.4)))
    scaled = limit_moment(q([(0, 1)], [4], 0.2, ProcessSpec.fbm(0.4), C=2.5))
    assert scaled.value == pytest.approx(2.5 ** 2 * base.value, rel=1e-12)


def test_hd_hypothesis():
    with pytest.raises(HypothesisError):
        limit_moment(q([(0, 1)], [2], (0.0, 0.0), ProcessSpec.fbm(0.6, dimension=2)))
    with pytest.raises(HypothesisError):
        moment_upper_bound(q([(0, 1)], [2], (0.0, 0.0), ProcessSpec.fbm(0.6, dimension=2)), 1.0)


def test_bound_brownian_equality_m2():
    b = moment_upper_bound(q([(0, 1)], [2]), 1.0)
    expected = math.gamma(0.5) * 2 / (2 * math.sqrt(2 * math.pi) * math.gamma(1.25 + 0.25))
    assert b == pytest.approx(expected, rel=1e-14)
    assert b == pytest.approx(SQRT_2_PI, rel=1e-14)


def test_bound_monotone_and_product():
    spec = ProcessSpec.fbm(0.35)
    vals = [moment_upper_bound(q([(0, b)], [4], 0.0, spec), 0.5) for b in (0.5, 1.0, 2.0, 4.0)]
    assert all(x < y for x, y in zip(vals, vals[1:]))
    two = moment_upper_bound(q([(0.0, 0.4), (0.7, 1.5)], [2, 2], 0.0, spec), 0.5)
    one = moment_upper_bound(q([(0.0, 1.5)], [2], 0.0, spec), 0.5)
    assert two == pytest.approx(one ** 2, rel=1e-13)
    with pytest.raises(DomainError):
        moment_upper_bound(q([(0, 1)], [3]), 1.0)
    with pytest.raises(DomainError):
        moment_upper_bound(q([(0, 1)], [2]), 0.0)


def test_bound_dominates_random_suite():
    rng = np.random.default_rng(0)
    specs = [ProcessSpec.fbm(0.3), BM, ProcessSpec.fbm(0.7), ProcessSpec.sub_fbm(0.4), ProcessSpec.bi_fbm(0.6, 0.8)]
    kappas = {s.label(): estimate_kappa_slnd(s, 2000, 6, 1).kappa_hat for s in specs}
    for _ in range(12):
        spec = specs[rng.integers(len(specs))]
        a = rng.uniform(0, 0.5)
        b = a + rng.uniform(0.2, 1.5)
        shape = rng.integers(3)
        if shape == 0:
            query = q([(a, b)], [2], rng.normal(), spec)
        elif shape == 1:
            query = q([(a, b)], [4], rng.normal(), spec)
        else:
            query = q([(a, b), (b + 0.1, b + 0.6)], [2, 2], rng.normal(), spec)
        v = limit_moment(query, points=4096)
        bound = moment_upper_bound(query, kappas[spec.label()])
        assert v.value <= bound * (1 + 1e-9) + 3 * v.se, (query, v, bound)


def test_mixture_zero_and_determinism():
    z = sample_limit_mixture(BM, [(0, 1)], 0.0, 0.0, 10, N=64)
    assert np.all(z == 0)
    a = sample_limit_mixture(BM, [(0, 0.5), (0.5, 1)], 1.0, 0.0, 8, N=64, seed=3)
    b = sample_limit_mixture(BM, [(0, 0.5), (0.5, 1)], 1.0, 0.0, 8, N=64, seed=3, threads=2)
    assert a.shape == (8, 2) and np.array_equal(a, b)


def test_mixture_matches_formula():
    R = 5000
    s = sample_limit_mixture(BM, [(0, 0.5), (0.5, 1)], 1.0, 0.0, R, N=256, seed=1)
    total = s.sum(axis=1)
    sq = total ** 2
    assert abs(sq.mean() - SQRT_2_PI) <= 4 * sq.std(ddof=1) / math.sqrt(R)
    cross = s[:, 0] * s[:, 1]
    assert abs(cross.mean()) <= 4 * cross.std(ddof=1) / math.sqrt(R)
    p4 = total ** 4
    assert abs(p4.mean() - 3.0) <= 4 * p4.std(ddof=1) / math.sqrt(R)
    m22 = s[:, 0] ** 2 * s[:, 1] ** 2
    want = limit_moment(q([(0, 0.5), (0.5, 1)], [2, 2])).value
    assert abs(m22.mean() - want) <= 4 * m22.std(ddof=1) / math.sqrt(R)


def test_determinacy_examples():
    k = np.arange(1, 11)
    gauss = [math.prod(range(1, 2 * j, 2)) for j in k]
    rep = determinacy_check([gauss])
    assert rep.verdict == "determinate"
    assert rep["r_hat"][0] < rep.ratios[0][0]
    logn = [(2 * j) ** 2 / 2 for j in k]
    assert determinacy_check([logn], log_moments=True).verdict == "inconclusive"
    bounded = [1 / (2 * j + 1) for j in k]
    rep = determinacy_check([bounded])
    assert rep.verdict == "determinate"
    assert np.all(rep.ratios[0] <= 1 / (2 * k))
    two = determinacy_check([gauss, bounded])
    assert two.verdict == "determinate" and two.r_hat.shape == (2,)
    with pytest.raises(DomainError):
        determinacy_check([[1.0]])
    with pytest.raises(DomainError):
        determinacy_check([[1.0, -1.0]])


@given(Hd=st.floats(0.01, 0.99))
def test_stirling_bounded(Hd):
    g = stirling_growth(Hd, k_max=20)
    assert np.all(np.isfinite(g)) and g.max() < 1.0
    assert g[-1] <= g[len(g) // 2]


def test_moment_table_csv(tmp_path):
    p = write_moment_table(tmp_path / "m.csv", [("a", 2, 0.5, 0.01), ("b", 4, 3.0, 0.02)])
    rows = list(csv.reader(p.open()))
    assert rows[0] == ["query", "order", "value", "se"]
    assert rows[2] == ["b", "4", "3.0", "0.02"]
