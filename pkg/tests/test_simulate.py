import csv

import numpy as np
import pytest

from selfsim.errors import DomainError, NotPSD
from selfsim.process_models import ProcessSpec, covariance
from selfsim.simulate import (
    EIGEN_CLIP,
    cholesky_factor,
    cholesky_gaussian,
    circulant_eigenvalues,
    fgn_autocovariance,
    probe_indices,
    rng_stream,
    sample_fgn_circulant,
    sample_path,
    sample_paths,
)

PROBES = [0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 0.875, 1.0]


def _probe_matrix(spec, N, R, method="auto", t_max=1.0, seed=0, probes=PROBES):
    idx = probe_indices(N, probes, t_max)
    return np.array([sample_path(spec, t_max, N, seed, replica=r, method=method).values[0, idx]
                     for r in range(R)])


def _cov_check(X, target, k=4.0):
    R = X.shape[0]
    prods = X[:, :, None] * X[:, None, :]
    est = prods.mean(axis=0)
    se = prods.std(axis=0, ddof=1) / np.sqrt(R)
    return np.abs(est - target) <= k * se


def test_path_starts_at_zero_and_shape():
    p = sample_path(ProcessSpec.sub_fbm(0.4, dimension=2), 2.0, 100, seed=1)
    assert p.values.shape == (2, 101)
    assert np.all(p.values[:, 0] == 0.0)
    assert p.dt == pytest.approx(0.02)
    assert p.times[-1] == pytest.approx(2.0)


def test_determinism():
    spec = ProcessSpec.fbm(0.6)
    a = sample_path(spec, 1.0, 1000, seed=42, replica=3)
    b = sample_path(spec, 1.0, 1000, seed=42, replica=3)
    c = sample_path(spec, 1.0, 1000, seed=42, replica=4)
    assert np.array_equal(a.values, b.values)
    assert not np.array_equal(a.values, c.values)


def test_thread_count_invariance():
    spec = ProcessSpec.bi_fbm(0.6, 0.8)
    one = sample_paths(spec, 1.0, 128, seed=9, replications=12, threads=1)
    two = sample_paths(spec, 1.0, 128, seed=9, replications=12, threads=3)
    for a, b in zip(one, two):
        assert np.array_equal(a.values, b.values)


def test_rng_streams_differ():
    a = rng_stream(1, 0).standard_normal(4)
    b = rng_stream(1, 1).standard_normal(4)
    c = rng_stream(2, 0).standard_normal(4)
    assert not np.allclose(a, b) and not np.allclose(a, c)


def test_fgn_brownian_white():
    x = sample_fgn_circulant(0.5, 4096, 0.01, seed=3, count=50)
    assert x.var() == pytest.approx(0.01, rel=0.02)
    lag1 = (x[:, 1:] * x[:, :-1]).mean()
    assert abs(lag1) < 4 * 0.01 / np.sqrt(x.size)


def test_fgn_autocovariance_h07():
    H, N, dt = 0.7, 2 ** 14, 1.0 / 2 ** 14
    x = sample_fgn_circulant(H, N, dt, seed=5, count=200)
    for k in range(1, 11):
        per = (x[:, k:] * x[:, :-k]).mean(axis=1)
        se = per.std(ddof=1) / np.sqrt(per.size)
        target = dt ** (2 * H) * fgn_autocovariance(H, k)
        assert abs(per.mean() - target) <= 4 * se


def test_embedding_nonnegative():
    for H in (0.05, 0.3, 0.5, 0.7, 0.95):
        lam = circulant_eigenvalues(H, 2 ** 12)
        assert lam.min() >= -EIGEN_CLIP * lam.max()
    assert circulant_eigenvalues(0.3, 2 ** 12).min() >= -1e-12


def test_fgn_non_power_of_two():
    x = sample_fgn_circulant(0.4, 1000, 1.0, seed=0, count=2)
    assert x.shape == (2, 1000)
    with pytest.raises(DomainError):
        sample_fgn_circulant(1.0, 8, 1.0, seed=0, count=1)


def test_brownian_variance():
    X = _probe_matrix(ProcessSpec.fbm(0.5), 64, 5000, probes=[1.0])[:, 0]
    se = np.sqrt(2.0 / X.size)
    assert abs(X.var() - 1.0) <= 4 * se


def test_bifbm_covariance_matrix():
    spec = ProcessSpec.bi_fbm(0.6, 0.8)
    X = _probe_matrix(spec, 512, 5000)
    t = np.array(PROBES)
    target = covariance(spec, t[:, None], t[None, :])
    assert _cov_check(X, target).all()


def test_subfbm_variance_scaling():
    H = 0.7
    spec = ProcessSpec.sub_fbm(H)
    X = _probe_matrix(spec, 256, 4000, probes=[0.25, 0.5, 1.0])
    c = 2 - 2 ** (2 * H - 1)
    for j, t in enumerate([0.25, 0.5, 1.0]):
        v = X[:, j] ** 2 / t ** (2 * H)
        assert abs(v.mean() - c) <= 4 * v.std(ddof=1) / np.sqrt(v.size)


def test_circulant_vs_cholesky():
    spec = ProcessSpec.fbm(0.3)
    a = _probe_matrix(spec, 256, 5000, method="circulant", seed=1)
    b = _probe_matrix(spec, 256, 5000, method="cholesky", seed=2)
    for f in (lambda x: x, lambda x: x ** 2):
        fa, fb = f(a), f(b)
        se = np.sqrt(fa.var(axis=0, ddof=1) / len(fa) + fb.var(axis=0, ddof=1) / len(fb))
        assert np.all(np.abs(fa.mean(axis=0) - fb.mean(axis=0)) <= 4 * se)


def test_coordinates_independent():
    spec = ProcessSpec.fbm(0.6, dimension=2)
    idx = probe_indices(128, [0.5, 1.0], 1.0)
    V = np.array([sample_path(spec, 1.0, 128, seed=4, replica=r).values[:, idx] for r in range(4000)])
    prod = V[:, 0, :] * V[:, 1, :]
    se = prod.std(axis=0, ddof=1) / np.sqrt(len(prod))
    assert np.all(np.abs(prod.mean(axis=0)) <= 4 * se)


def test_self_similarity_in_law():
    spec = ProcessSpec.sub_fbm(0.35)
    a = 3.0
    x1 = _probe_matrix(spec, 128, 3000, t_max=1.0, seed=1, probes=[0.5, 1.0])
    xa = _probe_matrix(spec, 128, 3000, t_max=a, seed=2, probes=[0.5 * a, a]) * a ** (-spec.H_eff)
    s1, sa = x1 ** 2, xa ** 2
    se = np.sqrt(s1.var(axis=0, ddof=1) / len(s1) + sa.var(axis=0, ddof=1) / len(sa))
    assert np.all(np.abs(s1.mean(axis=0) - sa.mean(axis=0)) <= 4 * se)


def test_cholesky_identity():
    draws = np.array([cholesky_gaussian(np.eye(3), seed=0, stream=s) for s in range(4000)])
    assert np.allclose(draws.mean(axis=0), 0, atol=4 / np.sqrt(4000))
    assert np.allclose(np.cov(draws.T), np.eye(3), atol=4 * np.sqrt(2 / 4000))


def test_cholesky_rank_one():
    v = np.array([1.0, -2.0, 0.5])
    fac = cholesky_factor(np.outer(v, v))
    assert fac.jitter > 0
    x = cholesky_gaussian(np.outer(v, v), seed=3)
    # x is a multiple of v up to the jitter
    resid = x - (x @ v) / (v @ v) * v
    assert np.linalg.norm(resid) < 1e-4 * max(1.0, np.linalg.norm(x))


def test_cholesky_fbm_grid():
    spec = ProcessSpec.fbm(0.7)
    t = np.linspace(1 / 64, 1, 64)
    C = covariance(spec, t[:, None], t[None, :])
    X = cholesky_factor(C).sample(rng_stream(11, 0), size=10_000)
    assert _cov_check(X, C).all()


def test_cholesky_not_psd():
    with pytest.raises(NotPSD):
        cholesky_factor(np.array([[1.0, 0.0], [0.0, -1.0]]))
    with pytest.raises(DomainError):
        cholesky_factor(np.array([[1.0, 0.5], [0.0, 1.0]]))


def test_path_csv(tmp_path):
    p = sample_path(ProcessSpec.fbm(0.5, dimension=2), 1.0, 4, seed=0)
    out = p.to_csv(tmp_path / "path.csv")
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["t", "X1", "X2"]
    assert len(rows) == 6
    assert float(rows[-1][0]) == 1.0
    assert float(rows[3][2]) == p.values[1, 2]
