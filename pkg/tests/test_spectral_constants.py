import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from selfsim.errors import HypothesisError
from selfsim.functionals import FunctionFamily, TestFunction
from selfsim.spectral_constants import (
    _box_C_separable,
    compute_C,
    compute_D,
    direct_C_quadrature,
    fourier_hat,
    lemma_bounds_check,
    verify_D_limit,
)

GAUSS = TestFunction(FunctionFamily.GAUSS)
XG = TestFunction(FunctionFamily.X_GAUSS)
BOX = TestFunction(FunctionFamily.BOX)


@pytest.mark.parametrize("f", [GAUSS, XG, BOX], ids=lambda f: f.family.value)
@pytest.mark.parametrize("y", [0.0, 0.3, 1.7, 4.0])
def test_fourier_hat_matches_quadrature(f, y):
    re = integrate.quad(lambda x: f([x]) * math.cos(x * y), -12, 12, points=[-1, 1], limit=200)[0]
    im = integrate.quad(lambda x: f([x]) * math.sin(x * y), -12, 12, points=[-1, 1], limit=200)[0]
    assert fourier_hat(f, y) == pytest.approx(complex(re, im), abs=1e-10)


def test_fourier_hat_properties():
    assert fourier_hat(GAUSS, 0.0) == 1.0
    assert fourier_hat(XG, 0.0) == 0.0
    g2 = TestFunction("gauss", 2)
    y = np.array([[0.3, -1.2], [2.0, 0.1]])
    np.testing.assert_allclose(fourier_hat(g2, y), fourier_hat(GAUSS, y[:, 0]) * fourier_hat(GAUSS, y[:, 1]))
    b2 = TestFunction("box", 2, weight=3.0)
    assert fourier_hat(b2, np.array([0.0, 0.0])) == pytest.approx(3.0)
    # derivative at 0 is i times the first moment
    h = 1e-6
    der = (fourier_hat(XG, h) - fourier_hat(XG, -h)) / (2 * h)
    assert der == pytest.approx(1j * XG.first_moment[0], abs=1e-8)


def test_C_brownian_gauss_closed_form():
    target = 4 * (math.sqrt(2) - 1) / math.sqrt(math.pi)
    assert target == pytest.approx(0.9347799090204363, rel=1e-15)
    C = compute_C(0.5, 1, GAUSS)
    assert C == pytest.approx(target, rel=1e-6)
    assert direct_C_quadrature(0.5, GAUSS) == pytest.approx(C, rel=1e-6)


@pytest.mark.parametrize("H,f", [(0.6, GAUSS), (0.4, XG), (0.25, BOX), (0.7, BOX)],
                         ids=["gauss0.6", "xgauss0.4", "box0.25", "box0.7"])
def test_C_against_direct_quadrature(H, f):
    assert compute_C(H, 1, f) == pytest.approx(direct_C_quadrature(H, f), rel=1e-6)


def test_C_box_closed_values():
    assert compute_C(0.5, 1, BOX) == pytest.approx(2 / 3, rel=1e-9)
    assert compute_C(0.25, 1, BOX) == pytest.approx(2 / 5, rel=1e-9)


@pytest.mark.parametrize("H", [0.3, 0.5, 0.8])
def test_box_separable_route_matches_radial(H):
    C_sep, _ = _box_C_separable(H, 1, 1.0)
    assert C_sep == pytest.approx(compute_C(H, 1, BOX), rel=1e-8)


def test_box_two_dimensional():
    b2 = TestFunction("box", 2)
    C, err = compute_C(0.4, 2, b2, return_error=True)
    assert C > 0 and err <= 1e-6 * C
    w = TestFunction("box", 2, weight=2.0)
    assert compute_C(0.4, 2, w) == pytest.approx(4 * C, rel=1e-12)


@given(sigma=st.floats(0.2, 5.0))
def test_C_sigma_scaling(sigma):
    H = 0.6
    assert compute_C(H, 1, GAUSS, sigma) == pytest.approx(sigma ** (-1 / (2 * H)) * compute_C(H, 1, GAUSS), rel=1e-12)


def test_C_weight_and_zero():
    assert compute_C(0.6, 1, TestFunction("gauss", weight=0.0)) == 0.0
    assert compute_C(0.6, 1, TestFunction("gauss", weight=-2.0)) == pytest.approx(4 * compute_C(0.6, 1, GAUSS))


def test_C_hypotheses():
    with pytest.raises(HypothesisError):
        compute_C(0.15, 1, GAUSS)
    with pytest.raises(HypothesisError):
        compute_C(1 / 3, 1, XG)
    with pytest.raises(ValueError):
        compute_C(0.6, 2, GAUSS)


def test_D_closed_forms():
    assert compute_D(1 / 3, 1, XG) == pytest.approx(2 / math.sqrt(2 * math.pi), abs=1e-10)
    assert compute_D(0.2, 1, GAUSS) == pytest.approx(3 / (2 * math.sqrt(2 * math.pi)), abs=1e-10)
    assert compute_D(1 / 3, 1, XG, sigma=2.0) == pytest.approx(2 ** -1.5 * compute_D(1 / 3, 1, XG), rel=1e-12)
    with pytest.raises(HypothesisError):
        compute_D(0.3, 1, XG)


@pytest.mark.parametrize("H,f", [(1 / 3, XG), (0.2, GAUSS)], ids=["xgauss", "gauss"])
def test_D_limit_approach(H, f):
    D = compute_D(H, 1, f)
    vals = verify_D_limit(H, 1, f, 1.0, [1e2, 1e4, 1e6])
    gaps = [abs(v - D) for v in vals]
    assert all(b > a for a, b in zip(vals, vals[1:])) and all(v < D for v in vals)
    assert all(g1 <= 0.7 * g0 for g0, g1 in zip(gaps, gaps[1:]))


def test_D_limit_independent_quadrature():
    # direct double integral for the critical x_gauss case at n = 100
    H, n = 1 / 3, 100.0

    def inner(y):
        t = integrate.quad(lambda s: math.exp(-0.5 * y * y * s ** (2 * H)), 0, n, limit=200)[0]
        return y * y * math.exp(-y * y) * t

    total = 2 * integrate.quad(inner, 0, 12, limit=200)[0]
    direct = 2 / (2 * math.pi) * total / math.log(n)
    assert verify_D_limit(H, 1, XG, 1.0, [n])[0] == pytest.approx(direct, rel=1e-7)


@pytest.mark.parametrize("f,H", [(GAUSS, 0.6), (XG, 0.45), (GAUSS, 0.2), (XG, 1 / 3)],
                         ids=["gauss-super", "xgauss-super", "gauss-critical", "xgauss-critical"])
def test_lemma_bounds(f, H):
    rep = lemma_bounds_check(f, H, 1, samples=4000)
    assert rep.passed, rep.summary()
    assert 0 < rep.c_fit < 10
    assert set(rep.growth) == {0, 1, 2}
