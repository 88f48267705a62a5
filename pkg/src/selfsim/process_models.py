"""Covariance catalog for fractional, sub-fractional and bi-fractional Brownian motion.

Besides the covariances themselves the module checks the structural
hypotheses the limit theorems rely on:

* the increment-variance sandwich with constant ``sigma`` (:func:`check_assumption_A`),
* asymptotic decorrelation of distant or disparate increments (:func:`check_assumption_B`),
* the spectral lower bound for the Lamperti-stationarized process
  (:func:`stationarized_r`, :func:`spectral_integral`, :func:`check_slnd_spectral`).

CSV columns written by the report ``to_csv`` methods:

``AssumptionAReport``: ``eps, phi_raw, phi_envelope`` (``sigma_hat`` in the header comment)
``AssumptionBReport``: ``eta, psi_raw, psi_envelope, samples``
"""
from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from ._quad import gk_integrate
from .errors import DomainError, QuadratureError


class Family(str, enum.Enum):
    FBM = "fbm"
    SUB_FBM = "sub_fbm"
    BI_FBM = "bi_fbm"


@dataclass(frozen=True)
class ProcessSpec:
    """One of the three Gaussian families, in dimension ``dimension``.

    ``H`` is the Hurst parameter (``H0`` for bi-fBm) and ``K`` the bi-fBm
    exponent ``K0``; it must be 1 for the other families. Coordinates are
    independent copies of the same one-dimensional process.
    """

    family: Family
    H: float
    K: float = 1.0
    dimension: int = 1

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        object.__setattr__(self, "H", float(self.H))
        object.__setattr__(self, "K", float(self.K))
        if not 0.0 < self.H < 1.0:
            raise DomainError(f"Hurst parameter must lie in (0,1), got {self.H}")
        if self.family is Family.BI_FBM:
            if not 0.0 < self.K <= 1.0:
                raise DomainError(f"bi-fBm exponent K0 must lie in (0,1], got {self.K}")
        elif self.K != 1.0:
            raise DomainError(f"K0 is only meaningful for bi_fbm (got K={self.K} for {self.family.value})")
        if int(self.dimension) != self.dimension or self.dimension < 1:
            raise DomainError(f"dimension must be a positive integer, got {self.dimension}")
        object.__setattr__(self, "dimension", int(self.dimension))

    @classmethod
    def fbm(cls, H: float, dimension: int = 1) -> "ProcessSpec":
        return cls(Family.FBM, H, 1.0, dimension)

    @classmethod
    def sub_fbm(cls, H: float, dimension: int = 1) -> "ProcessSpec":
        return cls(Family.SUB_FBM, H, 1.0, dimension)

    @classmethod
    def bi_fbm(cls, H0: float, K0: float, dimension: int = 1) -> "ProcessSpec":
        return cls(Family.BI_FBM, H0, K0, dimension)

    @property
    def H_eff(self) -> float:
        """Self-similarity index (``H0*K0`` for bi-fBm)."""
        return self.H * self.K

    @property
    def hurst_params(self) -> tuple[float, ...]:
        return (self.H, self.K) if self.family is Family.BI_FBM else (self.H,)

    def with_dimension(self, d: int) -> "ProcessSpec":
        return ProcessSpec(self.family, self.H, self.K, d)

    def label(self) -> str:
        if self.family is Family.BI_FBM:
            return f"bi_fbm(H0={self.H:g},K0={self.K:g},d={self.dimension})"
        return f"{self.family.value}(H={self.H:g},d={self.dimension})"


def _check_times(*arrays):
    for x in arrays:
        if np.any(np.asarray(x) < 0):
            raise DomainError("times must be non-negative")


def _pow(x, p):
    # x**p with 0**p = 0 for p > 0, on arrays
    return np.power(np.asarray(x, dtype=float), p)


def _powm1(x, p):
    """(1 + x)**p - 1 without cancellation for small x."""
    return np.expm1(p * np.log1p(x))


def covariance(spec: ProcessSpec, s, t):
    """Covariance of one coordinate, ``E[X_s X_t]``; broadcasts over arrays."""
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    _check_times(s, t)
    H, K = spec.H, spec.K
    # scale out the larger time; x = min/max in [0, 1] avoids cancellation when s >> t
    hi = np.maximum(s, t)
    lo = np.minimum(s, t)
    with np.errstate(divide="ignore", invalid="ignore"):
        x = np.where(hi > 0, lo / np.where(hi > 0, hi, 1.0), 0.0)
        if spec.family is Family.FBM:
            out = 0.5 * _pow(hi, 2 * H) * (_pow(x, 2 * H) - _powm1(-x, 2 * H))
        elif spec.family is Family.BI_FBM:
            out = 2.0 ** (-K) * _pow(hi, 2 * H * K) * (_powm1(_pow(x, 2 * H), K) - _powm1(-x, 2 * H * K))
        else:
            xb = np.atleast_1d(x)
            excess = _even_binomial_excess(2 * H, xb).reshape(np.shape(x))
            out = _pow(hi, 2 * H) * (_pow(x, 2 * H) - 0.5 * excess)
    # the process starts at 0; keep that exact
    out = np.where(lo == 0, 0.0, out)
    return out if out.ndim else float(out)


def variance(spec: ProcessSpec, t):
    """``Var(X_t)`` of one coordinate (exact diagonal of :func:`covariance`)."""
    t = np.asarray(t, dtype=float)
    _check_times(t)
    He = spec.H_eff
    if spec.family is Family.SUB_FBM:
        out = (2.0 - 2.0 ** (2 * spec.H - 1)) * _pow(t, 2 * spec.H)
    else:
        out = _pow(t, 2 * He)
    return out if out.ndim else float(out)


def _rough_part(alpha: float, a, b, c, d):
    # Cov of increments for the |t-s|^{2 alpha} kernel (fBm-like part)
    return 0.5 * (
        _pow(np.abs(a - d), 2 * alpha) + _pow(np.abs(b - c), 2 * alpha)
        - _pow(np.abs(a - c), 2 * alpha) - _pow(np.abs(b - d), 2 * alpha)
    )


def increment_covariance(spec: ProcessSpec, a, b, c, d):
    """``Cov(X_a - X_b, X_c - X_d)`` for one coordinate.

    The non-smooth ``|t-s|`` part of each covariance is combined in closed
    form and the separable ``t^{2H} + s^{2H}`` parts cancel exactly, which
    keeps the result accurate when the increments are short compared with
    their distance from the origin.
    """
    a, b, c, d = (np.asarray(x, dtype=float) for x in (a, b, c, d))
    _check_times(a, b, c, d)
    H, K = spec.H, spec.K
    if spec.family is Family.FBM:
        out = _rough_part(H, a, b, c, d)
    elif spec.family is Family.SUB_FBM:
        smooth = _pow(a + c, 2 * H) - _pow(a + d, 2 * H) - _pow(b + c, 2 * H) + _pow(b + d, 2 * H)
        out = _rough_part(H, a, b, c, d) - 0.5 * smooth

    else:
        def P(x, y):
            return _pow(_pow(x, 2 * H) + _pow(y, 2 * H), K)

        smooth = P(a, c) - P(a, d) - P(b, c) + P(b, d)
        out = 2.0 ** (1 - K) * _rough_part(H * K, a, b, c, d) + 2.0 ** (-K) * smooth
    return out if out.ndim else float(out)


def increment_variance(spec: ProcessSpec, t, h):
    """``Var(X_{t+h} - X_t)`` of one coordinate, evaluated from ``h`` directly."""
    t = np.asarray(t, dtype=float)
    h = np.asarray(h, dtype=float)
    _check_times(t)
    if np.any(h <= 0):
        raise DomainError("increment length h must be positive")
    H, K = spec.H, spec.K
    if spec.family is Family.FBM:
        out = _pow(h, 2 * H) * np.ones_like(t)
    elif spec.family is Family.SUB_FBM:
        # (2t+2h)^{2H} - 2(2t+h)^{2H} + (2t)^{2H}, written relative to (2t)^{2H} when h <= t
        rel = (t > 0) & (h <= t)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            u = np.where(rel, h / np.where(t > 0, t, 1.0), 0.0)
            second = np.where(
                rel,
                _pow(2 * t, 2 * H) * (_powm1(u, 2 * H) - 2.0 * _powm1(0.5 * u, 2 * H)),
                _pow(2 * t + 2 * h, 2 * H) - 2.0 * _pow(2 * t + h, 2 * H) + _pow(2 * t, 2 * H),
            )
        out = _pow(h, 2 * H) - 0.5 * second
    else:
        # 2^{1-K} h^{2HK} + (t+h)^{2HK} + t^{2HK} - 2^{1-K}((t+h)^{2H} + t^{2H})^K
        rel = (t > 0) & (h <= t)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            tt = np.where(rel, t, 1.0)
            u = np.where(rel, h / tt, 0.0)
            e2 = _powm1(u, 2 * H)
            smooth_rel = _pow(tt, 2 * H * K) * (_powm1(u, 2 * H * K) - 2.0 * np.expm1(K * np.log1p(0.5 * e2)))
            smooth_abs = (_pow(t + h, 2 * H * K) + _pow(t, 2 * H * K)
                          - 2.0 ** (1 - K) * _pow(_pow(t + h, 2 * H) + _pow(t, 2 * H), K))
        smooth = np.where(rel, smooth_rel, smooth_abs)
        out = 2.0 ** (1 - K) * _pow(h, 2 * H * K) + smooth
    return out if out.ndim else float(out)


# ----------------------------------------------------------------------------
# Assumption (A)


@dataclass
class AssumptionAReport:
    """Result of :func:`check_assumption_A`.

    ``phi_envelope`` holds ``(eps, phi_hat(eps))`` rows sorted by ``eps``. The
    envelope is the running maximum of the raw deviations starting from the
    smallest ``eps``, so it shrinks as ``eps -> 0``.
    """

    sigma_hat: float
    phi_envelope: list[tuple[float, float]]
    eta: float
    passed: bool
    phi_raw: list[float] = field(default_factory=list)
    tolerance: float = 1e-2

    @property
    def pass_(self) -> bool:
        return self.passed

    def phi(self, eps: float) -> float:
        """Envelope value at the smallest grid point ``>= eps``."""
        for e, p in self.phi_envelope:
            if e >= eps * (1 - 1e-12):
                return p
        return self.phi_envelope[-1][1]

    def to_csv(self, path) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            fh.write(f"# sigma_hat={self.sigma_hat!r} eta={self.eta!r} pass={self.passed}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["eps", "phi_raw", "phi_envelope"])
            for (e, p), r in zip(self.phi_envelope, self.phi_raw):
                w.writerow([repr(e), repr(r), repr(p)])
        return path

    def summary(self) -> str:
        e0, p0 = self.phi_envelope[0]
        return (f"Assumption A: sigma_hat={self.sigma_hat:.10g}, phi_hat({e0:.3g})={p0:.3g}, "
                f"eta={self.eta:g}, pass={self.passed}")


def check_assumption_A(
    spec: ProcessSpec,
    t_grid: Sequence[float],
    h_over_t_grid: Sequence[float],
    eta: float | None = None,
    tol: float = 1e-2,
) -> AssumptionAReport:
    """Fit ``sigma`` and the envelope ``phi`` of the increment-variance sandwich.

    For every ``t`` in ``t_grid`` and ``eps`` in ``h_over_t_grid`` the ratio
    ``Var(X_{t+h}-X_t)/h^{2H}`` with ``h = eps*t`` is evaluated. ``sigma_hat``
    is the median ratio in the smallest-``eps`` stratum.
    """
    t = np.asarray(t_grid, dtype=float)
    eps = np.sort(np.asarray(h_over_t_grid, dtype=float))
    if np.any(t <= 0) or np.any(eps <= 0):
        raise DomainError("grids must be positive")
    if eta is None:
        eta = max(1.0, 1.0 / eps[-1])
    if eta < 1.0 or eps[-1] > 1.0 / eta * (1 + 1e-12):
        raise DomainError("h/t must not exceed 1/eta with eta >= 1")
    He = spec.H_eff
    T, E = np.meshgrid(t, eps, indexing="ij")
    h = E * T
    ratio = increment_variance(spec, T, h) / np.power(h, 2 * He)
    sigma_hat = float(np.median(ratio[:, 0]))
    raw = np.max(np.abs(ratio - sigma_hat), axis=0)
    env = np.maximum.accumulate(raw)
    passed = bool(env[0] < tol and sigma_hat - env[0] > 0)
    return AssumptionAReport(
        sigma_hat=sigma_hat,
        phi_envelope=[(float(e), float(p)) for e, p in zip(eps, env)],
        eta=float(eta),
        passed=passed,
        phi_raw=[float(r) for r in raw],
        tolerance=tol,
    )


# ----------------------------------------------------------------------------
# Assumption (B)


@dataclass
class AssumptionBReport:
    psi_envelope: list[tuple[float, float]]
    regimes_checked: list[str]
    passed: bool
    psi_raw: list[float] = field(default_factory=list)
    per_regime: dict[str, list[float]] = field(default_factory=dict)
    samples: int = 0
    warnings: int = 0
    tolerance: float = 0.1

    def to_csv(self, path) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            fh.write(f"# regimes={','.join(self.regimes_checked)} warnings={self.warnings} pass={self.passed}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["eta", "psi_raw", "psi_envelope", "samples"])
            for (e, p), r in zip(self.psi_envelope, self.psi_raw):
                w.writerow([repr(e), repr(r), repr(p), self.samples])
        return path

    def summary(self) -> str:
        e1, p1 = self.psi_envelope[-1]
        return (f"Assumption B: psi_hat({e1:g})={p1:.3g} over regimes {'/'.join(self.regimes_checked)}, "
                f"warnings={self.warnings}, pass={self.passed}")


def _stratified(rng: np.random.Generator, n: int) -> np.ndarray:
    u = (np.arange(n) + rng.random(n)) / n
    return rng.permutation(u)


def _regime_quadruples(regime: str, eta: float, n: int, rng: np.random.Generator):
    """Sample ``t1 < t2 < t3 < t4`` admissible for ``regime`` at ratio parameter ``eta``.

    Lengths are normalized so the longer reference increment is 1 (the
    correlation is scale invariant); the offset ``t1`` and the gap ``dt3``
    are log-uniform over eight decades, and the ratio is log-uniform over
    three decades beyond the admissibility boundary.
    """
    beyond = 10.0 ** (-3.0 * _stratified(rng, n))
    t1 = 10.0 ** (-4.0 + 8.0 * _stratified(rng, n))
    if regime == "i":
        d4 = np.ones(n)
        d2 = beyond / eta
        d3 = 10.0 ** (-4.0 + 8.0 * _stratified(rng, n))
    elif regime == "ii":
        d2 = np.ones(n)
        d4 = beyond / eta
        d3 = 10.0 ** (-4.0 + 8.0 * _stratified(rng, n))
    else:
        d3 = np.ones(n)
        d2 = beyond / eta
        d4 = 10.0 ** (-3.0 * _stratified(rng, n)) / eta
    t2 = t1 + d2
    t3 = t2 + d3
    t4 = t3 + d4
    return t1, t2, t3, t4


def increment_correlation(spec: ProcessSpec, t1, t2, t3, t4):
    """Correlation of ``X_{t4}-X_{t3}`` and ``X_{t2}-X_{t1}``."""
    cov = increment_covariance(spec, t4, t3, t2, t1)
    v1 = increment_variance(spec, np.asarray(t3, float), np.asarray(t4, float) - np.asarray(t3, float))
    v2 = increment_variance(spec, np.asarray(t1, float), np.asarray(t2, float) - np.asarray(t1, float))
    return cov / np.sqrt(v1 * v2)


def check_assumption_B(
    spec: ProcessSpec,
    eta_grid: Sequence[float],
    seed: int,
    samples: int = 10_000,
    tol: float = 0.1,
    regimes: Sequence[str] = ("i", "ii", "iii"),
) -> AssumptionBReport:
    """Envelope ``psi_hat(eta)`` of increment correlations in the three regimes."""
    etas = np.sort(np.asarray(eta_grid, dtype=float))
    if np.any(etas <= 1.0):
        raise DomainError("eta grid entries must exceed 1")
    rng = np.random.Generator(np.random.Philox(key=[int(seed) % 2**64, 0xB]))
    raw = np.zeros(etas.size)
    per_regime = {r: [] for r in regimes}
    warnings = 0
    for k, eta in enumerate(etas):
        for regime in regimes:
            quad = _regime_quadruples(regime, eta, samples, rng)
            with np.errstate(invalid="ignore", divide="ignore"):
                corr = np.abs(increment_correlation(spec, *quad))
            bad = ~np.isfinite(corr)
            warnings += int(np.count_nonzero(bad))
            m = float(np.max(corr[~bad])) if np.any(~bad) else float("nan")
            per_regime[regime].append(m)
            raw[k] = max(raw[k], m)
    env = np.maximum.accumulate(raw[::-1])[::-1]
    passed = bool(env[-1] < tol and np.all(np.isfinite(env)))
    return AssumptionBReport(
        psi_envelope=[(float(e), float(p)) for e, p in zip(etas, env)],
        regimes_checked=list(regimes),
        passed=passed,
        psi_raw=[float(r) for r in raw],
        per_regime=per_regime,
        samples=samples,
        warnings=warnings,
        tolerance=tol,
    )


# ----------------------------------------------------------------------------
# Lamperti transform and spectral criterion


def _even_binomial_excess(a: float, x: np.ndarray, om: np.ndarray | None = None) -> np.ndarray:
    """``(1+x)^a + (1-x)^a - 2`` for ``0 <= x < 1``, accurate for small ``x``.

    ``om``, if given, is ``1 - x`` computed to full relative accuracy; it
    matters when ``x`` is within rounding of 1.
    """
    out = np.empty_like(x)
    small = x < 0.25
    xs = x[small]
    # 2 * sum_{k>=1} binom(a, 2k) x^{2k}
    acc = np.zeros_like(xs)
    coef = 1.0
    x2 = xs * xs
    term = np.ones_like(xs)
    for k in range(1, 40):
        j = 2 * k
        coef *= (a - (j - 2)) * (a - (j - 1)) / ((j - 1) * j)
        term = term * x2
        acc += coef * term
    out[small] = 2.0 * acc
    xl = x[~small]
    with np.errstate(divide="ignore"):
        if om is None:
            out[~small] = _powm1(xl, a) + _powm1(-xl, a)
        else:
            out[~small] = _powm1(xl, a) + np.expm1(a * np.log(om[~small]))
    return out


def stationarized_r(spec: ProcessSpec, t):
    """``r(t) = e^{-H t} Cov(X_1, X_{e^t})`` for one coordinate, even in ``t``.

    ``H`` here is the self-similarity index. The closed forms are rewritten
    with ``expm1``/``log1p`` so the exponentially small tail is evaluated
    without cancellation.
    """
    t = np.abs(np.asarray(t, dtype=float))
    x = np.exp(-t)
    om = -np.expm1(-t)  # 1 - x, accurate for tiny t
    H, K = spec.H, spec.K
    with np.errstate(divide="ignore"):
        # log(1 - x): from om near t = 0, from x in the tail; -inf at t = 0
        lm = np.where(t < math.log(2.0), np.log(om), np.log1p(-x))
    if spec.family is Family.FBM:
        out = 0.5 * (np.exp(-H * t) + np.exp(H * t) * -np.expm1(2 * H * lm))
    elif spec.family is Family.BI_FBM:
        out = 2.0 ** (-K) * np.exp(H * K * t) * (
            np.expm1(K * np.log1p(np.exp(-2 * H * t))) - np.expm1(2 * H * K * lm)
        )
    else:
        out = np.exp(H * t) * (np.exp(-2 * H * t) - 0.5 * _even_binomial_excess(2 * H, x, om))
    return out if out.ndim else float(out)


@dataclass
class RShape:
    positive: bool
    strictly_decreasing: bool
    integrable_tail_estimate: float

    def __getitem__(self, key):
        return getattr(self, key)


def check_r_shape(spec: ProcessSpec, t_grid: Sequence[float]) -> RShape:
    """Positivity and strict monotonicity of ``r`` on a grid, plus a tail estimate.

    The tail estimate extrapolates the last two grid values exponentially and
    integrates that exponential beyond the grid end.
    """
    t = np.asarray(t_grid, dtype=float)
    r = stationarized_r(spec, t)
    positive = bool(np.all(r > 0))
    decreasing = bool(np.all(np.diff(r) < 0))
    tail = float("inf")
    if t.size >= 2 and r[-1] > 0 and r[-2] > r[-1]:
        rate = math.log(r[-2] / r[-1]) / (t[-1] - t[-2])
        tail = float(r[-1] / rate)
    return RShape(positive, decreasing, tail)


@dataclass
class _RTail:
    T: float
    rate: float
    bound: float


def _r_truncation(spec: ProcessSpec, level: float = 1e-12) -> _RTail:
    T = 8.0
    while stationarized_r(spec, T) >= level:
        T *= 1.5
        if T > 1e5:
            raise QuadratureError("stationarized covariance does not decay", float("nan"), float("nan"))
    r1, r2 = stationarized_r(spec, T - 1.0), stationarized_r(spec, T)
    rate = math.log(r1 / r2)
    return _RTail(T, rate, r2 / rate)


def spectral_integral(spec: ProcessSpec, lam: float, rtol: float = 1e-10, return_error: bool = False):
    """``int_0^inf r(t) cos(lam t) dt`` by adaptive panels up to ``T*``.

    ``T*`` is where ``r`` drops below 1e-12; the neglected tail is bounded by
    the exponential extrapolation ``r(T*)/rate`` and added to the error
    estimate. For ``|lam| > 1`` the panels are split at the zeros of the
    cosine.
    """
    lam = abs(float(lam))
    tail = _r_truncation(spec)
    T = tail.T
    if lam > 1.0:
        zeros = (np.arange(0, int(lam * T / np.pi) + 1) + 0.5) * np.pi / lam
        zeros = zeros[zeros < T]
        head = np.geomspace(min(1e-8, zeros[0] / 10), zeros[0], 8)[:-1] if zeros.size else []
        bp = np.concatenate([[0.0], head, zeros, [T]])
    else:
        bp = np.concatenate([[0.0], np.geomspace(1e-8, 1.0, 9), np.arange(2.0, T, 2.0), [T]])
    bp = np.unique(bp)

    def integrand(x):
        return stationarized_r(spec, x) * np.cos(lam * x)

    val, err = gk_integrate(integrand, bp, rtol=rtol, atol=1e-15)
    err += tail.bound
    if not np.isfinite(val):
        raise QuadratureError("spectral integral not finite", val, err)
    return (val, err) if return_error else val


@dataclass
class SpectralCheck:
    c_hat: float
    passed: bool
    lambdas: list[float] = field(default_factory=list)
    values: list[float] = field(default_factory=list)
    noise_floor: float = 0.0

    def __getitem__(self, key):
        return {"c_hat": self.c_hat, "pass": self.passed}.get(key, getattr(self, key, None))


def check_slnd_spectral(spec: ProcessSpec, lambda_max: float, n_points: int) -> SpectralCheck:
    """Witness for the spectral lower bound ``c/(|lambda|+1)^{1+2H}``.

    ``c_hat`` is the minimum of ``spectral_integral(lambda) (|lambda|+1)^{1+2H}``
    over ``n_points`` levels in ``[0, lambda_max]`` (half linear, half
    geometric). ``noise_floor`` is the largest quadrature error estimate after
    the same rescaling; ``pass`` requires ``c_hat`` to exceed it.
    """
    if lambda_max <= 0:
        raise DomainError("lambda_max must be positive")
    n_lin = max(2, n_points // 2)
    lams = np.unique(np.concatenate([
        np.linspace(0.0, lambda_max, n_lin),
        np.geomspace(min(1e-2, lambda_max), lambda_max, max(2, n_points - n_lin)),
    ]))
    He = spec.H_eff
    vals, scaled, floor = [], [], 0.0
    for lam in lams:
        v, e = spectral_integral(spec, lam, return_error=True)
        w = (abs(lam) + 1.0) ** (1 + 2 * He)
        vals.append(v)
        scaled.append(v * w)
        floor = max(floor, e * w)
    c_hat = float(min(scaled))
    return SpectralCheck(c_hat, bool(c_hat > floor), [float(x) for x in lams], vals, floor)
