"""Occupation functionals, local-time estimates and the limit-theorem statistics.

Time integrals use the trapezoid rule on the path grid. The kernel width
``n^{-H}`` must cover several typical grid displacements; the rule is
``n^{-H} >= multiple * dt^{H}`` with ``multiple = 8`` by default, and a
:class:`ResolutionError` is raised otherwise.

Centering local time
--------------------
The statistic ``F_n`` subtracts ``n^{-Hd} L_t(lambda) * int f``. The true
local time is replaced by :func:`reference_local_time`, the expected
occupation density given the grid values on each step: inside step
``[t_k, t_{k+1}]`` the path is Gaussian given ``(X_{t_k}, X_{t_{k+1}})`` with
a mean and variance computed exactly from the covariance, so the density
at ``lambda`` is integrated over the step with Gauss-Legendre nodes. This
removes the kernel bias that any finite-bandwidth reference would carry.

Second-derivative convention
----------------------------
``L^{(e_i+e_k)}`` denotes the mixed partial derivative
``d^2 L / d lambda_i d lambda_k``. It is computed in
:func:`local_time_derivative` from second differences along
``u = (e_i + e_k)/|e_i + e_k|`` by polarization
``d_i d_k L = u^T (D^2 L) u - (d_i^2 L + d_k^2 L)/2`` (for ``i = k`` this is
the plain second difference along ``e_i``).
"""
from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .errors import DomainError, RegimeError, ResolutionError
from .process_models import ProcessSpec, increment_covariance, increment_variance, variance
from .simulate import GridPath

DEFAULT_MULTIPLE = 8.0
BRIDGE_NODES = 32


class FunctionFamily(str, enum.Enum):
    GAUSS = "gauss"
    X_GAUSS = "x_gauss"
    BOX = "box"


_KERNEL_KIND = {FunctionFamily.GAUSS: kernels.GAUSS, FunctionFamily.X_GAUSS: kernels.X_GAUSS,
                FunctionFamily.BOX: kernels.BOX}


@dataclass(frozen=True)
class TestFunction:
    """Built-in test function on ``R^d``, optionally scaled by ``weight``.

    ``GAUSS`` is the standard normal density, ``X_GAUSS`` is ``x_1`` times it
    and ``BOX`` is the normalized indicator of ``[-1, 1]^d``.
    """

    family: FunctionFamily
    dimension: int = 1
    weight: float = 1.0

    __test__ = False  # not a pytest class

    def __post_init__(self):
        object.__setattr__(self, "family", FunctionFamily(self.family))
        if int(self.dimension) != self.dimension or self.dimension < 1:
            raise DomainError("dimension must be a positive integer")
        object.__setattr__(self, "dimension", int(self.dimension))
        object.__setattr__(self, "weight", float(self.weight))

    @property
    def beta_class(self) -> int:
        return 1 if self.family is FunctionFamily.X_GAUSS else 2

    @property
    def is_zero(self) -> bool:
        return self.weight == 0.0

    @property
    def total_mass(self) -> float:
        return 0.0 if self.family is FunctionFamily.X_GAUSS else self.weight

    @property
    def first_moment(self) -> np.ndarray:
        m = np.zeros(self.dimension)
        if self.family is FunctionFamily.X_GAUSS:
            m[0] = self.weight
        return m

    @property
    def second_moment(self) -> np.ndarray:
        d = self.dimension
        if self.family is FunctionFamily.GAUSS:
            return self.weight * np.eye(d)
        if self.family is FunctionFamily.BOX:
            return self.weight * np.eye(d) / 3.0
        return np.zeros((d, d))

    @property
    def kernel_kind(self) -> int:
        return _KERNEL_KIND[self.family]

    def __call__(self, x) -> np.ndarray:
        """Evaluate at points ``x`` of shape ``(..., d)``."""
        x = np.asarray(x, dtype=float)
        if self.dimension == 1 and (x.ndim == 0 or x.shape[-1] != 1):
            x = x[..., None]
        z = np.moveaxis(x, -1, 0).reshape(self.dimension, -1)
        from ._pykernels import _profile

        return self.weight * _profile(z, self.kernel_kind).reshape(x.shape[:-1])


class Regime(str, enum.Enum):
    SUPER = "super"
    CRITICAL = "critical"


def classify_regime(H: float, d: int, beta: int, tol: float = 1e-12) -> Regime:
    """Regime of ``F_n`` for ``(H, d, beta)``; raises outside both."""
    crit = 1.0 / (2 * beta + d)
    if H * d >= 1.0:
        raise RegimeError(f"H*d = {H * d:g} >= 1: no local time")
    if abs(H - crit) <= tol:
        return Regime.CRITICAL
    if H < crit:
        raise RegimeError(f"H = {H:g} below 1/(2*beta+d) = {crit:g}; use the derivative statistic")
    return Regime.SUPER


def normalization(n: float, H: float, d: int, regime: Regime) -> float:
    """``n^{(Hd+1)/2}``, times ``(ln n)^{-1/2}`` in the critical regime."""
    ell = n ** ((H * d + 1.0) / 2.0)
    if regime is Regime.CRITICAL:
        ell /= math.sqrt(math.log(n))
    return ell


# ----------------------------------------------------------------------------
# resolution and time handling


def max_admissible_n(H: float, dt: float, multiple: float = DEFAULT_MULTIPLE) -> float:
    """Largest ``n`` with ``n^{-H} >= multiple * dt^H``."""
    return (1.0 / dt) * multiple ** (-1.0 / H)


def check_resolution(path: GridPath, n: float, multiple: float = DEFAULT_MULTIPLE) -> None:
    H = path.spec.H_eff
    if n <= 0:
        raise DomainError("n must be positive")
    if n ** (-H) < multiple * path.dt ** H * (1 - 1e-12):
        raise ResolutionError(
            f"kernel width n^-H = {n ** (-H):.4g} below {multiple:g} * dt^H = {multiple * path.dt ** H:.4g}; "
            f"largest admissible n is {max_admissible_n(H, path.dt, multiple):.4g}"
        )


def _time_breaks(path: GridPath, t_list):
    t = np.atleast_1d(np.asarray(t_list, dtype=float))
    if np.any(t < 0) or np.any(t > path.t_max * (1 + 1e-12)):
        raise DomainError("evaluation times must lie in [0, t_max]")
    pos = np.clip(t / path.dt, 0, path.n_steps)
    lo = np.floor(pos + 1e-9).astype(np.int64)
    lo = np.minimum(lo, path.n_steps)
    frac = pos - lo
    frac[np.abs(frac) < 1e-9] = 0.0
    hi = np.minimum(lo + (frac > 0), path.n_steps)
    breaks = np.unique(np.concatenate([lo, hi]))
    return breaks, np.searchsorted(breaks, lo), np.searchsorted(breaks, hi), frac


def _interp(cum: np.ndarray, ilo, ihi, frac) -> np.ndarray:
    return cum[..., ilo] * (1 - frac) + cum[..., ihi] * frac


def _levels(lam, d: int) -> tuple[np.ndarray, bool]:
    lv = np.asarray(lam, dtype=float)
    if lv.ndim == 0:
        lv = lv.reshape(1, 1)
        single = True
    elif lv.ndim == 1:
        if d == 1:
            single = lv.size == 1
            lv = lv.reshape(-1, 1)
        else:
            if lv.size != d:
                raise DomainError(f"level must have {d} coordinates")
            lv = lv.reshape(1, d)
            single = True
    else:
        single = False
    if lv.shape[1] != d:
        raise DomainError(f"levels must have {d} coordinates")
    return np.ascontiguousarray(lv), single


def _raw_integral(path: GridPath, f: TestFunction, lam, n: float, t_list, multiple: float) -> np.ndarray:
    """``int_0^t f(n^H (X_s - lam)) ds`` for each level and time, shape (L, T)."""
    if f.dimension != path.dimension:
        raise DomainError("test function and path dimensions differ")
    check_resolution(path, n, multiple)
    lv, _ = _levels(lam, path.dimension)
    breaks, ilo, ihi, frac = _time_breaks(path, t_list)
    X = np.ascontiguousarray(path.values)
    cum = kernels.occupation_sums(X, lv, n ** path.spec.H_eff, f.kernel_kind, breaks, path.dt)
    return f.weight * _interp(np.asarray(cum), ilo, ihi, frac)


def occupation_functional(path: GridPath, f: TestFunction, lam, n: float, t: float,
                          multiple: float = DEFAULT_MULTIPLE) -> float:
    """``n^{Hd} int_0^t f(n^H (X_s - lam)) ds`` by the trapezoid rule."""
    H, d = path.spec.H_eff, path.dimension
    return float(n ** (H * d) * _raw_integral(path, f, lam, n, [t], multiple)[0, 0])


def local_time_estimate(path: GridPath, lam, n: float, t_list, multiple: float = DEFAULT_MULTIPLE) -> np.ndarray:
    """Gaussian-kernel local time estimate at each time in ``t_list``.

    ``lam`` may be a single level or an ``(L, d)`` array of levels, in which
    case the result has shape ``(L, len(t_list))``.
    """
    H, d = path.spec.H_eff, path.dimension
    g = TestFunction(FunctionFamily.GAUSS, d)
    out = n ** (H * d) * _raw_integral(path, g, lam, n, t_list, multiple)
    _, single = _levels(lam, d)
    return out[0] if single else out


# ----------------------------------------------------------------------------
# bridge-conditioned reference local time


@functools.lru_cache(maxsize=8)
def bridge_coefficients(spec: ProcessSpec, t_max: float, N: int, nodes: int = BRIDGE_NODES):
    """Per-step conditional law of ``X_u`` given ``(X_{t_k}, X_{t_{k+1}})``.

    Returns ``A, B, V`` of shape ``(N, nodes)`` and weights ``w`` on [0, 1]
    such that ``X_u | ... ~ N(X_k + A X_k + B (X_{k+1} - X_k), V)`` at
    ``u = t_k + theta_q dt``.
    """
    x, w = np.polynomial.legendre.leggauss(nodes)
    theta = 0.5 * (x + 1.0)
    w = 0.5 * w
    dt = t_max / N
    a = (np.arange(N) * dt)[:, None]
    b = a + dt
    u = a + theta[None, :] * dt
    zero = np.zeros_like(a)
    c_y_a = increment_covariance(spec, u, a, a, zero)        # Cov(Y, X_a)
    c_y_d = increment_covariance(spec, u, a, b, a)           # Cov(Y, D)
    v_a = variance(spec, a)
    c_a_d = increment_covariance(spec, a, zero, b, a)
    v_d = increment_variance(spec, a, np.full_like(a, dt))
    v_y = increment_variance(spec, np.broadcast_to(a, u.shape), theta[None, :] * dt)
    det = v_a * v_d - c_a_d ** 2
    with np.errstate(invalid="ignore", divide="ignore"):
        A = np.where(v_a > 0, (c_y_a * v_d - c_y_d * c_a_d) / det, 0.0)
        B = np.where(v_a > 0, (c_y_d * v_a - c_y_a * c_a_d) / det, c_y_d / v_d)
    V = v_y - A * c_y_a - B * c_y_d
    V = np.maximum(V, 1e-300)
    out = tuple(np.ascontiguousarray(z, dtype=float) for z in (A, B, V))
    for z in out:
        z.setflags(write=False)
    w = np.ascontiguousarray(w)
    w.setflags(write=False)
    return out + (w,)


def reference_local_time(path: GridPath, lam, t_list, bandwidth: float = 0.0,
                         nodes: int = BRIDGE_NODES) -> np.ndarray:
    """Local time from the step-wise Gaussian bridge (see module notes).

    With ``bandwidth = h > 0`` the result is instead the expected Gaussian
    kernel occupation ``E[int phi_h(X_s - lam) ds | grid]``.
    """
    d = path.dimension
    lv, single = _levels(lam, d)
    A, B, V, w = bridge_coefficients(path.spec, float(path.t_max), int(path.n_steps), nodes)
    breaks, ilo, ihi, frac = _time_breaks(path, t_list)
    X = np.ascontiguousarray(path.values)
    cum = kernels.bridge_sums(X, lv, A, B, V, w, float(bandwidth) ** 2, breaks, path.dt)
    out = _interp(np.asarray(cum), ilo, ihi, frac)
    return out[0] if single else out


# ----------------------------------------------------------------------------
# F_n


@dataclass
class FnStatistic:
    n: float
    lam: np.ndarray
    t_list: np.ndarray
    values: np.ndarray
    regime: Regime

    @property
    def lambda_(self) -> np.ndarray:
        return self.lam


def _reference_values(path: GridPath, lam, t_list, reference, multiple: float) -> np.ndarray:
    if reference is None or (isinstance(reference, str) and reference == "bridge"):
        return np.atleast_1d(reference_local_time(path, lam, t_list))
    if isinstance(reference, str) and reference == "finest":
        n_ref = math.floor(max_admissible_n(path.spec.H_eff, path.dt, multiple))
        return np.atleast_1d(local_time_estimate(path, lam, n_ref, t_list, multiple))
    if isinstance(reference, (int, float)):
        return np.atleast_1d(local_time_estimate(path, lam, float(reference), t_list, multiple))
    ref = np.atleast_1d(np.asarray(reference, dtype=float))
    if ref.shape != np.shape(np.atleast_1d(t_list)):
        raise DomainError("reference local times must match t_list")
    return ref


def f_n_statistic(path: GridPath, f: TestFunction, lam, n: float, t_list, reference=None,
                  multiple: float = DEFAULT_MULTIPLE) -> FnStatistic:
    """Normalized fluctuation ``ell_n (int_0^t f(n^H(X_s - lam)) ds - n^{-Hd} L_t(lam) int f)``.

    ``reference`` selects the centering local time: ``None``/``"bridge"``
    (default, :func:`reference_local_time`), ``"finest"`` (kernel estimate at
    the largest admissible scale), a number ``n_ref``, or precomputed values.
    """
    H, d = path.spec.H_eff, path.dimension
    regime = classify_regime(H, d, f.beta_class)
    t_arr = np.atleast_1d(np.asarray(t_list, dtype=float))
    raw = _raw_integral(path, f, lam, n, t_arr, multiple)[0]
    mass = f.total_mass
    if mass != 0.0:
        raw = raw - n ** (-H * d) * mass * _reference_values(path, lam, t_arr, reference, multiple)
    values = normalization(n, H, d, regime) * raw
    return FnStatistic(float(n), np.atleast_1d(np.asarray(lam, dtype=float)), t_arr, values, regime)


# ----------------------------------------------------------------------------
# derivatives of the local time and the derivative statistic


def _lt_at(path: GridPath, levels: np.ndarray, n: float, t: float, multiple: float) -> np.ndarray:
    return local_time_estimate(path, levels, n, [t], multiple)[:, 0]


def local_time_derivative(path: GridPath, lam, n: float, direction, delta: float | None = None,
                          t: float | None = None, multiple: float = DEFAULT_MULTIPLE) -> float:
    """Finite-difference derivative of the kernel local time ``L_t`` at ``lam``.

    ``direction`` is either a vector ``u`` (first order, central difference
    ``(L(lam + delta u) - L(lam - delta u)) / (2 delta)``; pass a unit vector
    for the directional derivative) or a pair of axis indices ``(i, k)`` for
    the mixed second partial ``L^{(e_i+e_k)}`` described in the module notes.
    ``delta`` defaults to ``2 n^{-H}``.
    """
    H, d = path.spec.H_eff, path.dimension
    h = n ** (-H)
    delta = 2.0 * h if delta is None else float(delta)
    if delta <= 0:
        raise DomainError("delta must be positive")
    if delta < 1e-4 * h:
        raise ResolutionError(f"delta = {delta:.3g} below the difference-quotient floor 1e-4 * n^-H = {1e-4 * h:.3g}")
    t = path.t_max if t is None else float(t)
    lam = np.asarray(lam, dtype=float).reshape(d)
    if isinstance(direction, tuple) and len(direction) == 2 and all(isinstance(v, (int, np.integer)) for v in direction):
        i, k = direction
        e_i, e_k = np.eye(d)[i], np.eye(d)[k]

        def second(u):
            pts = np.stack([lam + delta * u, lam, lam - delta * u])
            L = _lt_at(path, pts, n, t, multiple)
            return (L[0] - 2 * L[1] + L[2]) / delta ** 2

        if i == k:
            return float(second(e_i))
        u = (e_i + e_k) / math.sqrt(2.0)
        return float(second(u) - 0.5 * (second(e_i) + second(e_k)))
    u = np.asarray(direction, dtype=float).reshape(d)
    pts = np.stack([lam + delta * u, lam - delta * u])
    L = _lt_at(path, pts, n, t, multiple)
    return float((L[0] - L[1]) / (2 * delta))


@dataclass
class Theorem3Value:
    lhs: float
    rhs: float

    def __getitem__(self, key):
        return getattr(self, key)


def theorem3_statistic(path: GridPath, f: TestFunction, lam, n: float, t: float,
                       multiple: float = DEFAULT_MULTIPLE, reference=None) -> Theorem3Value:
    """Derivative-regime statistic (``H < 1/(2 beta + d)``), one-dimensional paths only.

    ``lhs = n^{H beta} (n^H int_0^t f(n^H(X_s - lam)) ds - L_t(lam) int f)``;
    ``rhs`` is ``L'_t(lam) * int x f`` for ``beta = 1`` and
    ``L''_t(lam) * int x^2 f / 2`` for ``beta = 2``, with kernel local times
    at scale ``n`` and step ``2 n^{-H}``.
    """
    if path.dimension != 1:
        raise DomainError("the derivative statistic is implemented for d = 1 only")
    H = path.spec.H_eff
    beta = f.beta_class
    if H >= 1.0 / (2 * beta + 1):
        raise RegimeError(f"H = {H:g} must lie below 1/(2*beta+d) = {1.0 / (2 * beta + 1):g}")
    occ = occupation_functional(path, f, lam, n, t, multiple)
    if f.total_mass != 0.0:
        occ -= f.total_mass * float(_reference_values(path, lam, [t], reference, multiple)[0])
    lhs = n ** (H * beta) * occ
    if beta == 1:
        rhs = float(f.first_moment[0]) * local_time_derivative(path, lam, n, [1.0], t=t, multiple=multiple)
    else:
        rhs = 0.5 * float(f.second_moment[0, 0]) * local_time_derivative(path, lam, n, (0, 0), t=t, multiple=multiple)
    return Theorem3Value(float(lhs), float(rhs))
