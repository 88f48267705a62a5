"""Moments of the limit ``sqrt(C) W(L_t(lambda))`` and related checks.

For disjoint intervals ``(a_i, b_i]`` and even orders ``m_i`` the moment of
``prod_i [W(L_{b_i}) - W(L_{a_i})]^{m_i}`` is a time integral over the boxes
``prod_i [a_i, b_i]^{m_i/2}`` of a Gaussian integral in ``x``. The
``x``-integral is done in closed form: with ``K(u)`` the covariance of one
coordinate at the times ``u``,

    int exp(-i lam . sum x_j - Var(sum x_j . X_{u_j}) / 2) dx
        = ((2 pi)^{q/2} det K^{-1/2})^d exp(-|lam|^2 1'K^{-1}1 / 2).

The time integral uses randomly shifted Sobol points. Inside each box the
sorted times are parametrized by their spacings, drawn from a Dirichlet law
whose density carries the ``gap^{-Hd}`` singularity of ``det K^{-d/2}``, so
the weights stay bounded.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import special
from scipy.stats import qmc

from .errors import DomainError, HypothesisError
from .functionals import reference_local_time
from .process_models import ProcessSpec, increment_covariance
from .simulate import JITTER, map_replicas, rng_stream, sample_path

QMC_SHIFTS = 3
QMC_POINTS = 1 << 14
_BATCH = 4096
# Gaussian draws of the mixture use streams offset from the path streams
MIXTURE_STREAM = 1 << 32


@dataclass(frozen=True)
class MomentQuery:
    """Disjoint ordered intervals ``(a_i, b_i]`` with orders ``m_i``."""

    intervals: tuple[tuple[float, float], ...]
    m_vec: tuple[int, ...]
    lam: tuple[float, ...]
    spec: ProcessSpec
    C: float = 1.0

    def __post_init__(self):
        iv = tuple((float(a), float(b)) for a, b in self.intervals)
        m = tuple(int(k) for k in self.m_vec)
        lam = tuple(float(v) for v in np.atleast_1d(np.asarray(self.lam, dtype=float)))
        object.__setattr__(self, "intervals", iv)
        object.__setattr__(self, "m_vec", m)
        object.__setattr__(self, "lam", lam)
        if not iv or len(iv) != len(m):
            raise DomainError("need one order per interval and at least one interval")
        if any(k < 1 for k in m):
            raise DomainError("orders must be at least 1")
        prev = 0.0
        for a, b in iv:
            if a < prev or b <= a:
                raise DomainError("intervals must be non-empty, ordered, disjoint and in [0, inf)")
            prev = b
        if len(lam) != self.spec.dimension:
            raise DomainError(f"lambda must have {self.spec.dimension} coordinates")
        if self.C < 0:
            raise DomainError("C must be non-negative")

    @property
    def order(self) -> int:
        return sum(self.m_vec)

    @property
    def is_even(self) -> bool:
        return all(k % 2 == 0 for k in self.m_vec)


@dataclass
class MomentValue:
    value: float
    se: float
    skipped: int = 0
    points: int = 0

    def __float__(self) -> float:
        return self.value


def moment_coefficient(m: int, d: int) -> float:
    """``m! / (2^{m/2} (2 pi)^{m d/2} (m/2)!)`` for even ``m``."""
    h = m // 2
    return math.exp(math.lgamma(m + 1) - h * math.log(2.0) - h * d * math.log(2 * math.pi) - math.lgamma(h + 1))


def _dirichlet_map(U: np.ndarray, alphas: np.ndarray):
    """Stick-breaking map of ``U`` (n, k) to Dirichlet(``alphas``) spacings
    ``w`` (n, k) (the last, leftover spacing is dropped) and the log density."""
    n, k = U.shape
    w = np.empty((n, k))
    rest = np.ones(n)
    tail = np.cumsum(alphas[::-1])[::-1]  # tail[j] = sum_{l >= j} alpha_l
    for j in range(k):
        B = special.betaincinv(alphas[j], tail[j + 1], U[:, j])
        w[:, j] = rest * B
        rest = rest - w[:, j]
    left = np.maximum(rest, 0.0)
    logc = special.gammaln(alphas.sum()) - np.sum(special.gammaln(alphas))
    with np.errstate(divide="ignore"):
        logd = logc + np.sum((alphas[:k] - 1.0) * np.log(w), axis=1) + (alphas[k] - 1.0) * np.log(left)
    return w, logd


def _times_and_logweight(U: np.ndarray, q: Sequence[int], intervals, power: float):
    """Map unit-cube points to ordered times in each box; returns the times
    (n, sum q) and ``log(volume factor / density)`` including the ``q_i!``
    symmetrization of the unordered box."""
    n = U.shape[0]
    cols = []
    logw = np.zeros(n)
    col = 0
    for (a, b), qi in zip(intervals, q):
        if qi == 0:
            continue
        L = b - a
        alphas = np.full(qi + 1, power)
        alphas[-1] = 1.0
        w, logd = _dirichlet_map(U[:, col:col + qi], alphas)
        cols.append(a + L * np.cumsum(w, axis=1))
        logw += qi * math.log(L) - logd + math.lgamma(qi + 1)
        col += qi
    return np.concatenate(cols, axis=1), logw


def _gaussian_factor(spec: ProcessSpec, u: np.ndarray, lam2: float, d: int):
    """``((2pi)^{q/2} det K^{-1/2})^d exp(-lam2 (K^{-1})_{1'1} / 2)`` for sorted
    rows of ``u``; ``None`` entries (NaN) where the Gram matrix is singular."""
    n, q = u.shape
    lo = np.concatenate([np.zeros((n, 1)), u[:, :-1]], axis=1)
    G = increment_covariance(spec, u[:, :, None], lo[:, :, None], u[:, None, :], lo[:, None, :])
    G = 0.5 * (G + np.swapaxes(G, 1, 2))
    out = np.full(n, np.nan)
    try:
        L = np.linalg.cholesky(G)
        good = np.ones(n, dtype=bool)
    except np.linalg.LinAlgError:
        L = np.zeros_like(G)
        good = np.zeros(n, dtype=bool)
        eye = np.eye(q)
        for i in range(n):
            try:
                L[i] = np.linalg.cholesky(G[i])
            except np.linalg.LinAlgError:
                try:
                    L[i] = np.linalg.cholesky(G[i] + JITTER * np.trace(G[i]) * eye)
                except np.linalg.LinAlgError:
                    continue
            good[i] = True
    Lg = L[good]
    diag = np.diagonal(Lg, axis1=1, axis2=2)
    logdet = 2.0 * np.sum(np.log(diag), axis=1)
    # 1'K^{-1}1 equals (G^{-1})_{11} for the increment Gram G
    e1 = np.zeros((Lg.shape[0], q, 1))
    e1[:, 0, 0] = 1.0
    z = np.linalg.solve(Lg, e1)[..., 0]
    quad = np.sum(z * z, axis=1)
    out[good] = np.exp(d * (0.5 * q * math.log(2 * math.pi) - 0.5 * logdet) - 0.5 * lam2 * quad)
    return out


def limit_moment(query: MomentQuery, points: int = QMC_POINTS, shifts: int = QMC_SHIFTS,
                 seed: int = 0) -> MomentValue:
    """``E prod_i [sqrt(C)(W(L_{b_i}) - W(L_{a_i}))]^{m_i}`` with a standard error.

    Zero when some ``m_i`` is odd. ``points`` Sobol points are used under each
    of ``shifts`` independent random shifts; the standard error is the spread
    of the shift means. Points where the Gram matrix cannot be factored are
    skipped and counted.
    """
    if not query.is_even:
        return MomentValue(0.0, 0.0)
    if query.C == 0:
        return MomentValue(0.0, 0.0)
    spec = query.spec
    d = spec.dimension
    q = [m // 2 for m in query.m_vec]
    qt = sum(q)
    Hd = spec.H_eff * d
    if Hd >= 1:
        raise HypothesisError(f"the moment integral needs H d < 1 (got {Hd:g})")
    coef = query.C ** (query.order / 2) * math.prod(moment_coefficient(m, d) for m in query.m_vec)
    lam2 = float(np.dot(query.lam, query.lam))
    power = 1.0 - Hd
    # m = 2 single box with a = 0: points * shifts does not need to be a power of 2
    m_pts = max(1, int(points))
    base = qmc.Sobol(qt, scramble=False).random(1 << max(0, (m_pts - 1).bit_length()))[:m_pts]
    rng = rng_stream(seed, 0x11)
    means = []
    skipped = 0
    for _ in range(shifts):
        U = np.mod(base + rng.random(qt), 1.0)
        U = np.clip(U, 1e-15, 1.0 - 1e-15)
        acc = 0.0
        for lo in range(0, m_pts, _BATCH):
            u, logw = _times_and_logweight(U[lo:lo + _BATCH], q, query.intervals, power)
            vals = _gaussian_factor(spec, u, lam2, d)
            bad = ~np.isfinite(vals)
            skipped += int(bad.sum())
            acc += float(np.sum(np.where(bad, 0.0, vals * np.exp(logw))))
        means.append(acc / m_pts)
    means = np.array(means)
    val = coef * float(means.mean())
    se = coef * float(means.std(ddof=1) / math.sqrt(shifts)) if shifts > 1 else float("nan")
    return MomentValue(val, se, skipped, m_pts * shifts)


def moment_upper_bound(query: MomentQuery, kappa: float) -> float:
    """``(b_N^{1-Hd} Gamma(1-Hd) / (2 (2 pi kappa)^{d/2}))^{|m|/2} prod m_i! / Gamma(m_i(1-Hd)/2 + 1)``,
    times ``C^{|m|/2}`` to match :func:`limit_moment`."""
    if not query.is_even:
        raise DomainError("the bound is stated for even orders")
    if kappa <= 0:
        raise DomainError("kappa must be positive")
    d = query.spec.dimension
    Hd = query.spec.H_eff * d
    if Hd >= 1:
        raise HypothesisError(f"the bound needs H d < 1 (got {Hd:g})")
    bN = query.intervals[-1][1]
    half = query.order / 2
    log_base = (1 - Hd) * math.log(bN) + math.lgamma(1 - Hd) - math.log(2.0) - 0.5 * d * math.log(2 * math.pi * kappa)
    log_prod = sum(math.lgamma(m + 1) - math.lgamma(0.5 * m * (1 - Hd) + 1) for m in query.m_vec)
    scale = query.C ** half if query.C > 0 else 0.0
    return scale * math.exp(half * log_base + log_prod)


def stirling_growth(Hd: float, k_max: int = 20, N: int = 1) -> np.ndarray:
    """``(prod_i m_i! / Gamma(m_i(1-Hd)/2 + 1))^{1/|m|} / |m|`` for ``m_i = 2k``."""
    out = np.empty(k_max)
    for k in range(1, k_max + 1):
        m = 2 * k
        logp = N * (math.lgamma(m + 1) - math.lgamma(0.5 * m * (1 - Hd) + 1))
        out[k - 1] = math.exp(logp / (N * m)) / (N * m)
    return out


# ----------------------------------------------------------------------------
# the limit mixture


def sample_limit_mixture(spec: ProcessSpec, intervals, C: float, lam, replications: int,
                         t_max: float | None = None, N: int = 1 << 12, seed: int = 0,
                         threads: int = 1) -> np.ndarray:
    """Samples of ``sqrt(C) (W(L_{b_i}) - W(L_{a_i}))``, shape ``(replications, len(intervals))``.

    Replica ``r`` uses the path of stream ``r`` (as in :func:`sample_path`)
    and the Gaussian stream ``2^32 + r``; local times come from the bridge
    reference of :mod:`functionals`.
    """
    intervals = [(float(a), float(b)) for a, b in intervals]
    if C < 0:
        raise DomainError("C must be non-negative")
    ends = sorted({t for iv in intervals for t in iv})
    t_max = float(ends[-1] if t_max is None else t_max)
    if ends[-1] > t_max:
        raise DomainError("intervals exceed t_max")
    idx = {t: i for i, t in enumerate(ends)}

    def one(r: int) -> np.ndarray:
        g = rng_stream(seed, MIXTURE_STREAM + r).standard_normal(len(intervals))
        if C == 0:
            return np.zeros(len(intervals))
        path = sample_path(spec, t_max, N, seed, replica=r)
        L = np.atleast_1d(reference_local_time(path, lam, ends))
        dL = np.array([max(L[idx[b]] - L[idx[a]], 0.0) for a, b in intervals])
        return math.sqrt(C) * np.sqrt(dL) * g

    return np.array(map_replicas(one, replications, threads))


# ----------------------------------------------------------------------------
# determinacy


@dataclass
class DeterminacyReport:
    r_hat: np.ndarray
    verdict: str
    ratios: list[np.ndarray] = field(default_factory=list)

    def __getitem__(self, key):
        return getattr(self, key)


def determinacy_check(moment_table, log_moments: bool = False) -> DeterminacyReport:
    """Moment-growth criterion for an ``N``-variate law.

    ``moment_table[i][k-1]`` is the ``2k``-th moment of coordinate ``i`` (or its
    logarithm with ``log_moments``). ``rho_k = mu_{2k}^{1/(2k)} / (2k)`` is
    examined on the upper half of ``k``; the verdict is ``"determinate"`` when
    every coordinate's ``rho_k`` is non-increasing there, and ``"inconclusive"``
    otherwise. ``r_hat`` is the tail maximum.
    """
    table = [np.asarray(row, dtype=float) for row in np.atleast_2d(np.asarray(moment_table, dtype=float))]
    r_hat = []
    ratios = []
    ok = True
    for row in table:
        if row.size < 2:
            raise DomainError("need at least two even moments per coordinate")
        if not log_moments and np.any(row <= 0):
            raise DomainError("even moments must be positive")
        logm = row if log_moments else np.log(row)
        k = np.arange(1, row.size + 1)
        rho = np.exp(logm / (2 * k)) / (2 * k)
        tail = rho[row.size // 2:]
        ratios.append(rho)
        r_hat.append(float(tail.max()))
        ok = ok and bool(np.all(np.diff(tail) <= 1e-12 * tail[:-1]))
    return DeterminacyReport(np.array(r_hat), "determinate" if ok else "inconclusive", ratios)


def write_moment_table(path, rows: Sequence[tuple]) -> Path:
    """CSV with columns ``query, order, value, se``."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["query", "order", "value", "se"])
        for qid, order, value, se in rows:
            w.writerow([qid, int(order), repr(float(value)), repr(float(se))])
    return path
