"""Strong local nondeterminism by exact Gaussian conditioning.

Conditioning on ``X_{s_1}, ..., X_{s_m}`` is the same as conditioning on
the increments ``X_{s_1}, X_{s_2}-X_{s_1}, ...`` and ``X_{s_m}`` is then
known, so ``Var(X_t | ...) = Var(X_t - X_{s_m} | increments)``. Working in
the increment basis keeps the Schur complement well conditioned when the
conditioning times cluster near each other or near ``t``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DomainError, NotPSD, ZeroForm
from .process_models import ProcessSpec, increment_covariance, increment_variance, variance
from .simulate import JITTER, rng_stream

DEDUP_RTOL = 1e-12


@dataclass(frozen=True)
class ConditioningProblem:
    spec: ProcessSpec
    t: float
    s: tuple[float, ...]
    x: tuple | None = None

    def __post_init__(self):
        s = tuple(float(v) for v in self.s)
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "t", float(self.t))
        if not s:
            raise DomainError("at least one conditioning time is required")
        if any(b < a for a, b in zip(s, s[1:])):
            raise DomainError("conditioning times must be sorted")
        if s[0] <= 0 or s[-1] >= self.t:
            raise DomainError("conditioning times must lie in (0, t)")


def _dedup(s: np.ndarray, t: float) -> np.ndarray:
    keep = np.concatenate([[True], np.diff(s) > DEDUP_RTOL * t])
    return s[keep]


def _increment_system(spec: ProcessSpec, t, s):
    """Gram matrix of conditioning increments, their covariance with the target
    increment ``X_t - X_{s_m}``, and its variance. ``s`` has shape (..., m)."""
    lo = np.concatenate([np.zeros(s.shape[:-1] + (1,)), s[..., :-1]], axis=-1)
    hi = s
    G = increment_covariance(spec, hi[..., :, None], lo[..., :, None], hi[..., None, :], lo[..., None, :])
    t = np.asarray(t, dtype=float)
    sm = s[..., -1]
    c = increment_covariance(spec, t[..., None], sm[..., None], hi, lo)
    v = increment_variance(spec, sm, t - sm)
    return G, c, v


def _schur(G: np.ndarray, c: np.ndarray, v: np.ndarray) -> np.ndarray:
    """``v - c^T G^{-1} c`` for stacked systems, via Cholesky."""
    G = 0.5 * (G + np.swapaxes(G, -1, -2))
    try:
        L = np.linalg.cholesky(G)
    except np.linalg.LinAlgError:
        jit = JITTER * np.trace(G, axis1=-2, axis2=-1)
        try:
            L = np.linalg.cholesky(G + jit[..., None, None] * np.eye(G.shape[-1]))
        except np.linalg.LinAlgError as exc:
            raise NotPSD("conditioning Gram matrix is not positive definite") from exc
    z = np.linalg.solve(L, c[..., None])[..., 0]
    return v - np.sum(z * z, axis=-1)


def conditional_variance(p: ConditioningProblem) -> float:
    """``Var(X^1_t | X^1_{s_1}, ..., X^1_{s_m})`` (one coordinate)."""
    s = _dedup(np.asarray(p.s, dtype=float), p.t)
    G, c, v = _increment_system(p.spec, p.t, s)
    out = float(_schur(G, c, v))
    return min(max(out, 0.0), float(variance(p.spec, p.t)))


@dataclass
class KappaEstimate:
    kappa_hat: float
    worst_case: ConditioningProblem
    trials: int
    ratios: np.ndarray = field(repr=False, default_factory=lambda: np.empty(0))

    def __getitem__(self, key):
        return getattr(self, key)

    def export_worst_cases(self, path, problems: Sequence[ConditioningProblem] | None = None) -> Path:
        """CSV with columns ``t, m, s_1..s_m (space separated), ratio``."""
        path = Path(path)
        rows = problems if problems is not None else [self.worst_case]
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["family", "H", "K", "t", "m", "s", "ratio"])
            for p in rows:
                r = conditional_variance(p) / (p.t - p.s[-1]) ** (2 * p.spec.H_eff)
                w.writerow([p.spec.family.value, repr(p.spec.H), repr(p.spec.K), repr(p.t), len(p.s),
                            " ".join(repr(v) for v in p.s), repr(r)])
        return path


def sample_problems(trials: int, m_max: int, seed: int):
    """Draw ``(t, s)`` configurations: a third plain, a third clustered
    together, a third clustered just below ``t``."""
    rng = rng_stream(seed, 0x51)
    out = []
    for k in range(trials):
        t = rng.uniform(0.1, 10.0)
        m = int(rng.integers(1, m_max + 1))
        kind = k % 3
        if kind == 0:
            s = np.sort(rng.uniform(0.0, t, m))
        elif kind == 1:
            width = 1e-3 * rng.random()
            c = rng.uniform(0.0, t - width)
            s = np.sort(c + width * rng.random(m))
        else:
            s = np.sort(t - 1e-3 * rng.random(m) * min(1.0, t))
        s = s[(s > 0) & (s < t)]
        if s.size == 0:
            s = np.array([0.5 * t])
        out.append((t, _dedup(s, t)))
    return out


def estimate_kappa_slnd(spec: ProcessSpec, trials: int, m_max: int, seed: int) -> KappaEstimate:
    """Smallest observed ``Var(X_t | X_s) / min_j |t - s_j|^{2H}`` over sampled problems."""
    if trials < 1 or m_max < 1:
        raise DomainError("trials and m_max must be positive")
    problems = sample_problems(trials, m_max, seed)
    ratios = np.empty(trials)
    by_m: dict[int, list[int]] = {}
    for i, (_, s) in enumerate(problems):
        by_m.setdefault(s.size, []).append(i)
    He = spec.H_eff
    for m, idx in sorted(by_m.items()):
        t = np.array([problems[i][0] for i in idx])
        s = np.stack([problems[i][1] for i in idx])
        G, c, v = _increment_system(spec, t, s)
        cv = _schur(G, c, v)
        ratios[idx] = cv / (t - s[:, -1]) ** (2 * He)
    k = int(np.argmin(ratios))
    t, s = problems[k]
    worst = ConditioningProblem(spec, t, tuple(s))
    return KappaEstimate(float(ratios[k]), worst, trials, ratios)


@dataclass
class LndRatio:
    variance: float
    lower_form: float
    ratio: float

    def __getitem__(self, key):
        return getattr(self, key)


def lnd_ratio(spec: ProcessSpec, s_list: Sequence[float], x_list) -> LndRatio:
    """Variance of ``sum_i x_i . (X_{s_i} - X_{s_{i-1}})`` against ``sum_i |x_i|^2 (s_i - s_{i-1})^{2H}``.

    ``x_list`` has shape ``(m,)`` for d = 1 or ``(m, d)``; coordinates are
    independent so the variance is the sum over coordinates.
    """
    s = np.asarray(s_list, dtype=float)
    if s.ndim != 1 or s.size == 0 or s[0] <= 0 or np.any(np.diff(s) < 0):
        raise DomainError("s_list must be positive and non-decreasing")
    x = np.asarray(x_list, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape[0] != s.size:
        raise DomainError("x_list must have one entry per time")
    sq = np.sum(x * x, axis=1)
    if not np.any(sq > 0):
        raise ZeroForm("all weights are zero")
    lo = np.concatenate([[0.0], s[:-1]])
    G = increment_covariance(spec, s[:, None], lo[:, None], s[None, :], lo[None, :])
    var = float(np.einsum("ic,ij,jc->", x, G, x))
    lower = float(np.sum(sq * (s - lo) ** (2 * spec.H_eff)))
    return LndRatio(var, lower, var / lower)
