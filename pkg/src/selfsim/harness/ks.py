"""Two-sample Kolmogorov-Smirnov statistic."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import kolmogorov

from ..errors import EmptySample


@dataclass(frozen=True)
class KSResult:
    D: float
    p_approx: float
    n: int
    m: int

    def __getitem__(self, key):
        return getattr(self, key)


def ks_two_sample(a, b) -> KSResult:
    """``D = sup_x |F_a(x) - F_b(x)|`` and the asymptotic p-value.

    The empirical distribution functions are compared at every sample point
    (right limits), so ties are handled exactly. The p-value uses the
    Kolmogorov limit law at ``(sqrt(e) + 0.12 + 0.11/sqrt(e)) D`` with
    ``e = n m / (n + m)``.
    """
    a = np.sort(np.asarray(a, dtype=float).ravel())
    b = np.sort(np.asarray(b, dtype=float).ravel())
    n, m = a.size, b.size
    if n == 0 or m == 0:
        raise EmptySample("both samples must be non-empty")
    if np.isnan(a).any() or np.isnan(b).any():
        raise ValueError("samples contain NaN")
    x = np.concatenate([a, b])
    Fa = np.searchsorted(a, x, side="right") / n
    Fb = np.searchsorted(b, x, side="right") / m
    D = float(np.max(np.abs(Fa - Fb)))
    en = math.sqrt(n * m / (n + m))
    p = float(kolmogorov((en + 0.12 + 0.11 / en) * D))
    return KSResult(D, min(max(p, 0.0), 1.0), n, m)
