"""Pure numpy implementation of the hot kernels (fallback backend).

Both functions return cumulative time integrals evaluated at the grid
indices in ``breaks``; see :mod:`selfsim.kernels` for the contract.
"""
from __future__ import annotations

import numpy as np

GAUSS, X_GAUSS, BOX = 0, 1, 2
_INV_SQRT_2PI = 0.3989422804014327


def _profile(z: np.ndarray, kind: int) -> np.ndarray:
    # z has shape (d, n); returns the test function evaluated column-wise
    if kind == BOX:
        return np.prod(np.where(np.abs(z) <= 1.0, 0.5, 0.0), axis=0)
    g = np.exp(-0.5 * np.sum(z * z, axis=0)) * _INV_SQRT_2PI ** z.shape[0]
    if kind == X_GAUSS:
        g = g * z[0]
    return g


def occupation_sums(X, levels, inv_h, kind, breaks, dt):
    X = np.asarray(X, dtype=float)
    levels = np.atleast_2d(np.asarray(levels, dtype=float))
    breaks = np.asarray(breaks, dtype=np.int64)
    out = np.empty((levels.shape[0], breaks.size))
    for j, lam in enumerate(levels):
        g = _profile((X - lam[:, None]) * inv_h, kind)
        seg = 0.5 * dt * (g[:-1] + g[1:])
        cum = np.concatenate([[0.0], np.cumsum(seg)])
        out[j] = cum[breaks]
    return out


def bridge_sums(X, levels, A, B, V, w, h2, breaks, dt):
    X = np.asarray(X, dtype=float)
    levels = np.atleast_2d(np.asarray(levels, dtype=float))
    breaks = np.asarray(breaks, dtype=np.int64)
    d = X.shape[0]
    Xk = X[:, :-1, None]
    dX = np.diff(X, axis=1)[:, :, None]
    mu = Xk + A[None] * Xk + B[None] * dX  # (d, N, Q)
    var = V + h2
    norm = (2.0 * np.pi * var) ** (-0.5 * d)
    out = np.empty((levels.shape[0], breaks.size))
    for j, lam in enumerate(levels):
        q = np.sum((mu - lam[:, None, None]) ** 2, axis=0)
        dens = norm * np.exp(-0.5 * q / var)
        step = dt * (dens @ w)
        cum = np.concatenate([[0.0], np.cumsum(step)])
        out[j] = cum[breaks]
    return out
