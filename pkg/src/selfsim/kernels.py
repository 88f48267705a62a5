"""Backend selection for the occupation-time kernels.

``occupation_sums(X, levels, inv_h, kind, breaks, dt)``
    For each level ``lam`` (rows of ``levels``, shape ``(L, d)``) the
    trapezoid integral over ``[0, t_b]`` of ``g((X_s - lam) * inv_h)`` where
    ``g`` is the standard Gaussian density (``kind=0``), ``z_1`` times it
    (``kind=1``) or the normalized indicator of ``[-1, 1]^d`` (``kind=2``).
    ``breaks`` are sorted grid indices; the result has shape ``(L, len(breaks))``.

``bridge_sums(X, levels, A, B, V, w, h2, breaks, dt)``
    ``sum_{k < b} dt * sum_q w_q * phi_d(lam; mu_kq, V_kq + h2)`` with
    ``mu_kq = X_k + A_kq X_k + B_kq (X_{k+1} - X_k)`` coordinate-wise.

The compiled module is used when importable, unless the environment
variable ``SELFSIM_PURE_PYTHON`` is set to a non-empty value.
"""
from __future__ import annotations

import os

import numpy as np

from . import _pykernels
from .errors import DomainError

GAUSS, X_GAUSS, BOX = 0, 1, 2

python_backend = _pykernels
compiled_backend = None
try:
    from . import _ckernels as compiled_backend  # type: ignore[no-redef]
except ImportError:  # pragma: no cover - depends on the build
    compiled_backend = None

if compiled_backend is not None and not os.environ.get("SELFSIM_PURE_PYTHON"):
    _backend = compiled_backend
    BACKEND = "cython"
else:
    _backend = _pykernels
    BACKEND = "python"


def _check(X, levels, breaks):
    # the compiled loops skip bounds checks, so shapes are validated here
    X, levels = np.asarray(X), np.asarray(levels)
    breaks = np.asarray(breaks)
    if X.ndim != 2 or levels.ndim != 2 or levels.shape[1] != X.shape[0]:
        raise DomainError(f"shape mismatch: X {X.shape}, levels {levels.shape}")
    if breaks.ndim != 1 or (breaks.size and (breaks.min() < 0 or breaks.max() >= X.shape[1])):
        raise DomainError(f"breaks must index the {X.shape[1]} grid points")


def occupation_sums(X, levels, inv_h, kind, breaks, dt):
    _check(X, levels, breaks)
    if kind not in (GAUSS, X_GAUSS, BOX):
        raise DomainError(f"unknown kernel kind {kind!r}")
    return _backend.occupation_sums(X, levels, inv_h, kind, breaks, dt)


def bridge_sums(X, levels, A, B, V, w, h2, breaks, dt):
    _check(X, levels, breaks)
    n, q = np.shape(X)[1] - 1, np.size(w)
    if not (np.shape(A) == np.shape(B) == np.shape(V) == (n, q)):
        raise DomainError(f"bridge coefficients must have shape {(n, q)}")
    return _backend.bridge_sums(X, levels, A, B, V, w, h2, breaks, dt)
