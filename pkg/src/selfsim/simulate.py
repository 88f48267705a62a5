"""Exact sampling of process paths on uniform grids.

fBm paths come from circulant embedding of fractional Gaussian noise
(O(N log N) per path). Sub- and bi-fractional paths use a dense Cholesky
factor of the increment covariance, cached per ``(spec, t_max, N)``.

Randomness is drawn from a counter-based Philox generator keyed by
``(seed, stream)``; replica ``r`` always uses stream ``r``, so results do
not depend on how replicas are distributed over threads.
"""
from __future__ import annotations

import csv
import functools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence, TypeVar

import numpy as np

from .errors import DomainError, EmbeddingFailure, NotPSD
from .process_models import Family, ProcessSpec, increment_covariance

CHOLESKY_MAX_N = 4096
EIGEN_CLIP = 1e-8
JITTER = 1e-10

T = TypeVar("T")


def rng_stream(seed: int, stream: int) -> np.random.Generator:
    """Independent generator for ``(seed, stream)``."""
    return np.random.Generator(np.random.Philox(key=[int(seed) % 2**64, int(stream) % 2**64]))


@dataclass
class GridPath:
    """A d-dimensional path on the grid ``k * t_max / n_steps``, ``k = 0..n_steps``."""

    spec: ProcessSpec
    t_max: float
    n_steps: int
    values: np.ndarray  # shape (d, n_steps + 1)

    @property
    def dt(self) -> float:
        return self.t_max / self.n_steps

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.dt

    @property
    def dimension(self) -> int:
        return self.values.shape[0]

    def reflected(self) -> "GridPath":
        return GridPath(self.spec, self.t_max, self.n_steps, -self.values)

    def to_csv(self, path) -> Path:
        """One row per grid time: ``t, X1, ..., Xd``."""
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t"] + [f"X{i + 1}" for i in range(self.dimension)])
            for k, t in enumerate(self.times):
                w.writerow([repr(float(t))] + [repr(float(v)) for v in self.values[:, k]])
        return path


# ----------------------------------------------------------------------------
# circulant embedding


def fgn_autocovariance(H: float, k) -> np.ndarray:
    k = np.abs(np.asarray(k, dtype=float))
    return 0.5 * (np.abs(k + 1) ** (2 * H) - 2 * k ** (2 * H) + np.abs(k - 1) ** (2 * H))


def _next_pow2(n: int) -> int:
    return 1 << max(0, int(n - 1).bit_length())


def circulant_eigenvalues(H: float, M: int) -> np.ndarray:
    """Eigenvalues of the length-``2M`` circulant extension of fGn."""
    g = fgn_autocovariance(H, np.arange(M + 1))
    row = np.concatenate([g, g[-2:0:-1]])
    return np.fft.fft(row).real


@functools.lru_cache(maxsize=16)
def _circulant_scale(H: float, M: int) -> np.ndarray:
    lam = circulant_eigenvalues(H, M)
    top = lam.max()
    if lam.min() < -EIGEN_CLIP * top:
        raise EmbeddingFailure(f"circulant embedding eigenvalue {lam.min():.3e} below -{EIGEN_CLIP:g}*max for H={H}")
    lam = np.clip(lam, 0.0, None)
    out = np.sqrt(lam / (2 * M))
    out.setflags(write=False)
    return out


def _fgn_from_rng(H: float, N: int, rng: np.random.Generator) -> np.ndarray:
    M = _next_pow2(N)
    scale = _circulant_scale(H, M)
    z = rng.standard_normal(2 * M) + 1j * rng.standard_normal(2 * M)
    return np.fft.fft(scale * z)[:N].real


def sample_fgn_circulant(H: float, N: int, dt: float, seed: int, count: int, first_stream: int = 0) -> np.ndarray:
    """``count`` independent rows of ``N`` fGn increments with step ``dt``.

    Row ``i`` is drawn from stream ``first_stream + i``. Lengths that are not
    powers of two are embedded in the next power of two and truncated.
    """
    if not 0.0 < H < 1.0:
        raise DomainError(f"H must lie in (0,1), got {H}")
    if N < 1 or count < 0:
        raise DomainError("N must be positive and count non-negative")
    out = np.empty((count, N))
    for i in range(count):
        out[i] = _fgn_from_rng(H, N, rng_stream(seed, first_stream + i))
    return out * dt ** H


# ----------------------------------------------------------------------------
# Cholesky


@dataclass(frozen=True)
class CholeskyFactor:
    L: np.ndarray
    jitter: float

    def sample(self, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
        n = self.L.shape[0]
        if size is None:
            return self.L @ rng.standard_normal(n)
        return rng.standard_normal((size, n)) @ self.L.T


def cholesky_factor(cov) -> CholeskyFactor:
    """Lower Cholesky factor, adding a ``1e-10 * trace`` diagonal jitter at most once."""
    cov = np.asarray(cov, dtype=float)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise DomainError("covariance must be a square matrix")
    if not np.allclose(cov, cov.T, rtol=1e-12, atol=1e-14 * max(1.0, np.abs(cov).max())):
        raise DomainError("covariance must be symmetric")
    try:
        return CholeskyFactor(np.linalg.cholesky(cov), 0.0)
    except np.linalg.LinAlgError:
        pass
    jitter = JITTER * float(np.trace(cov))
    try:
        L = np.linalg.cholesky(cov + jitter * np.eye(cov.shape[0]))
    except np.linalg.LinAlgError as exc:
        raise NotPSD(f"Cholesky failed after diagonal jitter {jitter:.3e}") from exc
    return CholeskyFactor(L, jitter)


def cholesky_gaussian(cov, seed: int, stream: int = 0) -> np.ndarray:
    """One draw of ``N(0, cov)``."""
    return cholesky_factor(cov).sample(rng_stream(seed, stream))


@functools.lru_cache(maxsize=8)
def grid_increment_factor(spec: ProcessSpec, t_max: float, N: int) -> CholeskyFactor:
    """Cached factor of the covariance of the ``N`` grid increments of one coordinate."""
    if N > CHOLESKY_MAX_N:
        raise DomainError(f"dense Cholesky sampling is capped at N={CHOLESKY_MAX_N} (got {N})")
    tk = np.arange(N + 1) * (t_max / N)
    hi, lo = tk[1:], tk[:-1]
    G = increment_covariance(spec, hi[:, None], lo[:, None], hi[None, :], lo[None, :])
    G = 0.5 * (G + G.T)
    fac = cholesky_factor(G)
    fac.L.setflags(write=False)
    return fac


def sample_path(
    spec: ProcessSpec,
    t_max: float,
    N: int,
    seed: int,
    d: int | None = None,
    replica: int = 0,
    method: str = "auto",
) -> GridPath:
    """Sample one path with ``d`` independent coordinates.

    ``method`` is ``"auto"`` (circulant for fBm, Cholesky otherwise),
    ``"circulant"`` or ``"cholesky"``. The coordinates of replica ``replica``
    are drawn in order from stream ``replica``.
    """
    d = spec.dimension if d is None else int(d)
    if t_max <= 0 or N < 1 or d < 1:
        raise DomainError("t_max, N and d must be positive")
    if method == "auto":
        method = "circulant" if spec.family is Family.FBM else "cholesky"
    rng = rng_stream(seed, replica)
    values = np.zeros((d, N + 1))
    dt = t_max / N
    if method == "circulant":
        if spec.family is not Family.FBM:
            raise DomainError("circulant embedding requires stationary increments (fbm)")
        try:
            scale = dt ** spec.H
            for i in range(d):
                values[i, 1:] = np.cumsum(_fgn_from_rng(spec.H, N, rng)) * scale
        except EmbeddingFailure:
            if N > CHOLESKY_MAX_N:
                raise
            return sample_path(spec, t_max, N, seed, d, replica, method="cholesky")
    elif method == "cholesky":
        fac = grid_increment_factor(spec, float(t_max), int(N))
        for i in range(d):
            values[i, 1:] = np.cumsum(fac.sample(rng))
    else:
        raise DomainError(f"unknown sampling method {method!r}")
    return GridPath(spec, float(t_max), int(N), values)


def map_replicas(fn: Callable[[int], T], replications: int, threads: int = 1) -> list[T]:
    """Evaluate ``fn(r)`` for ``r = 0..replications-1``, results ordered by ``r``."""
    if threads <= 1:
        return [fn(r) for r in range(replications)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(replications)))


def sample_paths(
    spec: ProcessSpec,
    t_max: float,
    N: int,
    seed: int,
    replications: int,
    threads: int = 1,
    method: str = "auto",
) -> list[GridPath]:
    return map_replicas(lambda r: sample_path(spec, t_max, N, seed, replica=r, method=method), replications, threads)


def probe_indices(N: int, probes: Sequence[float], t_max: float) -> np.ndarray:
    """Grid indices nearest to the probe times."""
    return np.rint(np.asarray(probes) / (t_max / N)).astype(int)
