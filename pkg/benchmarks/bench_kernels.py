"""Compare the compiled and pure-Python occupation kernels.

Run ``python3 benchmarks/bench_kernels.py [--N 2**16] [--levels 8]``. Prints
the best-of-``--repeat`` wall time per backend and the speedup.
"""
import argparse
import timeit

import numpy as np

from selfsim import kernels
from selfsim.functionals import bridge_coefficients
from selfsim.process_models import ProcessSpec


def _inputs(N, L, seed=0):
    rng = np.random.default_rng(seed)
    X = np.cumsum(rng.normal(scale=N ** -0.5, size=(1, N + 1)), axis=1)
    X[:, 0] = 0
    levels = np.ascontiguousarray(rng.normal(scale=0.3, size=(L, 1)))
    breaks = np.array([N // 4, N // 2, N], dtype=np.int64)
    return np.ascontiguousarray(X), levels, breaks


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--N", type=lambda s: int(eval(s, {})), default=2 ** 16)
    ap.add_argument("--levels", type=int, default=8)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if kernels.compiled_backend is None:
        raise SystemExit("compiled backend not built; run `pip install -e . --no-build-isolation`")

    N, L = args.N, args.levels
    X, lv, br = _inputs(N, L)
    A, B, V, w = bridge_coefficients(ProcessSpec.fbm(0.3), 1.0, N)
    cases = {
        "occupation_sums(gauss)": lambda mod: mod.occupation_sums(X, lv, 20.0, kernels.GAUSS, br, 1.0 / N),
        "occupation_sums(box)": lambda mod: mod.occupation_sums(X, lv, 20.0, kernels.BOX, br, 1.0 / N),
        "bridge_sums": lambda mod: mod.bridge_sums(X, lv, A, B, V, w, 0.0, br, 1.0 / N),
    }
    print(f"N={N} levels={L} repeat={args.repeat}")
    print(f"{'kernel':<24}{'cython [s]':>12}{'python [s]':>12}{'speedup':>10}")
    for name, call in cases.items():
        t = {}
        for label, mod in (("cython", kernels.compiled_backend), ("python", kernels.python_backend)):
            t[label] = min(timeit.repeat(lambda: call(mod), number=1, repeat=args.repeat))
        print(f"{name:<24}{t['cython']:>12.4f}{t['python']:>12.4f}{t['python'] / t['cython']:>9.1f}x")


if __name__ == "__main__":
    main()
