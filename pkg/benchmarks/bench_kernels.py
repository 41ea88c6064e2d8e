"""Time the numba kernels against the numpy fallback on the same inputs.

Usage::

    python benchmarks/bench_kernels.py [--repeat 5] [--n 32]

Each kernel is warmed up once (so JIT compilation is excluded), then timed
with the best of ``--repeat`` runs.  Outputs of both backends are compared
before timing, and the end-to-end operator build on a polygonal mesh is
timed as well.
"""
import argparse
import time

import numpy as np

from wg_plate import _kernels
from wg_plate.assembly import build_operators
from wg_plate.mesh import generate_mesh
from wg_plate.weakops import preset_degrees


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def kernel_cases(rng):
    xh = rng.uniform(-0.5, 0.5, 200_000)
    yh = rng.uniform(-0.5, 0.5, 200_000)
    s = rng.uniform(0, 1, 200_000)
    A = rng.standard_normal((2000, 60, 21))
    B = rng.standard_normal((2000, 60, 15))
    w = rng.uniform(0, 1, (2000, 60))
    K = rng.standard_normal((500, 90, 90))
    dofs = rng.integers(0, 10**6, (500, 90))
    M = rng.standard_normal((4000, 15, 15))
    M = M @ np.swapaxes(M, 1, 2) + 15 * np.eye(15)
    R = rng.standard_normal((4000, 15, 40))
    return {
        "monomials(P6, grad)": lambda: _kernels.monomials(xh, yh, 6, grad=True),
        "legendre01(p=6)": lambda: _kernels.legendre01(s, 6),
        "weighted_gram": lambda: _kernels.weighted_gram(A, B, w),
        "scatter_coo": lambda: _kernels.scatter_coo(K, dofs),
        "batched_solve": lambda: _kernels.batched_solve(M, R),
    }


def _same(a, b):
    if isinstance(a, tuple):
        return all(_same(x, y) for x, y in zip(a, b) if x is not None)
    return np.allclose(a, b, rtol=1e-12, atol=1e-12)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--n", type=int, default=32, help="mesh size for the end-to-end timing")
    args = ap.parse_args(argv)
    if not _kernels.HAVE_NUMBA:
        print("numba is not installed; only the numpy path is available")
        return 1

    rng = np.random.default_rng(0)
    cases = kernel_cases(rng)
    cases[f"build_operators(polyB, P2, n={args.n})"] = (
        lambda mesh=generate_mesh("polyB", args.n), cfg=preset_degrees("P2", "polyB"):
        build_operators(mesh, cfg))

    prev = _kernels.backend()
    print(f"{'kernel':40s} {'numpy [s]':>10s} {'numba [s]':>10s} {'speedup':>8s}")
    try:
        for name, fn in cases.items():
            if not name.startswith("build_operators"):
                _kernels.set_backend("numpy")
                ref = fn()
                _kernels.set_backend("numba")
                if not _same(ref, fn()):
                    raise AssertionError(f"{name}: backends disagree")
            res = {}
            for be in ("numpy", "numba"):
                _kernels.set_backend(be)
                res[be] = best_of(fn, args.repeat)
            print(f"{name:40s} {res['numpy']:10.4f} {res['numba']:10.4f} "
                  f"{res['numpy'] / res['numba']:7.2f}x")
    finally:
        _kernels.set_backend(prev)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
