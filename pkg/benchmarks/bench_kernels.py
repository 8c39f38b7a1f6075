"""Time the numba kernels against their pure-numpy fallbacks.

Usage::

    python benchmarks/bench_kernels.py [--repeat 3] [--scale 1.0]

Each row reports the best wall time over ``--repeat`` runs for both
variants (the numba variant is warmed up first so compilation is excluded).
"""
import argparse
import time

import numpy as np

from randcur import _accel, _kernels


def _best(fn, make_args, repeat):
    best = np.inf
    for _ in range(repeat):
        args = make_args()
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def cases(scale, rng):
    l, n = int(400 * scale), int(4000 * scale)
    X = rng.standard_normal((l, n))

    def lupp_args():
        return (np.ascontiguousarray(X.T).copy(),
                np.arange(n, dtype=np.int64), 0, l, 1e-14, True)

    def cpqr_args():
        return (np.array(X, order="F", copy=True),
                np.arange(n, dtype=np.int64), np.zeros(l), 1e-14, True)

    m, k, zeta, cols = int(200_000 * scale), 64, 8, 16
    rows = np.stack([rng.choice(k, zeta, replace=False) for _ in range(m)])
    signs = rng.choice([-1.0, 1.0], size=(m, zeta)) / np.sqrt(zeta)
    A = rng.standard_normal((m, cols))

    def sparse_args():
        return rows, signs, A, np.zeros((k, cols))

    return [
        (f"lupp_panel {n}x{l}", "lupp_panel", lupp_args),
        (f"cpqr {l}x{n}", "cpqr", cpqr_args),
        (f"sparse_sign m={m} l={k} n={cols}", "sparse_sign_apply",
         sparse_args),
    ]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--scale", type=float, default=1.0,
                    help="multiply problem sizes by this factor")
    ns = ap.parse_args(argv)
    if not _accel.HAVE_NUMBA:
        print("numba is not installed; nothing to compare")
        return 1
    rng = np.random.default_rng(0)
    print(f"{'kernel':<36}{'numpy [s]':>12}{'numba [s]':>12}{'speedup':>10}")
    for label, name, make_args in cases(ns.scale, rng):
        f_np = getattr(_kernels, name + "_np")
        f_jit = getattr(_kernels, name + "_jit")
        f_jit(*make_args())  # compile
        t_np = _best(f_np, make_args, ns.repeat)
        t_jit = _best(f_jit, make_args, ns.repeat)
        print(f"{label:<36}{t_np:>12.4f}{t_jit:>12.4f}{t_np / t_jit:>10.1f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
