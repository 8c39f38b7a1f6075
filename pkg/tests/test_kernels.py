"""The numba and numpy kernel variants must agree."""
import os
import subprocess
import sys

import numpy as np
import pytest

from randcur import _accel, _kernels

needs_numba = pytest.mark.skipif(not _accel.HAVE_NUMBA,
                                 reason="numba not installed")


def _lupp(fn, X, pivoting=True):
    W = np.ascontiguousarray(X.T).copy()
    perm = np.arange(W.shape[0], dtype=np.int64)
    status = fn(W, perm, 0, X.shape[0], 1e-14, pivoting)
    return status, W, perm


def _cpqr(fn, X, pivoting=True):
    W = np.array(X, order="F", copy=True)
    perm = np.arange(X.shape[1], dtype=np.int64)
    tau = np.zeros(X.shape[0])
    status = fn(W, perm, tau, 1e-14, pivoting)
    return status, W, perm, tau


@needs_numba
@pytest.mark.parametrize("shape", [(1, 1), (4, 9), (30, 100), (64, 64)])
@pytest.mark.parametrize("pivoting", [True, False])
def test_lupp_panel_variants_agree(shape, pivoting):
    X = np.random.default_rng(shape[1]).standard_normal(shape)
    s1, W1, p1 = _lupp(_kernels.lupp_panel_np, X, pivoting)
    s2, W2, p2 = _lupp(_kernels.lupp_panel_jit, X, pivoting)
    assert s1 == s2 == -1
    np.testing.assert_array_equal(p1, p2)
    # unpivoted elimination amplifies differences in rounding order
    tol = 1e-12 if pivoting else 1e-8
    np.testing.assert_allclose(W1, W2, rtol=tol, atol=tol)


@needs_numba
def test_lupp_panel_failure_status_agrees():
    X = np.array([[1.0, 2.0, 3.0], [2.0, 4.0, 6.0]])
    assert _lupp(_kernels.lupp_panel_np, X)[0] == 1
    assert _lupp(_kernels.lupp_panel_jit, X)[0] == 1


@needs_numba
@pytest.mark.parametrize("shape", [(1, 3), (5, 12), (40, 120), (50, 50)])
def test_cpqr_variants_agree(shape):
    X = np.random.default_rng(sum(shape)).standard_normal(shape)
    s1, W1, p1, t1 = _cpqr(_kernels.cpqr_np, X)
    s2, W2, p2, t2 = _cpqr(_kernels.cpqr_jit, X)
    assert s1 == s2 == -1
    np.testing.assert_array_equal(p1, p2)
    np.testing.assert_allclose(W1, W2, rtol=1e-10, atol=1e-10)
    np.testing.assert_allclose(t1, t2, rtol=1e-12, atol=1e-12)


@needs_numba
def test_cpqr_failure_status_agrees():
    X = np.outer([1.0, 2.0, 0.5], np.arange(1.0, 6.0))
    assert _cpqr(_kernels.cpqr_np, X)[0] == 1
    assert _cpqr(_kernels.cpqr_jit, X)[0] == 1


@needs_numba
def test_sparse_sign_variants_agree():
    rng = np.random.default_rng(0)
    m, l, zeta, n = 500, 16, 4, 7
    rows = np.stack([rng.choice(l, zeta, replace=False) for _ in range(m)])
    signs = rng.choice([-0.5, 0.5], size=(m, zeta))
    A = rng.standard_normal((m, n))
    o1 = _kernels.sparse_sign_apply_np(rows, signs, A, np.zeros((l, n)))
    o2 = _kernels.sparse_sign_apply_jit(rows, signs, A, np.zeros((l, n)))
    np.testing.assert_allclose(o1, o2, atol=1e-12)
    G = np.zeros((l, m))
    for i in range(m):
        G[rows[i], i] = signs[i]
    np.testing.assert_allclose(o1, G @ A, atol=1e-12)


def test_dispatch_follows_flag():
    if _accel.USE_NUMBA:
        assert _kernels.lupp_panel is _kernels.lupp_panel_jit
    else:
        assert _kernels.lupp_panel is _kernels.lupp_panel_np


def test_env_flag_selects_numpy_path():
    code = ("from randcur import _accel, _kernels\n"
            "from randcur.skeleton import rand_lupp\n"
            "import numpy as np\n"
            "assert not _accel.USE_NUMBA\n"
            "assert _kernels.cpqr is _kernels.cpqr_np\n"
            "A = np.random.default_rng(1).standard_normal((60, 50))\n"
            "print(list(rand_lupp(A, 10, seed=1).Js))\n")
    env = dict(os.environ, RANDCUR_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env,
                         capture_output=True, text=True, check=True).stdout
    from randcur.skeleton import rand_lupp
    A = np.random.default_rng(1).standard_normal((60, 50))
    assert out.strip() == str(list(rand_lupp(A, 10, seed=1).Js))


@needs_numba
def test_benchmark_script_runs():
    script = os.path.join(os.path.dirname(__file__), "..", "benchmarks",
                          "bench_kernels.py")
    proc = subprocess.run([sys.executable, script, "--repeat", "1",
                           "--scale", "0.05"], capture_output=True, text=True,
                          check=True)
    lines = proc.stdout.strip().splitlines()
    assert lines[0].split()[0] == "kernel" and len(lines) == 4
