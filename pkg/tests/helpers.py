"""Matrix builders and dense oracles shared by the tests."""
import numpy as np

from randcur.matsource import SnnSpec, snn_generate, snn_weights

def lowrank(m, n, k, seed, noise=0.0):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((m, k)) @ rng.standard_normal((k, n))
    if noise:
        A = A + noise * rng.standard_normal((m, n))
    return A


def with_spectrum(s, m=None, n=None, seed=0):
    """U diag(s) V^T with Haar-like random orthonormal factors."""
    s = np.asarray(s, dtype=float)
    m = s.size if m is None else m
    n = s.size if n is None else n
    rng = np.random.default_rng(seed)
    U, _ = np.linalg.qr(rng.standard_normal((m, s.size)))
    V, _ = np.linalg.qr(rng.standard_normal((n, s.size)))
    return (U * s) @ V.T


def desk_snn(size=200, seed=0):
    return snn_generate(SnnSpec(snn_weights(size, head=size // 10), size, size,
                                seed=seed))


def col_proj(A, J):
    """Dense oracle ``C C^+ A``."""
    C = A[:, J]
    return C @ (np.linalg.pinv(C) @ A)


def row_proj(A, I):
    """Dense oracle ``A R^+ R``."""
    R = A[I, :]
    return (A @ np.linalg.pinv(R)) @ R
