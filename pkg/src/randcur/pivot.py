"""Greedy pivoting kernels: column-wise LU with partial pivoting, column
pivoted QR, their row-wise transposes and the growth certificate.

Conventions: for an l x n input X (l <= n) a column factorization satisfies

    X[:, perm] = F @ np.hstack([R1, R2])

with ``F`` l x l (lower triangular for LUPP, orthogonal for CPQR), ``R1``
upper triangular and ``pivots = perm[:l]``.  Ties between equal pivot
magnitudes go to the smallest index.
"""
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from . import _kernels
from .errors import ParameterError, RankDeficiencyError

__all__ = [
    "PivotFactorization",
    "lupp_columns",
    "lupp_rows",
    "cpqr_columns",
    "cpqr_rows",
    "pivot_columns",
    "pivot_rows",
    "growth_certificate",
    "kahan_witness",
]

RANK_TOL = 1e-14
DEFAULT_PANEL = 64


@dataclass
class PivotFactorization:
    """Result of a pivoted LU or QR of an l x n matrix.

    For the row-wise variants the factorization describes the transpose of
    the input, so ``pivots`` are row indices of the original matrix.
    """
    pivots: np.ndarray
    perm: np.ndarray
    kind: str
    F: np.ndarray
    R1: np.ndarray
    R2: np.ndarray
    axis: str = "columns"

    @property
    def l(self):
        return self.R1.shape[0]

    @property
    def R(self):
        return np.hstack([self.R1, self.R2])

    def reconstruct(self):
        """``F @ [R1 R2]``, i.e. the (transposed, for rows) input with its
        columns in pivot order."""
        return self.F @ self.R


def _as_wide(X, name):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ParameterError(f"{name}: expected a 2-d array")
    l, n = X.shape
    if l < 1 or l > n:
        raise ParameterError(f"{name}: need 1 <= l <= n, got shape {X.shape}")
    return X


def lupp_columns(X, panel=DEFAULT_PANEL, blocked=True, pivoting=True):
    """Column-wise LU with partial pivoting of a full-row-rank l x n ``X``.

    Step t picks the column maximizing ``|X^(t)[t, j]|`` over the active
    columns, then takes a Schur complement.  This is row-pivoted LU of
    ``X.T``; the blocked path factors ``panel``-wide column panels with the
    unblocked kernel and updates the trailing matrix with level-3 BLAS.

    Returns a :class:`PivotFactorization` with ``F`` lower triangular and
    ``R1`` unit upper triangular, all ``|R| <= 1``.
    """
    X = _as_wide(X, "lupp_columns")
    l, n = X.shape
    scale = float(np.max(np.abs(X)))
    tol = RANK_TOL * scale
    W = np.ascontiguousarray(X.T).copy()
    perm = np.arange(n, dtype=np.int64)
    if scale == 0.0:
        raise RankDeficiencyError("zero matrix", step=0, stage="lupp")
    width = l if not blocked else max(1, int(panel))
    for k0 in range(0, l, width):
        k1 = min(k0 + width, l)
        status = _kernels.lupp_panel(W, perm, k0, k1, tol, pivoting)
        if status >= 0:
            raise RankDeficiencyError(
                f"pivot {status + 1} of {l}: active row has no entry above "
                f"{tol:.3g} (input is numerically rank deficient)",
                step=int(status), stage="lupp")
        if k1 < l:
            U12 = solve_triangular(W[k0:k1, k0:k1], W[k0:k1, k1:], lower=True,
                                   unit_diagonal=True, check_finite=False)
            W[k0:k1, k1:] = U12
            W[k1:, k1:] -= W[k1:, k0:k1] @ U12
    Lp = np.tril(W, -1)
    Lp[np.arange(l), np.arange(l)] = 1.0
    R = Lp.T
    F = np.triu(W[:l]).T
    return PivotFactorization(pivots=perm[:l].copy(), perm=perm, kind="lupp",
                              F=np.ascontiguousarray(F),
                              R1=np.ascontiguousarray(R[:, :l]),
                              R2=np.ascontiguousarray(R[:, l:]))


def lupp_rows(C, **kwargs):
    """Row-wise LUPP of a full-column-rank m x l ``C``: pivots are rows."""
    C = np.asarray(C, dtype=np.float64)
    pf = lupp_columns(C.T, **kwargs)
    pf.axis = "rows"
    return pf


def cpqr_columns(X, pivoting=True):
    """Householder QR with column pivoting of an l x n ``X``.

    Step t picks the active column of largest remaining 2-norm.  Norms are
    downdated and recomputed once downdating has lost about half the digits.
    ``F`` is orthogonal and ``|diag(R1)|`` is nonincreasing.
    """
    X = _as_wide(X, "cpqr_columns")
    l, n = X.shape
    fro = float(np.linalg.norm(X))
    if fro == 0.0:
        raise RankDeficiencyError("zero matrix", step=0, stage="cpqr")
    tol = RANK_TOL * fro
    W = np.array(X, order="F", copy=True)
    perm = np.arange(n, dtype=np.int64)
    tau = np.zeros(l)
    status = _kernels.cpqr(W, perm, tau, tol, pivoting)
    if status >= 0:
        raise RankDeficiencyError(
            f"pivot {status + 1} of {l}: all remaining column norms are below "
            f"{tol:.3g} (input is numerically rank deficient)",
            step=int(status), stage="cpqr")
    R = np.triu(W)
    Q = np.eye(l)
    for t in range(l - 1, -1, -1):
        if tau[t] == 0.0:
            continue
        v = np.concatenate([[1.0], W[t + 1:, t]])
        Q[t:, :] -= tau[t] * np.outer(v, v @ Q[t:, :])
    return PivotFactorization(pivots=perm[:l].copy(), perm=perm, kind="cpqr",
                              F=Q, R1=np.ascontiguousarray(R[:, :l]),
                              R2=np.ascontiguousarray(R[:, l:]))


def cpqr_rows(C, **kwargs):
    """Row-wise CPQR of an m x l ``C`` (CPQR of ``C.T``)."""
    C = np.asarray(C, dtype=np.float64)
    pf = cpqr_columns(C.T, **kwargs)
    pf.axis = "rows"
    return pf


def pivot_columns(X, kind="lupp", **kwargs):
    if kind == "lupp":
        return lupp_columns(X, **kwargs)
    if kind == "cpqr":
        return cpqr_columns(X, **kwargs)
    raise ParameterError(f"unknown pivot kind {kind!r}")


def pivot_rows(C, kind="lupp", **kwargs):
    if kind == "lupp":
        return lupp_rows(C, **kwargs)
    if kind == "cpqr":
        return cpqr_rows(C, **kwargs)
    raise ParameterError(f"unknown pivot kind {kind!r}")


def growth_certificate(pf):
    """``max |R1^{-1} R2|`` via one triangular solve; 0 when R2 is empty."""
    if pf.R2.size == 0:
        return 0.0
    d = np.abs(np.diag(pf.R1))
    if np.any(d == 0.0) or not np.all(np.isfinite(pf.R1)):
        raise RankDeficiencyError("R1 is singular", stage="growth")
    T = solve_triangular(pf.R1, pf.R2, lower=False, check_finite=False)
    return float(np.max(np.abs(T)))


def kahan_witness(l, n):
    """Worst case input for column-wise LUPP.

    Returns the l x n matrix ``[R1 R2]`` with unit diagonal, ``-1`` strictly
    above the diagonal of R1 and ``R2`` all ones.  LUPP leaves it unpermuted
    and ``(R1^{-1} R2)[i, :] = 2^(l-1-i)`` (0-based rows).
    """
    if not (1 <= l <= n):
        raise ParameterError("kahan_witness needs 1 <= l <= n")
    X = np.ones((l, n))
    X[:, :l] = np.triu(-np.ones((l, l)), 1) + np.eye(l)
    return X
