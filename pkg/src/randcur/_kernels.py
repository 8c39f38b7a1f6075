"""Hot inner loops: LU panel factorization, Householder CPQR, sparse-sign apply.

Every kernel exists twice, a numba-compiled loop nest (``*_jit``) and a
vectorized numpy version (``*_np``).  The unsuffixed names are bound to one
of the two according to :data:`randcur._accel.USE_NUMBA`.  Both variants
implement the same arithmetic and the same tie-breaking (first index wins),
so pivot sequences agree between them on non-degenerate inputs.

Kernels mutate their array arguments in place and report failure through an
integer status (``-1`` = success, otherwise the 0-based step at which the
active pivot fell below ``tol``) rather than raising.
"""
import numpy as np

from ._accel import USE_NUMBA, njit

_SQRT_EPS = float(np.sqrt(np.finfo(np.float64).eps))


# --------------------------------------------------------------------------
# LU with row partial pivoting on a tall n x l workspace (the transpose of the
# l x n row-space approximator).  Columns k0:k1 form the current panel.

def lupp_panel_np(W, perm, k0, k1, tol, pivoting=True):
    n = W.shape[0]
    for t in range(k0, k1):
        p = t + int(np.argmax(np.abs(W[t:, t]))) if pivoting else t
        if abs(W[p, t]) <= tol:
            return t
        if p != t:
            W[[t, p], :] = W[[p, t], :]
            perm[t], perm[p] = perm[p], perm[t]
        if t + 1 < n:
            W[t + 1:, t] /= W[t, t]
            if t + 1 < k1:
                W[t + 1:, t + 1:k1] -= np.outer(W[t + 1:, t], W[t, t + 1:k1])
    return -1


@njit(cache=True)
def lupp_panel_jit(W, perm, k0, k1, tol, pivoting=True):
    n = W.shape[0]
    ncol = W.shape[1]
    for t in range(k0, k1):
        p = t
        best = abs(W[t, t])
        for i in range(t + 1, n if pivoting else t + 1):
            a = abs(W[i, t])
            if a > best:
                best = a
                p = i
        if best <= tol:
            return t
        if p != t:
            for j in range(ncol):
                tmp = W[t, j]
                W[t, j] = W[p, j]
                W[p, j] = tmp
            ip = perm[t]
            perm[t] = perm[p]
            perm[p] = ip
        inv = 1.0 / W[t, t]
        for i in range(t + 1, n):
            W[i, t] *= inv
            lit = W[i, t]
            if lit != 0.0:
                for j in range(t + 1, k1):
                    W[i, j] -= lit * W[t, j]
    return -1


# --------------------------------------------------------------------------
# Householder QR with column pivoting on an l x n workspace (LAPACK xLAQP2
# norm downdating with the sqrt(eps) recomputation guard).

def cpqr_np(X, perm, tau, tol, pivoting=True):
    l, n = X.shape
    vn1 = np.sqrt(np.einsum("ij,ij->j", X, X))
    vn2 = vn1.copy()
    for t in range(l):
        p = t + int(np.argmax(vn1[t:])) if pivoting else t
        if vn1[p] <= tol:
            return t
        if p != t:
            X[:, [t, p]] = X[:, [p, t]]
            perm[t], perm[p] = perm[p], perm[t]
            vn1[t], vn1[p] = vn1[p], vn1[t]
            vn2[t], vn2[p] = vn2[p], vn2[t]
        alpha = X[t, t]
        xnorm = np.linalg.norm(X[t + 1:, t]) if t + 1 < l else 0.0
        if xnorm == 0.0:
            tau[t] = 0.0
        else:
            beta = -np.copysign(np.hypot(alpha, xnorm), alpha)
            tau[t] = (beta - alpha) / beta
            X[t + 1:, t] /= alpha - beta
            X[t, t] = beta
            if t + 1 < n:
                v = np.empty(l - t)
                v[0] = 1.0
                v[1:] = X[t + 1:, t]
                w = v @ X[t:, t + 1:]
                X[t:, t + 1:] -= tau[t] * np.outer(v, w)
        if t + 1 < n:
            rest = slice(t + 1, n)
            live = vn1[rest] != 0.0
            ratio = np.zeros(n - t - 1)
            ratio[live] = np.abs(X[t, rest][live]) / vn1[rest][live]
            temp = np.maximum(1.0 - ratio * ratio, 0.0)
            temp2 = np.zeros_like(temp)
            temp2[live] = temp[live] * (vn1[rest][live] / vn2[rest][live]) ** 2
            redo = live & (temp2 <= _SQRT_EPS)
            keep = live & ~redo
            idx = np.arange(t + 1, n)
            if redo.any():
                cols = idx[redo]
                if t + 1 < l:
                    fresh = np.linalg.norm(X[t + 1:, cols], axis=0)
                else:
                    fresh = np.zeros(cols.size)
                vn1[cols] = fresh
                vn2[cols] = fresh
            vn1[idx[keep]] *= np.sqrt(temp[keep])
    return -1


@njit(cache=True)
def cpqr_jit(X, perm, tau, tol, pivoting=True):
    l, n = X.shape
    vn1 = np.empty(n)
    vn2 = np.empty(n)
    for j in range(n):
        s = 0.0
        for i in range(l):
            s += X[i, j] * X[i, j]
        vn1[j] = np.sqrt(s)
        vn2[j] = vn1[j]
    v = np.empty(l)
    for t in range(l):
        p = t
        best = vn1[t]
        for j in range(t + 1, n if pivoting else t + 1):
            if vn1[j] > best:
                best = vn1[j]
                p = j
        if best <= tol:
            return t
        if p != t:
            for i in range(l):
                tmp = X[i, t]
                X[i, t] = X[i, p]
                X[i, p] = tmp
            ip = perm[t]
            perm[t] = perm[p]
            perm[p] = ip
            tmp = vn1[t]
            vn1[t] = vn1[p]
            vn1[p] = tmp
            tmp = vn2[t]
            vn2[t] = vn2[p]
            vn2[p] = tmp
        alpha = X[t, t]
        s = 0.0
        for i in range(t + 1, l):
            s += X[i, t] * X[i, t]
        xnorm = np.sqrt(s)
        if xnorm == 0.0:
            tau[t] = 0.0
        else:
            beta = -np.copysign(np.hypot(alpha, xnorm), alpha)
            tau[t] = (beta - alpha) / beta
            scale = 1.0 / (alpha - beta)
            for i in range(t + 1, l):
                X[i, t] *= scale
            X[t, t] = beta
            v[t] = 1.0
            for i in range(t + 1, l):
                v[i] = X[i, t]
            for j in range(t + 1, n):
                w = 0.0
                for i in range(t, l):
                    w += v[i] * X[i, j]
                w *= tau[t]
                if w != 0.0:
                    for i in range(t, l):
                        X[i, j] -= w * v[i]
        for j in range(t + 1, n):
            if vn1[j] != 0.0:
                r = abs(X[t, j]) / vn1[j]
                temp = 1.0 - r * r
                if temp < 0.0:
                    temp = 0.0
                q = vn1[j] / vn2[j]
                temp2 = temp * q * q
                if temp2 <= _SQRT_EPS:
                    s = 0.0
                    for i in range(t + 1, l):
                        s += X[i, j] * X[i, j]
                    vn1[j] = np.sqrt(s)
                    vn2[j] = vn1[j]
                else:
                    vn1[j] *= np.sqrt(temp)
    return -1


# --------------------------------------------------------------------------
# Sparse sign embedding applied to a dense m x n block: out (l x n) gets
# sum_i sum_z sign[i, z] * A[i, :] scattered into row rows[i, z].

def sparse_sign_apply_np(rows, signs, A, out):
    from scipy import sparse
    m, zeta = rows.shape
    cols = np.repeat(np.arange(m), zeta)
    G = sparse.csr_matrix(
        (signs.ravel(), (rows.ravel(), cols)), shape=(out.shape[0], m)
    )
    out += G @ A
    return out


@njit(cache=True)
def sparse_sign_apply_jit(rows, signs, A, out):
    m, zeta = rows.shape
    n = A.shape[1]
    for i in range(m):
        for z in range(zeta):
            r = rows[i, z]
            s = signs[i, z]
            for j in range(n):
                out[r, j] += s * A[i, j]
    return out


if USE_NUMBA:
    lupp_panel = lupp_panel_jit
    cpqr = cpqr_jit
    sparse_sign_apply = sparse_sign_apply_jit
else:
    lupp_panel = lupp_panel_np
    cpqr = cpqr_np
    sparse_sign_apply = sparse_sign_apply_np
