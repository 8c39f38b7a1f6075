"""Low-rank factorizations built on skeletons: column/row/two-sided ID,
stable CUR, skeleton-inverse CUR and sketch-estimated IDs, plus error
evaluation against the truncated SVD."""
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.linalg import (LinAlgWarning, lu_factor, lu_solve, qr,
                          solve_triangular, svd)

from .errors import ParameterError, RankDeficiencyError
from .matsource import as_source, write_matrix_market
from .pivot import RANK_TOL

__all__ = [
    "Factors",
    "ColumnID",
    "RowID",
    "TwoSidedID",
    "StableCUR",
    "SkeletonCUR",
    "StreamingID",
    "ErrorReport",
    "build_column_id",
    "build_row_id",
    "build_two_sided_id",
    "build_cur_stable",
    "build_cur_skeleton_inverse",
    "estimate_id_from_sketches",
    "evaluate_error",
    "optimal_error",
    "DENSE_BUDGET",
]

# entries of A above which dense SVD / dense residuals are not attempted
DENSE_BUDGET = 16_000_000
ZERO_TOL = 1e-12


def _qr_checked(M, what):
    Q, R = qr(M, mode="economic", check_finite=False)
    d = np.abs(np.diag(R))
    if d.size == 0 or d.max() == 0.0 or d.min() <= RANK_TOL * d.max():
        raise RankDeficiencyError(f"{what} has linearly dependent columns",
                                  stage="factors")
    return Q, R


def _lu_checked(S, what):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LinAlgWarning)
        lu, piv = lu_factor(S, check_finite=False)
    d = np.abs(np.diag(lu))
    if d.max() == 0.0 or d.min() <= RANK_TOL * d.max():
        raise RankDeficiencyError(f"{what} is singular", stage="factors")
    return lu, piv


@dataclass
class Factors:
    """Base class: a product of small factors approximating an m x n A."""
    kind: str = field(init=False, default="")
    shape: tuple = field(init=False, default=None)
    Is: np.ndarray = field(init=False, default=None)
    Js: np.ndarray = field(init=False, default=None)

    def factors(self):
        """Dense matrices whose left-to-right product is the approximation."""
        raise NotImplementedError

    def reconstruct(self):
        mats = self.factors()
        out = mats[0]
        for M in mats[1:]:
            out = out @ M
        return out

    def apply(self, v):
        """Approximation times a vector or n x k block, right to left."""
        for M in reversed(self.factors()):
            v = M @ v
        return v

    def apply_transpose(self, u):
        for M in self.factors():
            u = M.T @ u
        return u

    @property
    def rank(self):
        return min(M.shape[1] for M in self.factors()[:-1])

    def export(self, directory):
        """Write every factor as Matrix Market plus ``manifest.json``."""
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        names = []
        for name, M in self._named():
            fname = f"{name}.mtx"
            write_matrix_market(d / fname, M, fmt="array")
            names.append({"name": name, "file": fname,
                          "shape": list(M.shape)})
        manifest = {
            "kind": self.kind,
            "shape": list(self.shape),
            "Is": None if self.Is is None else [int(i) for i in self.Is],
            "Js": None if self.Js is None else [int(j) for j in self.Js],
            "factors": names,
        }
        (d / "manifest.json").write_text(json.dumps(manifest, indent=2))
        return d / "manifest.json"

    def _named(self):
        return [(f"F{i}", M) for i, M in enumerate(self.factors())]


@dataclass
class ColumnID(Factors):
    C: np.ndarray
    Z: np.ndarray

    def __post_init__(self):
        self.kind = "column_id"
        self.shape = (self.C.shape[0], self.Z.shape[1])

    def factors(self):
        return [self.C, self.Z]

    def _named(self):
        return [("C", self.C), ("Z", self.Z)]


@dataclass
class RowID(Factors):
    W: np.ndarray
    R: np.ndarray

    def __post_init__(self):
        self.kind = "row_id"
        self.shape = (self.W.shape[0], self.R.shape[1])

    def factors(self):
        return [self.W, self.R]

    def _named(self):
        return [("W", self.W), ("R", self.R)]


@dataclass
class TwoSidedID(Factors):
    """``(C S^{-1}) S (C^+ A)``; ``cond_S`` is the 2-norm condition number
    of the two-sided skeleton."""
    CSinv: np.ndarray
    S: np.ndarray
    Z: np.ndarray
    cond_S: float = None

    def __post_init__(self):
        self.kind = "two_sided_id"
        self.shape = (self.CSinv.shape[0], self.Z.shape[1])

    def factors(self):
        return [self.CSinv, self.S, self.Z]

    def _named(self):
        return [("CSinv", self.CSinv), ("S", self.S), ("CdagA", self.Z)]


@dataclass
class StableCUR(Factors):
    """``Q_C (Q_C^T A Q_R) Q_R^T`` with orthonormal Q_C (m x l), Q_R (n x l)."""
    QC: np.ndarray
    M: np.ndarray
    QR: np.ndarray

    def __post_init__(self):
        self.kind = "cur_stable"
        self.shape = (self.QC.shape[0], self.QR.shape[0])

    def factors(self):
        return [self.QC, self.M, self.QR.T]

    def _named(self):
        return [("QC", self.QC), ("M", self.M), ("QR", self.QR)]


@dataclass
class SkeletonCUR(Factors):
    """``C S^{-1} R`` from retrieved skeletons only."""
    C: np.ndarray
    S: np.ndarray
    R: np.ndarray

    def __post_init__(self):
        self.kind = "cur_skeleton_inverse"
        self.shape = (self.C.shape[0], self.R.shape[1])
        self._lu = _lu_checked(self.S, "two-sided skeleton S")

    def factors(self):
        return [self.C, lu_solve(self._lu, self.R, check_finite=False)]

    def apply(self, v):
        return self.C @ lu_solve(self._lu, self.R @ v, check_finite=False)

    def _named(self):
        return [("C", self.C), ("S", self.S), ("R", self.R)]


@dataclass
class StreamingID(Factors):
    """Interpolation coefficients estimated from sketches alone.

    ``Zx ~ C^+ A`` (l x n) and ``Wy ~ A R^+`` (m x l).  Reconstruction needs
    the retrieved skeletons: ``C @ Zx`` when C is attached, else ``Wy @ R``.
    """
    Zx: np.ndarray
    Wy: np.ndarray
    C: np.ndarray = None
    R: np.ndarray = None

    def __post_init__(self):
        self.kind = "id_streaming"
        self.shape = (self.Wy.shape[0], self.Zx.shape[1])

    def factors(self):
        if self.C is not None:
            return [self.C, self.Zx]
        if self.R is not None:
            return [self.Wy, self.R]
        raise ParameterError("attach C or R (one skeleton-retrieval pass) "
                             "before reconstructing")

    def _named(self):
        out = [("Zx", self.Zx), ("Wy", self.Wy)]
        if self.C is not None:
            out.append(("C", self.C))
        if self.R is not None:
            out.append(("R", self.R))
        return out


def _indices(idx, bound, name):
    idx = np.asarray(idx, dtype=np.intp)
    if idx.ndim != 1 or idx.size == 0:
        raise ParameterError(f"{name} must be a non-empty index list")
    if idx.min() < 0 or idx.max() >= bound or np.unique(idx).size != idx.size:
        raise ParameterError(f"{name} must hold distinct indices in [0, {bound})")
    return idx


def _coefficients(A, C):
    """``C^+ A`` via QR of C (one product with A^T)."""
    Q, R = _qr_checked(C, "column skeleton C")
    return solve_triangular(R, A.apply_transpose(Q).T, check_finite=False)


def build_column_id(A, Js):
    """Column ID ``C Z`` with ``C = A[:, Js]`` and ``Z = C^+ A``."""
    A = as_source(A)
    Js = _indices(Js, A.n, "Js")
    C = A.columns(Js)
    F = ColumnID(C, _coefficients(A, C))
    F.Js = Js
    return F


def build_row_id(A, Is):
    """Row ID ``W R`` with ``R = A[Is, :]`` and ``W = A R^+``."""
    A = as_source(A)
    Is = _indices(Is, A.m, "Is")
    R = A.rows(Is)
    Q, T = _qr_checked(R.T, "row skeleton R")
    # R^+ = Q T^{-T}
    W = solve_triangular(T, A.apply(Q).T, check_finite=False).T
    F = RowID(W, R)
    F.Is = Is
    return F


def build_two_sided_id(A, Is, Js):
    """Two-sided ID; ``C S^{-1}`` and ``C^+ A`` are computed by solves."""
    A = as_source(A)
    Is = _indices(Is, A.m, "Is")
    Js = _indices(Js, A.n, "Js")
    if Is.size != Js.size:
        raise ParameterError("|Is| must equal |Js|")
    C = A.columns(Js)
    S = C[Is, :]
    lu = _lu_checked(S, "two-sided skeleton S")
    CSinv = lu_solve(lu, C.T, trans=1, check_finite=False).T
    sv = svd(S, compute_uv=False, check_finite=False)
    F = TwoSidedID(CSinv, S, _coefficients(A, C), float(sv[0] / sv[-1]))
    F.Is, F.Js = Is, Js
    return F


def build_cur_stable(A, Is, Js):
    """CUR through orthonormal bases of C and R^T (no pseudoinverses)."""
    A = as_source(A)
    Is = _indices(Is, A.m, "Is")
    Js = _indices(Js, A.n, "Js")
    QC, _ = _qr_checked(A.columns(Js), "column skeleton C")
    QR, _ = _qr_checked(A.rows(Is).T, "row skeleton R")
    M = QC.T @ A.apply(QR)
    F = StableCUR(QC, M, QR)
    F.Is, F.Js = Is, Js
    return F


def build_cur_skeleton_inverse(C, S, R, Is=None, Js=None):
    """``C S^{-1} R`` from already retrieved skeletons."""
    C, S, R = (np.asarray(M, dtype=np.float64) for M in (C, S, R))
    if S.shape[0] != S.shape[1] or C.shape[1] != S.shape[0] or \
            R.shape[0] != S.shape[0]:
        raise ParameterError("skeleton shapes are inconsistent")
    F = SkeletonCUR(C, S, R)
    F.Is = None if Is is None else np.asarray(Is, dtype=np.intp)
    F.Js = None if Js is None else np.asarray(Js, dtype=np.intp)
    return F


def estimate_id_from_sketches(X, Y, Js, Is, C=None, R=None):
    """``C^+ A ~ X1^{-1} X`` and ``A R^+ ~ Y Y1^{-1}`` from the sketches
    ``X = Gamma A`` and ``Y = A Omega^T``.  Never touches A."""
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    Js = _indices(Js, X.shape[1], "Js")
    Is = _indices(Is, Y.shape[0], "Is")
    Zx = lu_solve(_lu_checked(X[:, Js], "pivot block X1"), X,
                  check_finite=False)
    Wy = lu_solve(_lu_checked(Y[Is, :], "pivot block Y1"), Y.T, trans=1,
                  check_finite=False).T
    F = StreamingID(Zx, Wy, C=C, R=R)
    F.Is, F.Js = Is, Js
    return F


# --------------------------------------------------------------------------
# error evaluation

@dataclass
class ErrorReport:
    err: float
    opt_err: float
    ratio: float
    norm: str
    tolerance: float = 0.0


def _norm_name(norm):
    if norm in ("fro", "f"):
        return "fro"
    if norm in ("spec", "spectral", 2, "2"):
        return "spec"
    raise ParameterError(f"unknown norm {norm!r}")


def optimal_error(spectrum, k, norm="fro"):
    """Error of the best rank-k approximation given all singular values."""
    s = np.sort(np.asarray(spectrum, dtype=np.float64))[::-1]
    tail = s[k:]
    if _norm_name(norm) == "fro":
        return float(np.sqrt(np.sum(tail * tail)))
    return float(tail[0]) if tail.size else 0.0


def _residual_norm_iterative(A, F, norm, tol=1e-4, maxiter=300, block=512):
    if norm == "fro":
        total = 0.0
        for start in range(0, A.n, block):
            stop = min(start + block, A.n)
            E = np.zeros((A.n, stop - start))
            E[np.arange(start, stop), np.arange(stop - start)] = 1.0
            D = A._product(E) - F.apply(E)
            total += float(np.sum(D * D))
        return np.sqrt(total), 0.0
    v = np.random.default_rng(0).standard_normal(A.n)
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(maxiter):
        u = A._product(v) - F.apply(v)
        w = A._rproduct(u) - F.apply_transpose(u)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0, tol
        new = np.sqrt(nw)
        v = w / nw
        if abs(new - est) <= tol * new:
            return float(new), tol
        est = new
    return float(est), tol


def evaluate_error(A, F, k, norm="fro", spectrum=None):
    """``||A - F||`` against the optimal rank-k error.

    The optimum comes from a dense SVD of A, or from ``spectrum`` when given.
    ``ratio`` is ``err / opt_err``.  When ``opt_err <= 1e-12 ||A||_F`` the
    optimum is treated as zero and the ratio is 1 if ``err`` is below the
    same threshold, ``inf`` otherwise.
    """
    A = as_source(A)
    norm = _norm_name(norm)
    dense_ok = A.m * A.n <= DENSE_BUDGET
    if spectrum is None and not dense_ok:
        raise ParameterError(
            f"{A.m}x{A.n} exceeds the dense SVD budget; supply the spectrum")
    tol = 0.0
    if dense_ok:
        D = A.to_dense()
        E = D - F.reconstruct()
        err = float(np.linalg.norm(E)) if norm == "fro" else \
            float(svd(E, compute_uv=False, check_finite=False)[0])
        if spectrum is None:
            spectrum = svd(D, compute_uv=False, check_finite=False)
        fro = float(np.linalg.norm(D))
    else:
        err, tol = _residual_norm_iterative(A, F, norm)
        fro = float(np.sqrt(np.sum(np.square(spectrum))))
    opt = optimal_error(spectrum, k, norm)
    # an optimum at rounding level counts as exact (SVD tails are never 0)
    zero = ZERO_TOL * max(fro, np.finfo(float).tiny)
    if opt <= zero:
        ratio = 1.0 if err <= zero else float("inf")
    else:
        ratio = err / opt
    return ErrorReport(err, opt, ratio, norm, tol)
