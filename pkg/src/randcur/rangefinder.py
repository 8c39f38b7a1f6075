"""Row-space approximators: row sketches, plain and orthogonalized power
iteration, randomized SVD and approximate leverage scores."""
from dataclasses import dataclass

import numpy as np
from scipy.linalg import qr, svd

from .embed import EmbeddingSpec, sketch
from .errors import InstabilityError, ParameterError, RankDeficiencyError
from .matsource import as_source

__all__ = [
    "RowSpaceApproximator",
    "SpectralData",
    "ortho",
    "row_sketch_rangefinder",
    "plain_power_iteration",
    "orthogonalized_power_iteration",
    "randomized_svd",
    "leverage_scores",
    "rangefinder_error",
    "row_space_basis",
]

FULL_RANK_TOL = 1e-12
ORTHO_TOL = 1e-14


@dataclass
class RowSpaceApproximator:
    """An l x n matrix whose row space approximates the leading right
    singular subspace of A."""
    X: np.ndarray
    provenance: str
    q: int = 0
    seed: int = None

    @property
    def l(self):
        return self.X.shape[0]

    def singular_values(self):
        return svd(self.X, compute_uv=False)

    @property
    def full_row_rank(self):
        s = self.singular_values()
        return bool(s[-1] > FULL_RANK_TOL * s[0])


@dataclass
class SpectralData:
    """Rank-l SVD estimate ``A ~ U @ diag(s) @ V.T``."""
    U: np.ndarray
    s: np.ndarray
    V: np.ndarray

    def truncated(self, k):
        return SpectralData(self.U[:, :k], self.s[:k], self.V[:, :k])

    def reconstruct(self):
        return (self.U * self.s) @ self.V.T


def ortho(M, tol=ORTHO_TOL):
    """Orthonormal basis of the columns of a full-column-rank ``M``.

    Unpivoted QR with signs fixed so that ``diag(R) >= 0``.
    """
    Q, R = qr(M, mode="economic", check_finite=False)
    d = np.diag(R)
    ad = np.abs(d)
    if ad.size and (ad.max() == 0.0 or ad.min() <= tol * ad.max()):
        raise RankDeficiencyError(
            f"basis has numerical rank below {M.shape[1]}", stage="ortho")
    return Q * np.where(d < 0, -1.0, 1.0)


def _check_spec(spec, A, dim, name):
    if not isinstance(spec, EmbeddingSpec):
        raise ParameterError(f"{name}: expected an EmbeddingSpec")
    if spec.m != dim:
        raise ParameterError(
            f"{name}: embedding ambient dimension {spec.m} != {dim}")
    if spec.l > min(A.m, A.n):
        raise ParameterError(
            f"{name}: l={spec.l} exceeds min(m, n)={min(A.m, A.n)}")


def row_sketch_rangefinder(A, spec):
    """``X = Gamma @ A`` with a full-row-rank check."""
    A = as_source(A)
    _check_spec(spec, A, A.m, "row_sketch_rangefinder")
    X = sketch(spec, A, "row")
    rsa = RowSpaceApproximator(X, "sketch", 0, spec.seed)
    if not rsa.full_row_rank:
        raise RankDeficiencyError(
            f"row sketch with l={spec.l} is numerically rank deficient; "
            f"try a smaller l", stage="rangefinder")
    return rsa


def _finite(M, q):
    if not np.all(np.isfinite(M)):
        raise InstabilityError(
            f"plain power iteration produced non-finite values at q={q}; "
            f"use orthogonalized_power_iteration instead")
    return M


def plain_power_iteration(A, spec, q=1):
    """``X = Omega (A^T A)^q`` with an l x n column-side embedding Omega.

    Uses exactly 2q whole-matrix products.  No orthogonalization is done, so
    the trailing directions are lost once ``sigma_l / sigma_1`` raised to the
    power 2q drops below machine precision; the result is returned anyway
    (check :attr:`RowSpaceApproximator.full_row_rank`).
    """
    A = as_source(A)
    if q < 1:
        raise ParameterError("plain_power_iteration needs q >= 1")
    _check_spec(spec, A, A.n, "plain_power_iteration")
    # overflow is detected explicitly below
    with np.errstate(over="ignore", invalid="ignore"):
        Y = _finite(sketch(spec, A, "col"), 1)
        Z = _finite(A.apply_transpose(Y), 1)
        for i in range(2, q + 1):
            Y = _finite(A.apply(Z), i)
            Z = _finite(A.apply_transpose(Y), i)
    return RowSpaceApproximator(np.ascontiguousarray(Z.T), "plain_power", q,
                                spec.seed)


def orthogonalized_power_iteration(A, spec, q=1):
    """Subspace iteration with re-orthonormalization after every product.

    ``Y1 = A Omega^T``, ``Yi = ortho(A ortho(A^T Y(i-1)))``,
    ``X = ortho(Yq)^T A``.  Uses 2q whole-matrix products.
    """
    A = as_source(A)
    if q < 1:
        raise ParameterError("orthogonalized_power_iteration needs q >= 1")
    _check_spec(spec, A, A.n, "orthogonalized_power_iteration")
    Y = sketch(spec, A, "col")
    for _ in range(2, q + 1):
        Y = ortho(A.apply(ortho(A.apply_transpose(Y))))
    X = A.apply_transpose(ortho(Y)).T
    return RowSpaceApproximator(np.ascontiguousarray(X), "ortho_power", q,
                                spec.seed)


def randomized_svd(A, rowspace):
    """SVD of A restricted to the row space of ``rowspace``.

    ``rowspace`` is a RowSpaceApproximator, an l x n array, or an
    EmbeddingSpec (a row sketch is drawn first).  Costs one product with A.
    """
    A = as_source(A)
    if isinstance(rowspace, EmbeddingSpec):
        rowspace = row_sketch_rangefinder(A, rowspace)
    X = rowspace.X if isinstance(rowspace, RowSpaceApproximator) else \
        np.asarray(rowspace, dtype=np.float64)
    if X.shape[1] != A.n:
        raise ParameterError("row-space approximator has the wrong width")
    QX = ortho(X.T)
    B = A.apply(QX)
    U, s, Vt = svd(B, full_matrices=False, check_finite=False)
    return SpectralData(U, s, QX @ Vt.T)


def leverage_scores(sd, k):
    """Squared row norms of the leading k right singular vector estimates."""
    if not (1 <= k <= sd.V.shape[1]):
        raise ParameterError(f"k={k} must lie in [1, {sd.V.shape[1]}]")
    Vk = sd.V[:, :k]
    return np.einsum("ij,ij->i", Vk, Vk)


def row_space_basis(X):
    """Orthonormal n x rank basis of the row space of X (pseudoinverse
    semantics: singular values below max(l, n) * eps * s_max are dropped)."""
    X = np.asarray(X, dtype=np.float64)
    _, s, Vt = svd(X, full_matrices=False, check_finite=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((X.shape[1], 0))
    keep = s > max(X.shape) * np.finfo(float).eps * s[0]
    return Vt[keep].T


def rangefinder_error(A, X, norm="fro"):
    """``||A - A X^+ X||`` in the Frobenius (``fro``) or spectral (``2``)
    norm; A must be explicit (dense evaluation)."""
    A = as_source(A)
    D = A.to_dense()
    V = row_space_basis(X)
    E = D - (D @ V) @ V.T
    return _norm(E, norm)


def _norm(E, norm):
    if norm in ("fro", "f"):
        return float(np.linalg.norm(E))
    if norm in (2, "2", "spec", "spectral"):
        return float(svd(E, compute_uv=False)[0]) if E.size else 0.0
    raise ParameterError(f"unknown norm {norm!r}")
