"""Skeleton selection: the sketch-then-pivot framework and its instances
(Rand-LUPP, Rand-CPQR, RSVD-DEIM), leverage-score sampling, single-pass
streaming selection and the a-posteriori eta certificate."""
import json
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgWarning, lu_factor, lu_solve, svd

from .embed import COL, ROW, Embedding, EmbeddingSpec
from .errors import ParameterError, RankDeficiencyError
from .matsource import as_source, stream_columns, stream_triplets
from .pivot import RANK_TOL, pivot_columns, pivot_rows
from .rangefinder import (leverage_scores, orthogonalized_power_iteration,
                          plain_power_iteration, randomized_svd,
                          row_sketch_rangefinder)

__all__ = [
    "EtaCertificate",
    "SkeletonSet",
    "eta_certificate",
    "select_framework",
    "rand_lupp",
    "rand_cpqr",
    "rsvd_deim",
    "rsvd_leverage_sampling",
    "leverage_sample",
    "streaming_select",
    "ROWSPACE_KINDS",
]

ROWSPACE_KINDS = ("sketch", "power", "rsvd")
# above this many remainder columns the spectral norm is estimated iteratively
DENSE_NORM_LIMIT = 5000


@dataclass
class EtaCertificate:
    """``eta = sqrt(1 + ||X1^{-1} X2||_2^2)`` for a pivoted l x n matrix X.

    ``X1`` holds the pivot columns, ``X2`` the remaining ones (in increasing
    index order).  ``residual_norm`` is the Frobenius rangefinder error
    ``||A - A X^+ X||_F`` when it was requested.
    """
    eta_bound: float
    X1: np.ndarray = field(repr=False)
    X2: np.ndarray = field(repr=False)
    coef_norm: float = 0.0
    residual_norm: float = None


def _spectral_norm(T, tol=1e-4, maxiter=200, seed=0):
    if T.size == 0:
        return 0.0
    if T.shape[1] <= DENSE_NORM_LIMIT:
        return float(svd(T, compute_uv=False, check_finite=False)[0])
    # power method on T^T T
    v = np.random.default_rng(seed).standard_normal(T.shape[1])
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(maxiter):
        w = T.T @ (T @ v)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        new = np.sqrt(nw)
        v = w / nw
        if abs(new - est) <= tol * new:
            return float(new)
        est = new
    return float(est)


def eta_certificate(X, pivots, A=None):
    """A-posteriori factor bounding the column ID error by the rangefinder
    error of X.  Costs one l x l LU and a solve with the n - l remaining
    columns.  With ``A`` given, the rangefinder residual is recorded too.
    """
    X = np.asarray(X, dtype=np.float64)
    pivots = np.asarray(pivots, dtype=np.intp)
    l, n = X.shape
    if pivots.size != l or np.unique(pivots).size != l:
        raise ParameterError("need exactly l distinct pivots")
    rest = np.setdiff1d(np.arange(n), pivots)
    X1, X2 = X[:, pivots], X[:, rest]
    with warnings.catch_warnings():
        # singularity is checked on the diagonal below
        warnings.simplefilter("ignore", LinAlgWarning)
        lu, piv = lu_factor(X1, check_finite=False)
    d = np.abs(np.diag(lu))
    if d.max() == 0.0 or d.min() <= RANK_TOL * d.max():
        raise RankDeficiencyError("pivot block X1 is singular", stage="eta")
    T = lu_solve((lu, piv), X2, check_finite=False) if rest.size else \
        np.zeros((l, 0))
    c = _spectral_norm(T)
    cert = EtaCertificate(float(np.sqrt(1.0 + c * c)), X1, X2, c)
    if A is not None:
        from .rangefinder import rangefinder_error
        cert.residual_norm = rangefinder_error(A, X, "fro")
    return cert


@dataclass
class SkeletonSet:
    """Selected column (``Js``) and row (``Is``) indices, 0-based.

    ``X`` and ``Y`` keep the row-space approximator and (for streaming) the
    column sketch the indices were pivoted from; they are not serialized.
    """
    Js: np.ndarray
    Is: np.ndarray = None
    algorithm: str = ""
    seed: int = None
    eta_col: EtaCertificate = None
    eta_row: EtaCertificate = None
    shape: tuple = None
    X: np.ndarray = field(default=None, repr=False)
    Y: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        self.Js = np.asarray(self.Js, dtype=np.intp)
        if self.Is is not None:
            self.Is = np.asarray(self.Is, dtype=np.intp)
            if self.Is.size != self.Js.size:
                raise ParameterError("|Is| must equal |Js|")
        for name, idx in (("Js", self.Js), ("Is", self.Is)):
            if idx is not None and np.unique(idx).size != idx.size:
                raise ParameterError(f"{name} contains repeated indices")
        if self.shape is not None:
            m, n = self.shape
            if self.Js.size and (self.Js.min() < 0 or self.Js.max() >= n):
                raise ParameterError("Js out of range")
            if self.Is is not None and self.Is.size and (
                    self.Is.min() < 0 or self.Is.max() >= m):
                raise ParameterError("Is out of range")

    @property
    def l(self):
        return int(self.Js.size)

    def to_dict(self):
        return {
            "algorithm": self.algorithm,
            "seed": self.seed,
            "shape": list(self.shape) if self.shape is not None else None,
            "l": self.l,
            "index_base": 0,
            "Js": [int(j) for j in self.Js],
            "Is": None if self.Is is None else [int(i) for i in self.Is],
            "eta_col": None if self.eta_col is None else self.eta_col.eta_bound,
            "eta_row": None if self.eta_row is None else self.eta_row.eta_bound,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, d):
        def cert(v):
            return None if v is None else EtaCertificate(
                float(v), np.zeros((0, 0)), np.zeros((0, 0)))
        shape = tuple(d["shape"]) if d.get("shape") is not None else None
        return cls(Js=d["Js"], Is=d.get("Is"), algorithm=d.get("algorithm", ""),
                   seed=d.get("seed"), eta_col=cert(d.get("eta_col")),
                   eta_row=cert(d.get("eta_row")), shape=shape)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def _make_spec(spec, l, dim, kind, seed):
    if spec is None:
        return EmbeddingSpec(kind, l, dim, seed=seed)
    if spec.l != l:
        raise ParameterError(f"embedding has l={spec.l}, requested l={l}")
    return spec.resized(dim) if spec.m != dim else spec


def _stage(stage, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except RankDeficiencyError as exc:
        raise RankDeficiencyError(str(exc), step=exc.step, stage=stage) from exc


def select_framework(A, l, rowspace_kind="sketch", pivot_kind="lupp", *,
                     spec=None, kind="gaussian", seed=0, q=1, rows=True,
                     with_residual=False, algorithm=None):
    """Sketch, pivot columns of the row-space approximator, pivot rows of C.

    rowspace_kind
        ``sketch``: X = Gamma A.  ``power``: X = Omega (A^T A)^q.
        ``rsvd``: X = right singular vector estimates from one
        orthogonalized power pass (DEIM).
    pivot_kind
        ``lupp`` or ``cpqr``; used for both the column and the row step.
    """
    A = as_source(A)
    if not (1 <= l <= min(A.m, A.n)):
        raise ParameterError(f"l={l} must lie in [1, min(m, n)]")
    if rowspace_kind == "sketch":
        s = _make_spec(spec, l, A.m, kind, seed)
        X = _stage("rowspace", row_sketch_rangefinder, A, s).X
    elif rowspace_kind == "power":
        s = _make_spec(spec, l, A.n, kind, seed)
        X = _stage("rowspace", plain_power_iteration, A, s, q).X
    elif rowspace_kind == "rsvd":
        s = _make_spec(spec, l, A.n, kind, seed)
        rs = _stage("rowspace", orthogonalized_power_iteration, A, s, 1)
        X = np.ascontiguousarray(_stage("rowspace", randomized_svd, A, rs).V.T)
    else:
        raise ParameterError(f"unknown rowspace kind {rowspace_kind!r}")
    pf = _stage("column pivoting", pivot_columns, X, pivot_kind)
    Js = pf.pivots
    eta_col = _stage("column pivoting", eta_certificate, X, Js,
                     A if with_residual else None)
    Is = eta_row = None
    if rows:
        C = A.columns(Js)
        pr = _stage("row pivoting", pivot_rows, C, pivot_kind)
        Is = pr.pivots
        eta_row = _stage("row pivoting", eta_certificate, C.T, Is)
    if algorithm is None:
        algorithm = f"{rowspace_kind}-{pivot_kind}"
    return SkeletonSet(Js=Js, Is=Is, algorithm=algorithm, seed=s.seed,
                       eta_col=eta_col, eta_row=eta_row, shape=A.shape, X=X)


def rand_lupp(A, l, spec=None, q=0, *, seed=0, kind="gaussian", **kwargs):
    """LUPP on a row sketch (q = 0) or on Omega (A^T A)^q (q >= 1)."""
    if q == 0:
        return select_framework(A, l, "sketch", "lupp", spec=spec, kind=kind,
                                seed=seed, algorithm="rand-lupp", **kwargs)
    return select_framework(A, l, "power", "lupp", spec=spec, kind=kind,
                            seed=seed, q=q, algorithm=f"rand-lupp-{q}piter",
                            **kwargs)


def rand_cpqr(A, l, spec=None, q=0, *, seed=0, kind="gaussian", **kwargs):
    """CPQR on a row sketch (q = 0) or on Omega (A^T A)^q (q >= 1)."""
    if q == 0:
        return select_framework(A, l, "sketch", "cpqr", spec=spec, kind=kind,
                                seed=seed, algorithm="rand-cpqr", **kwargs)
    return select_framework(A, l, "power", "cpqr", spec=spec, kind=kind,
                            seed=seed, q=q, algorithm=f"rand-cpqr-{q}piter",
                            **kwargs)


def rsvd_deim(A, l, spec=None, *, seed=0, kind="gaussian", **kwargs):
    """LUPP on randomized right singular vectors (one orthogonalized pass)."""
    return select_framework(A, l, "rsvd", "lupp", spec=spec, kind=kind,
                            seed=seed, algorithm="rsvd-deim", **kwargs)


def leverage_sample(scores, k, seed=0):
    """k distinct indices drawn sequentially with probability proportional
    to ``scores`` (renormalized after each draw)."""
    scores = np.asarray(scores, dtype=np.float64)
    if np.any(scores < 0) or not np.all(np.isfinite(scores)):
        raise ParameterError("leverage scores must be finite and nonnegative")
    support = np.count_nonzero(scores > 0)
    if support < k:
        raise RankDeficiencyError(
            f"only {support} nonzero scores, cannot sample {k} indices",
            stage="leverage")
    rng = np.random.default_rng(seed)
    return np.sort(rng.choice(scores.size, size=k, replace=False,
                              p=scores / scores.sum()))


def rsvd_leverage_sampling(A, k, l=None, spec=None, *, seed=0,
                           kind="gaussian"):
    """Sample k columns (rows) by the leverage scores of the rank-k
    truncation of a randomized SVD built from a row sketch of size l."""
    A = as_source(A)
    l = k if l is None else l
    if not (1 <= k <= l <= min(A.m, A.n)):
        raise ParameterError("need 1 <= k <= l <= min(m, n)")
    s = _make_spec(spec, l, A.m, kind, seed)
    sd = randomized_svd(A, _stage("rowspace", row_sketch_rangefinder, A, s))
    sd = sd.truncated(k)
    col_scores = leverage_scores(sd, k)
    row_scores = np.einsum("ij,ij->i", sd.U, sd.U)
    ss = np.random.SeedSequence([int(s.seed), 2])
    cs, rs = ss.spawn(2)
    Js = leverage_sample(col_scores, k, cs)
    Is = leverage_sample(row_scores, k, rs)
    return SkeletonSet(Js=Js, Is=Is, algorithm="rsvd-ls", seed=s.seed,
                       shape=A.shape)


def streaming_select(A, l, spec_gamma=None, spec_omega=None, pivot_kind="lupp",
                     *, block_width=64, seed=0, kind="gaussian",
                     mode="columns"):
    """Single-pass selection from independent row and column sketches.

    ``X = Gamma A`` and ``Y = A Omega^T`` are accumulated from one traversal
    of A (column panels, or nonzero triplets with ``mode="triplets"``);
    columns are pivoted on X and rows on Y.  The returned set carries both
    sketches so the ID coefficients can be estimated without another pass.
    """
    A = as_source(A)
    if not (1 <= l <= min(A.m, A.n)):
        raise ParameterError(f"l={l} must lie in [1, min(m, n)]")
    sg = _make_spec(spec_gamma, l, A.m, kind, seed)
    so = _make_spec(spec_omega, l, A.n, kind, seed)
    gamma = Embedding(sg, ROW)
    omega = Embedding(so, COL)
    X = np.zeros((l, A.n))
    Y = np.zeros((A.m, l))
    if mode == "columns":
        for blk in stream_columns(A, block_width):
            X[:, blk.start:blk.stop] = gamma.apply(blk.data)
            Y += blk.data @ omega.columns(blk.start, blk.stop).T
    elif mode == "triplets":
        G = gamma.dense()
        Om = omega.dense()
        for rows, cols, vals in stream_triplets(A):
            np.add.at(X.T, cols, vals[:, None] * G[:, rows].T)
            np.add.at(Y, rows, vals[:, None] * Om[:, cols].T)
    else:
        raise ParameterError(f"unknown streaming mode {mode!r}")
    for name, S in (("row sketch", X), ("column sketch", Y)):
        sv = svd(S, compute_uv=False, check_finite=False)
        if sv[0] == 0.0 or sv[-1] <= 1e-12 * sv[0]:
            raise RankDeficiencyError(f"{name} is numerically rank deficient",
                                      stage="streaming")
    Js = _stage("column pivoting", pivot_columns, X, pivot_kind).pivots
    Is = _stage("row pivoting", pivot_rows, Y, pivot_kind).pivots
    return SkeletonSet(Js=Js, Is=Is, algorithm=f"streaming-{pivot_kind}",
                       seed=sg.seed, eta_col=eta_certificate(X, Js),
                       eta_row=eta_certificate(Y.T, Is), shape=A.shape, X=X,
                       Y=Y)
