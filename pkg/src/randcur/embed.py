"""Oblivious l2 embeddings: Gaussian, subsampled randomized Hartley (SRTT)
and sparse sign matrices.

All randomness is counter based: column ``j`` of an embedding depends only on
``(seed, stream, j)``, never on how the columns are requested.  This is what
makes block-streamed sketches reproduce the one-shot sketch exactly.
"""
import math
from dataclasses import dataclass

import numpy as np
import scipy.fft
from scipy import sparse

from . import _kernels
from .errors import ParameterError
from .matsource import as_source

__all__ = [
    "EmbeddingSpec",
    "Embedding",
    "default_sketch_dim",
    "gaussian_sketch",
    "srtt_sketch",
    "sparse_sign_sketch",
    "sketch",
    "hartley",
]

KINDS = ("gaussian", "srtt", "sparse_sign")
ROW, COL = 0, 1
_CHUNK = 256


@dataclass(frozen=True)
class EmbeddingSpec:
    """An l x m embedding description.  ``zeta`` only matters for sparse sign
    and defaults to ``min(l, 8)``."""
    kind: str
    l: int
    m: int
    zeta: int = None
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParameterError(f"unknown embedding kind {self.kind!r}")
        if not (1 <= self.l <= self.m):
            raise ParameterError(
                f"embedding needs 1 <= l <= m, got l={self.l}, m={self.m}")
        if self.kind == "sparse_sign":
            if self.zeta is None:
                object.__setattr__(self, "zeta", min(self.l, 8))
            if not (2 <= self.zeta <= self.l):
                raise ParameterError(
                    f"sparse sign needs 2 <= zeta <= l, got zeta={self.zeta}, "
                    f"l={self.l}")

    def resized(self, m):
        """Same kind/l/zeta/seed with a different ambient dimension."""
        return EmbeddingSpec(self.kind, self.l, m, self.zeta, self.seed)


def default_sketch_dim(kind, k):
    """Sketch size for a target rank k when the caller gives none."""
    if kind == "gaussian":
        return k + 10
    return math.ceil(1.5 * k) + 10


def hartley(M, axis=0):
    """Unitary discrete Hartley transform along ``axis``."""
    F = scipy.fft.fft(M, axis=axis, norm="ortho")
    return F.real - F.imag


def _rng(seed, stream, chunk):
    return np.random.default_rng([int(seed), int(stream), int(chunk)])


class Embedding:
    """A concrete draw of the embedding described by ``spec``.

    ``stream`` separates independent embeddings derived from one seed (the
    row-side Gamma uses stream 0, the column-side Omega stream 1).
    """

    def __init__(self, spec, stream=ROW):
        self.spec = spec
        self.stream = stream
        self.l, self.m = spec.l, spec.m
        if spec.kind == "srtt":
            rng = _rng(spec.seed, stream, 0)
            self._perm = rng.permutation(self.m)
            self._signs = rng.choice(np.array([-1.0, 1.0]), size=self.m)
            self._sample = np.sort(rng.choice(self.m, size=self.l,
                                              replace=False))

    # -- column access -----------------------------------------------------

    def _chunks(self, start, stop):
        for c in range(start // _CHUNK, (stop - 1) // _CHUNK + 1):
            lo, hi = c * _CHUNK, min((c + 1) * _CHUNK, self.m)
            yield c, lo, hi, max(lo, start) - lo, min(hi, stop) - lo

    def _gaussian_columns(self, start, stop):
        out = np.empty((self.l, stop - start))
        scale = 1.0 / math.sqrt(self.l)
        for c, lo, hi, a, b in self._chunks(start, stop):
            G = _rng(self.spec.seed, self.stream, c).standard_normal(
                (self.l, hi - lo))
            out[:, lo + a - start:lo + b - start] = scale * G[:, a:b]
        return out

    def sparse_pattern(self, start=0, stop=None):
        """Row indices (w x zeta) and scaled signed values of columns
        ``start:stop`` of a sparse sign embedding."""
        stop = self.m if stop is None else stop
        zeta = self.spec.zeta
        rows = np.empty((stop - start, zeta), dtype=np.int64)
        vals = np.empty((stop - start, zeta))
        scale = 1.0 / math.sqrt(zeta)
        for c, lo, hi, a, b in self._chunks(start, stop):
            rng = _rng(self.spec.seed, self.stream, c)
            keys = rng.random((hi - lo, self.l))
            if zeta < self.l:
                idx = np.argpartition(keys, zeta - 1, axis=1)[:, :zeta]
            else:
                idx = np.argsort(keys, axis=1)
            sg = rng.choice(np.array([-1.0, 1.0]), size=(hi - lo, zeta))
            rows[lo + a - start:lo + b - start] = idx[a:b]
            vals[lo + a - start:lo + b - start] = scale * sg[a:b]
        return rows, vals

    def columns(self, start, stop):
        """Dense l x (stop - start) block of the embedding matrix."""
        if not (0 <= start < stop <= self.m):
            raise ParameterError(f"column range {start}:{stop} out of bounds")
        kind = self.spec.kind
        if kind == "gaussian":
            return self._gaussian_columns(start, stop)
        if kind == "sparse_sign":
            rows, vals = self.sparse_pattern(start, stop)
            out = np.zeros((self.l, stop - start))
            cols = np.repeat(np.arange(stop - start), rows.shape[1])
            np.add.at(out, (rows.ravel(), cols), vals.ravel())
            return out
        E = np.zeros((self.m, stop - start))
        E[np.arange(start, stop), np.arange(stop - start)] = 1.0
        return self.apply(E)

    def dense(self):
        return self.columns(0, self.m)

    def sparse_matrix(self):
        rows, vals = self.sparse_pattern()
        cols = np.repeat(np.arange(self.m), rows.shape[1])
        return sparse.csr_matrix((vals.ravel(), (rows.ravel(), cols)),
                                 shape=(self.l, self.m))

    # -- application -------------------------------------------------------

    def mix(self, M):
        """SRTT without subsampling: T Phi Pi M (an isometry)."""
        return hartley(M[self._perm] * self._signs.reshape(-1, *[1] * (M.ndim - 1)))

    def apply(self, M):
        """Return ``Gamma @ M`` for a dense array or sparse matrix with m rows."""
        if M.shape[0] != self.m:
            raise ParameterError(
                f"embedding expects {self.m} rows, operand has {M.shape[0]}")
        kind = self.spec.kind
        if kind == "gaussian":
            return self._gaussian_columns(0, self.m) @ M
        if kind == "sparse_sign":
            if sparse.issparse(M):
                return np.asarray((self.sparse_matrix() @ M).todense())
            rows, vals = self.sparse_pattern()
            M = np.ascontiguousarray(M, dtype=np.float64)
            vec = M.ndim == 1
            M2 = M.reshape(self.m, -1)
            out = np.zeros((self.l, M2.shape[1]))
            _kernels.sparse_sign_apply(rows, vals, M2, out)
            return out[:, 0] if vec else out
        if sparse.issparse(M):
            M = M.toarray()
        Z = self.mix(np.asarray(M, dtype=np.float64))
        return math.sqrt(self.m / self.l) * Z[self._sample]


def _check_kind(spec, kind):
    if spec.kind != kind:
        raise ParameterError(f"expected a {kind} spec, got {spec.kind!r}")


def _sketch(spec, A, side):
    """Row side: X = Gamma A (l x n).  Column side: Y = A Omega^T (m x l)."""
    A = as_source(A)
    if side not in ("row", "col"):
        raise ParameterError(f"side must be 'row' or 'col', got {side!r}")
    dim = A.m if side == "row" else A.n
    if spec.m != dim:
        raise ParameterError(
            f"embedding ambient dimension {spec.m} does not match the "
            f"{'row' if side == 'row' else 'column'} count {dim}")
    emb = Embedding(spec, ROW if side == "row" else COL)
    if A.storage == "oracle":
        G = emb.dense()
        if side == "row":
            return A.apply_transpose(G.T).T
        return A.apply(G.T)
    A.record_apply()
    if side == "row":
        M = A.sparse_csc if A.storage == "sparse" else A.dense
        return emb.apply(M)
    M = A.sparse_csc.T.tocsc() if A.storage == "sparse" else A.dense.T
    return emb.apply(M).T


def gaussian_sketch(spec, A, side="row"):
    """Sketch with i.i.d. N(0, 1/l) entries."""
    _check_kind(spec, "gaussian")
    return _sketch(spec, A, side)


def srtt_sketch(spec, A, side="row"):
    """Sketch with sqrt(m/l) * subsample * Hartley * signs * permutation."""
    _check_kind(spec, "srtt")
    return _sketch(spec, A, side)


def sparse_sign_sketch(spec, A, side="row"):
    """Sketch with zeta nonzeros of value +-1/sqrt(zeta) per column."""
    _check_kind(spec, "sparse_sign")
    return _sketch(spec, A, side)


def sketch(spec, A, side="row"):
    """Dispatch on ``spec.kind``."""
    return _sketch(spec, A, side)
