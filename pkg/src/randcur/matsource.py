"""Matrix access layer: dense, sparse, black-box operators, SNN test matrices,
Matrix Market files and column/triplet streaming with pass accounting."""
import math
import threading
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import sparse

from .errors import FormatError, ParameterError

__all__ = [
    "MatrixSource",
    "SnnSpec",
    "StreamBlock",
    "as_source",
    "snn_generate",
    "snn_weights",
    "load_snn_config",
    "load_matrix_market",
    "write_matrix_market",
    "stream_columns",
    "stream_triplets",
]


class MatrixSource:
    """A real m x n matrix behind a uniform access interface.

    Exactly one of ``dense``, ``sparse_csc`` or the ``matvec``/``rmatvec``
    pair is populated.  Storage is never mutated after construction.

    Two counters are kept: ``pass_counter`` counts completed streamed
    traversals (see :func:`stream_columns`), ``apply_count`` counts whole-matrix
    products ``A @ X`` or ``A.T @ Y`` requested through :meth:`apply`,
    :meth:`apply_transpose` or recorded by sketching routines.
    """

    def __init__(self, data=None, *, shape=None, matvec=None, rmatvec=None,
                 nnz=None):
        self._lock = threading.Lock()
        self._passes = 0
        self._applies = 0
        self._matvec = None
        self._rmatvec = None
        self.dense = None
        self.sparse_csc = None
        if data is not None:
            if sparse.issparse(data):
                A = sparse.csc_matrix(data, dtype=np.float64, copy=True)
                A.sum_duplicates()
                self.sparse_csc = A
                self.storage = "sparse"
                self.m, self.n = A.shape
                self.nnz = int(A.nnz)
            else:
                A = np.array(data, dtype=np.float64, order="C", copy=True)
                if A.ndim != 2:
                    raise ParameterError("matrix data must be 2-dimensional")
                A.setflags(write=False)
                self.dense = A
                self.storage = "dense"
                self.m, self.n = A.shape
                self.nnz = self.m * self.n
        else:
            if shape is None or matvec is None or rmatvec is None:
                raise ParameterError(
                    "an operator source needs shape, matvec and rmatvec")
            self.m, self.n = (int(s) for s in shape)
            self._matvec = matvec
            self._rmatvec = rmatvec
            self.storage = "oracle"
            self.nnz = self.m * self.n if nnz is None else int(nnz)
        if self.m < 1 or self.n < 1:
            raise ParameterError(f"empty matrix of shape {self.shape}")
        if self.nnz > self.m * self.n:
            raise ParameterError("nnz exceeds m*n")

    def __repr__(self):
        return (f"MatrixSource({self.m}x{self.n}, storage={self.storage!r}, "
                f"nnz={self.nnz})")

    @property
    def shape(self):
        return (self.m, self.n)

    @property
    def pass_counter(self):
        return self._passes

    @property
    def apply_count(self):
        return self._applies

    @property
    def explicit(self):
        return self.storage != "oracle"

    def record_pass(self):
        with self._lock:
            self._passes += 1

    def record_apply(self, count=1):
        with self._lock:
            self._applies += count

    def reset_counters(self):
        with self._lock:
            self._passes = 0
            self._applies = 0

    # -- products ----------------------------------------------------------

    def _product(self, x):
        if self.storage == "dense":
            return self.dense @ x
        if self.storage == "sparse":
            return np.asarray(self.sparse_csc @ x)
        return np.asarray(self._matvec(x), dtype=np.float64)

    def _rproduct(self, y):
        if self.storage == "dense":
            return self.dense.T @ y
        if self.storage == "sparse":
            return np.asarray(self.sparse_csc.T @ y)
        return np.asarray(self._rmatvec(y), dtype=np.float64)

    def apply(self, x):
        """Return ``A @ x`` for a vector or an n x k block."""
        x = np.asarray(x, dtype=np.float64)
        if x.shape[0] != self.n:
            raise ParameterError(
                f"apply: operand has {x.shape[0]} rows, expected {self.n}")
        self.record_apply()
        return self._product(x)

    def apply_transpose(self, y):
        """Return ``A.T @ y`` for a vector or an m x k block."""
        y = np.asarray(y, dtype=np.float64)
        if y.shape[0] != self.m:
            raise ParameterError(
                f"apply_transpose: operand has {y.shape[0]} rows, "
                f"expected {self.m}")
        self.record_apply()
        return self._rproduct(y)

    # -- skeleton retrieval ------------------------------------------------

    def columns(self, J):
        """Dense m x |J| copy of ``A[:, J]``."""
        J = np.asarray(J, dtype=np.intp)
        if self.storage == "dense":
            return self.dense[:, J].copy()
        if self.storage == "sparse":
            return self.sparse_csc[:, J].toarray()
        E = np.zeros((self.n, J.size))
        E[J, np.arange(J.size)] = 1.0
        return self._product(E)

    def rows(self, I):
        """Dense |I| x n copy of ``A[I, :]``."""
        I = np.asarray(I, dtype=np.intp)
        if self.storage == "dense":
            return self.dense[I, :].copy()
        if self.storage == "sparse":
            return self.sparse_csc.tocsr()[I, :].toarray()
        E = np.zeros((self.m, I.size))
        E[I, np.arange(I.size)] = 1.0
        return self._rproduct(E).T

    def submatrix(self, I, J):
        return self.rows(I)[:, np.asarray(J, dtype=np.intp)]

    def column_block(self, start, stop):
        """Dense copy of the contiguous column range ``start:stop``."""
        if self.storage == "dense":
            return self.dense[:, start:stop].copy()
        if self.storage == "sparse":
            return self.sparse_csc[:, start:stop].toarray()
        return self.columns(np.arange(start, stop))

    def to_dense(self):
        """Materialize A; for operator sources this costs one application."""
        if self.storage == "dense":
            return self.dense.copy()
        if self.storage == "sparse":
            return self.sparse_csc.toarray()
        return self._product(np.eye(self.n))

    def frobenius_norm(self):
        if self.storage == "dense":
            return float(np.linalg.norm(self.dense))
        if self.storage == "sparse":
            return float(sparse.linalg.norm(self.sparse_csc))
        return float(np.linalg.norm(self.to_dense()))


def as_source(A):
    """Wrap an array, sparse matrix or existing source as a MatrixSource."""
    if isinstance(A, MatrixSource):
        return A
    return MatrixSource(A)


# --------------------------------------------------------------------------
# SNN matrices

@dataclass
class SnnSpec:
    """Parameters of a sparse non-negative test matrix sum_i s_i x_i y_i^T."""
    s: np.ndarray
    m: int
    n: int
    density: float = 0.025
    seed: int = 0

    def __post_init__(self):
        self.s = np.atleast_1d(np.asarray(self.s, dtype=np.float64))
        if self.s.size == 0:
            raise ParameterError("SNN weights must be non-empty")
        if np.any(self.s <= 0):
            raise ParameterError("SNN weights must be strictly positive")
        if np.any(np.diff(self.s) > 0):
            raise ParameterError("SNN weights must be nonincreasing")
        if not (0 < self.density <= 1):
            raise ParameterError(
                f"SNN density must lie in (0, 1], got {self.density}")
        if self.m < 1 or self.n < 1:
            raise ParameterError("SNN dimensions must be positive")

    @property
    def r(self):
        return int(self.s.size)


def snn_weights(r, head=100, head_scale=2.0, tail_scale=1.0):
    """Weight profile s_i = head_scale/i for i <= head, tail_scale/i after."""
    i = np.arange(1, r + 1, dtype=np.float64)
    return np.where(i <= head, head_scale / i, tail_scale / i)


def _sparse_factor(rng, dim, r, density):
    per = min(dim, math.ceil(density * dim))
    # random keys + argpartition picks `per` distinct coordinates per column
    keys = rng.random((r, dim))
    idx = np.argpartition(keys, per - 1, axis=1)[:, :per] if per < dim \
        else np.tile(np.arange(dim), (r, 1))
    # uniform on (0, 1]
    vals = 1.0 - rng.random((r, per))
    cols = np.repeat(np.arange(r), per)
    return sparse.csc_matrix((vals.ravel(), (idx.ravel(), cols)),
                             shape=(dim, r))


def snn_generate(spec):
    """Draw ``A = sum_i s_i x_i y_i^T`` with sparse non-negative x_i, y_i.

    Each x_i (y_i) has ``ceil(density*m)`` (``ceil(density*n)``) nonzeros at
    distinct uniformly random coordinates, valued uniform on (0, 1].
    """
    if not isinstance(spec, SnnSpec):
        raise ParameterError("snn_generate expects an SnnSpec")
    rng = np.random.default_rng(spec.seed)
    Xf = _sparse_factor(rng, spec.m, spec.r, spec.density)
    Yf = _sparse_factor(rng, spec.n, spec.r, spec.density)
    A = (Xf @ sparse.diags(spec.s) @ Yf.T).tocsc()
    A.eliminate_zeros()
    return MatrixSource(A)


def load_snn_config(path):
    """Read an SNN description from a TOML file.

    Recognized keys: ``m``, ``n``, ``r``, ``density``, ``seed`` and either an
    explicit ``s`` list or the piecewise rule ``s_head`` (count),
    ``s_head_scale`` and ``s_tail_scale`` giving s_i = scale/i.
    """
    try:
        import tomllib
    except ImportError:  # python < 3.11
        import tomli as tomllib
    with open(path, "rb") as fh:
        cfg = tomllib.load(fh)
    cfg = cfg.get("snn", cfg)
    return snn_spec_from_dict(cfg)


def snn_spec_from_dict(cfg):
    try:
        m, n = int(cfg["m"]), int(cfg["n"])
    except KeyError as exc:
        raise ParameterError(f"SNN config missing key {exc.args[0]!r}") from None
    if "s" in cfg:
        s = np.asarray(cfg["s"], dtype=np.float64)
    else:
        if "r" not in cfg:
            raise ParameterError("SNN config needs either 's' or 'r'")
        s = snn_weights(int(cfg["r"]), head=int(cfg.get("s_head", 100)),
                        head_scale=float(cfg.get("s_head_scale", 2.0)),
                        tail_scale=float(cfg.get("s_tail_scale", 1.0)))
    return SnnSpec(s=s, m=m, n=n, density=float(cfg.get("density", 0.025)),
                   seed=int(cfg.get("seed", 0)))


# --------------------------------------------------------------------------
# Matrix Market

def load_matrix_market(path):
    """Read a real coordinate or array Matrix Market file.

    Symmetric and skew-symmetric storage is expanded to the full matrix.
    Raises :class:`FormatError` carrying the offending line number.
    """
    path = Path(path)
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise FormatError("empty file", line=1)
    header = lines[0].split()
    if (len(header) != 5 or header[0].lower() != "%%matrixmarket"
            or header[1].lower() != "matrix"):
        raise FormatError("malformed Matrix Market banner", line=1)
    fmt, field_, symm = (h.lower() for h in header[2:])
    if fmt not in ("coordinate", "array"):
        raise FormatError(f"unknown format {fmt!r}", line=1)
    if field_ == "complex":
        raise FormatError("complex matrices are not supported", line=1)
    if field_ not in ("real", "integer", "pattern", "double"):
        raise FormatError(f"unsupported field {field_!r}", line=1)
    if field_ == "pattern" and fmt == "array":
        raise FormatError("pattern field requires coordinate format", line=1)
    if symm not in ("general", "symmetric", "skew-symmetric"):
        raise FormatError(f"unsupported symmetry {symm!r}", line=1)

    body = [(k + 1, ln) for k, ln in enumerate(lines[1:], start=1)
            if ln.strip() and not ln.lstrip().startswith("%")]
    if not body:
        raise FormatError("missing size line", line=len(lines))
    size_no, size_line = body[0]
    try:
        dims = [int(t) for t in size_line.split()]
    except ValueError:
        raise FormatError("size line must hold integers", line=size_no) from None
    entries = body[1:]

    if fmt == "coordinate":
        if len(dims) != 3:
            raise FormatError("coordinate size line needs 'm n nnz'",
                              line=size_no)
        m, n, nz = dims
        if len(entries) != nz:
            raise FormatError(f"expected {nz} entries, found {len(entries)}",
                              line=size_no)
        rows = np.empty(nz, dtype=np.int64)
        cols = np.empty(nz, dtype=np.int64)
        vals = np.ones(nz)
        want = 2 if field_ == "pattern" else 3
        for k, (no, ln) in enumerate(entries):
            tok = ln.split()
            if len(tok) != want:
                raise FormatError(f"expected {want} fields", line=no)
            try:
                i, j = int(tok[0]), int(tok[1])
                if want == 3:
                    vals[k] = float(tok[2])
            except ValueError:
                raise FormatError("unparsable entry", line=no) from None
            if not (1 <= i <= m and 1 <= j <= n):
                raise FormatError(f"index ({i}, {j}) out of range", line=no)
            rows[k], cols[k] = i - 1, j - 1
        if symm != "general":
            off = rows != cols
            sign = -1.0 if symm == "skew-symmetric" else 1.0
            rows, cols, vals = (np.concatenate([rows, cols[off]]),
                                np.concatenate([cols, rows[off]]),
                                np.concatenate([vals, sign * vals[off]]))
        A = sparse.coo_matrix((vals, (rows, cols)), shape=(m, n)).tocsc()
        return MatrixSource(A)

    if len(dims) != 2:
        raise FormatError("array size line needs 'm n'", line=size_no)
    m, n = dims
    values = []
    for no, ln in entries:
        tok = ln.split()
        if len(tok) != 1:
            raise FormatError("array entries hold one value per line", line=no)
        try:
            values.append(float(tok[0]))
        except ValueError:
            raise FormatError("unparsable entry", line=no) from None
    A = np.zeros((m, n))
    if symm == "general":
        if len(values) != m * n:
            raise FormatError(f"expected {m * n} values, found {len(values)}",
                              line=size_no)
        A[:] = np.asarray(values).reshape((n, m)).T
    else:
        if m != n:
            raise FormatError("symmetric storage needs a square matrix",
                              line=size_no)
        lower = [(i, j) for j in range(n) for i in range(m)
                 if i > j or (i == j and symm == "symmetric")]
        if len(values) != len(lower):
            raise FormatError(
                f"expected {len(lower)} values, found {len(values)}",
                line=size_no)
        sign = -1.0 if symm == "skew-symmetric" else 1.0
        for (i, j), v in zip(lower, values):
            A[i, j] = v
            A[j, i] = v if i == j else sign * v
    return MatrixSource(A)


def write_matrix_market(path, A, fmt=None):
    """Write A (array, sparse matrix or explicit MatrixSource) in general real
    storage.  Values use ``repr`` precision so a reload is exact."""
    if isinstance(A, MatrixSource):
        if not A.explicit:
            raise ParameterError("cannot serialize an operator-only source")
        A = A.sparse_csc if A.storage == "sparse" else A.dense
    if fmt is None:
        fmt = "coordinate" if sparse.issparse(A) else "array"
    with open(path, "w") as fh:
        if fmt == "coordinate":
            C = sparse.coo_matrix(A)
            C.sum_duplicates()
            order = np.lexsort((C.row, C.col))
            fh.write("%%MatrixMarket matrix coordinate real general\n")
            fh.write(f"{C.shape[0]} {C.shape[1]} {C.nnz}\n")
            for k in order:
                fh.write(f"{C.row[k] + 1} {C.col[k] + 1} {repr(float(C.data[k]))}\n")
        elif fmt == "array":
            D = A.toarray() if sparse.issparse(A) else np.asarray(A, float)
            fh.write("%%MatrixMarket matrix array real general\n")
            fh.write(f"{D.shape[0]} {D.shape[1]}\n")
            for v in D.T.ravel():
                fh.write(f"{repr(float(v))}\n")
        else:
            raise ParameterError(f"unknown Matrix Market format {fmt!r}")


# --------------------------------------------------------------------------
# Streaming

@dataclass
class StreamBlock:
    """Columns ``start:stop`` (0-based, half open) of the streamed matrix."""
    start: int
    stop: int
    data: np.ndarray = field(repr=False)


def stream_columns(A, block_width):
    """Yield consecutive column panels covering A exactly once.

    The source's ``pass_counter`` is incremented when the generator is
    exhausted, so an abandoned traversal does not count as a pass.
    """
    A = as_source(A)
    if int(block_width) < 1:
        raise ParameterError("block_width must be >= 1")
    block_width = int(block_width)
    for start in range(0, A.n, block_width):
        stop = min(start + block_width, A.n)
        yield StreamBlock(start, stop, A.column_block(start, stop))
    A.record_pass()


def stream_triplets(A, chunk=4096):
    """Yield ``(rows, cols, vals)`` chunks of the nonzeros in column-major
    order.  Counts as one pass when exhausted."""
    A = as_source(A)
    if int(chunk) < 1:
        raise ParameterError("chunk must be >= 1")
    if A.storage == "sparse":
        C = A.sparse_csc.tocoo()
        order = np.lexsort((C.row, C.col))
        rows, cols, vals = C.row[order], C.col[order], C.data[order]
        for s in range(0, rows.size, chunk):
            yield (rows[s:s + chunk].astype(np.intp),
                   cols[s:s + chunk].astype(np.intp), vals[s:s + chunk])
    else:
        width = max(1, chunk // A.m)
        for start in range(0, A.n, width):
            stop = min(start + width, A.n)
            block = A.column_block(start, stop)
            jj, ii = np.nonzero(block.T)
            yield ii.astype(np.intp), (jj + start).astype(np.intp), block[ii, jj]
    A.record_pass()
