import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import sparse

from randcur.errors import FormatError, ParameterError
from randcur.matsource import (MatrixSource, SnnSpec, load_matrix_market,
                               load_snn_config, snn_generate, snn_weights,
                               stream_columns, stream_triplets,
                               write_matrix_market)


# -- MatrixSource -----------------------------------------------------------

def test_dense_source_is_read_only_copy():
    D = np.arange(6.0).reshape(2, 3)
    A = MatrixSource(D)
    D[0, 0] = 99
    assert A.dense[0, 0] == 0
    with pytest.raises(ValueError):
        A.dense[0, 0] = 1


@pytest.mark.parametrize("storage", ["dense", "sparse"])
def test_apply_matches_explicit_product_exactly(storage):
    rng = np.random.default_rng(0)
    D = rng.standard_normal((7, 5))
    A = MatrixSource(D if storage == "dense" else sparse.csc_matrix(D))
    ref = A.dense if storage == "dense" else A.sparse_csc
    vecs = [np.eye(5)[:, j] for j in range(5)] + [rng.standard_normal(5)]
    for v in vecs:
        assert np.array_equal(A.apply(v), np.asarray(ref @ v))
    for u in [np.eye(7)[:, 0], rng.standard_normal(7)]:
        assert np.array_equal(A.apply_transpose(u), np.asarray(ref.T @ u))


def test_oracle_source_counts_applies():
    D = np.arange(12.0).reshape(3, 4)
    A = MatrixSource(shape=D.shape, matvec=lambda x: D @ x,
                     rmatvec=lambda y: D.T @ y)
    assert not A.explicit
    np.testing.assert_allclose(A.apply(np.ones(4)), D.sum(axis=1))
    np.testing.assert_allclose(A.to_dense(), D)
    A.reset_counters()
    A.apply(np.ones((4, 2)))
    A.apply_transpose(np.ones((3, 2)))
    assert A.apply_count == 2


def test_source_rejects_bad_input():
    with pytest.raises(ParameterError):
        MatrixSource(np.zeros(3))
    with pytest.raises(ParameterError):
        MatrixSource(shape=(2, 2))


# -- SNN --------------------------------------------------------------------

def _dense_snn_oracle(spec):
    """Replays the documented draws and sums the outer products densely."""
    rng = np.random.default_rng(spec.seed)

    def factor(dim):
        per = min(dim, math.ceil(spec.density * dim))
        keys = rng.random((spec.r, dim))
        idx = np.argpartition(keys, per - 1, axis=1)[:, :per] if per < dim \
            else np.tile(np.arange(dim), (spec.r, 1))
        vals = 1.0 - rng.random((spec.r, per))
        F = np.zeros((spec.r, dim))
        for i in range(spec.r):
            F[i, idx[i]] = vals[i]
        return F

    X, Y = factor(spec.m), factor(spec.n)
    A = np.zeros((spec.m, spec.n))
    for i in range(spec.r):
        A += spec.s[i] * np.outer(X[i], Y[i])
    return A, X, Y


def test_snn_single_outer_product():
    # one nonzero per factor vector; find a seed that puts it at (0, 0)
    for seed in range(200):
        spec = SnnSpec([1.0], 5, 5, density=0.2, seed=seed)
        D = snn_generate(spec).to_dense()
        if D[0, 0] != 0:
            break
    E = np.zeros((5, 5))
    E[0, 0] = 1.0
    assert np.count_nonzero(D) == 1
    assert 0 < D[0, 0] <= 1
    np.testing.assert_array_equal(D / D[0, 0], E)


def test_snn_desk_spectrum_matches_dense_oracle():
    spec = SnnSpec(snn_weights(200, head=100), 200, 200, seed=1)
    A = snn_generate(spec)
    oracle, _, _ = _dense_snn_oracle(spec)
    np.testing.assert_allclose(A.to_dense(), oracle, rtol=0, atol=1e-14)
    s = np.linalg.svd(A.to_dense(), compute_uv=False)
    s_ref = np.linalg.svd(oracle, compute_uv=False)
    np.testing.assert_allclose(s, s_ref, rtol=1e-10, atol=1e-12)
    assert np.all(s[0] >= s)
    assert s[0] > 10 * s[99]


@settings(max_examples=25, deadline=None)
@given(r=st.integers(1, 12), m=st.integers(1, 40), n=st.integers(1, 40),
       density=st.floats(0.01, 1.0), seed=st.integers(0, 2**31))
def test_snn_nonnegative_low_rank_deterministic(r, m, n, density, seed):
    spec = SnnSpec(snn_weights(r, head=3), m, n, density=density, seed=seed)
    A = snn_generate(spec)
    D = A.to_dense()
    assert D.min() >= 0
    assert np.linalg.matrix_rank(D) <= r
    assert np.array_equal(D, snn_generate(spec).to_dense())
    per_x = min(m, math.ceil(density * m))
    per_y = min(n, math.ceil(density * n))
    assert A.nnz <= r * per_x * per_y


def test_snn_spec_validation():
    with pytest.raises(ParameterError):
        SnnSpec([], 4, 4)
    with pytest.raises(ParameterError):
        SnnSpec([1.0], 4, 4, density=0.0)
    with pytest.raises(ParameterError):
        SnnSpec([1.0, -1.0], 4, 4)


def test_snn_weights_profile():
    s = snn_weights(200, head=100)
    assert s[0] == 2.0 and s[99] == 2.0 / 100 and s[100] == 1.0 / 101


def test_load_snn_config(tmp_path):
    p = tmp_path / "snn.toml"
    p.write_text("[snn]\nm = 30\nn = 20\nr = 10\ns_head = 5\ndensity = 0.1\n"
                 "seed = 4\n")
    spec = load_snn_config(p)
    assert (spec.m, spec.n, spec.r, spec.seed) == (30, 20, 10, 4)
    np.testing.assert_allclose(spec.s, snn_weights(10, head=5))


# -- Matrix Market ---------------------------------------------------------

def test_identity_coordinate(tmp_path):
    p = tmp_path / "eye.mtx"
    p.write_text("%%MatrixMarket matrix coordinate real general\n"
                 "% comment\n2 2 2\n1 1 1.0\n2 2 1.0\n")
    np.testing.assert_array_equal(load_matrix_market(p).to_dense(),
                                  [[1, 0], [0, 1]])


def test_sparse_file_with_seven_entries(tmp_path):
    rng = np.random.default_rng(7)
    flat = rng.choice(20, 7, replace=False)
    rows, cols = flat % 5, flat // 5
    vals = rng.standard_normal(7)
    body = "".join(f"{i + 1} {j + 1} {float(v)!r}\n" for i, j, v in
                   zip(rows, cols, vals))
    p = tmp_path / "r.mtx"
    p.write_text("%%MatrixMarket matrix coordinate real general\n"
                 f"5 4 7\n{body}")
    A = load_matrix_market(p)
    assert A.shape == (5, 4) and A.nnz == 7
    D = np.zeros((5, 4))
    D[rows, cols] = vals
    np.testing.assert_array_equal(A.to_dense(), D)


@pytest.mark.parametrize("fmt", ["coordinate", "array"])
def test_round_trip(tmp_path, fmt):
    rng = np.random.default_rng(3)
    D = sparse.random(9, 6, density=0.3, random_state=3).toarray()
    D[D != 0] = rng.standard_normal(np.count_nonzero(D)) / 3
    p1, p2 = tmp_path / "a.mtx", tmp_path / "b.mtx"
    write_matrix_market(p1, sparse.csc_matrix(D) if fmt == "coordinate" else D)
    A = load_matrix_market(p1)
    np.testing.assert_array_equal(A.to_dense(), D)
    write_matrix_market(p2, A, fmt=fmt)
    assert p1.read_text() == p2.read_text()


def test_symmetric_storage_is_expanded(tmp_path):
    p = tmp_path / "s.mtx"
    p.write_text("%%MatrixMarket matrix coordinate real symmetric\n"
                 "3 3 3\n1 1 2.0\n3 1 5.0\n2 2 1.0\n")
    np.testing.assert_array_equal(load_matrix_market(p).to_dense(),
                                  [[2, 0, 5], [0, 1, 0], [5, 0, 0]])
    p.write_text("%%MatrixMarket matrix array real skew-symmetric\n"
                 "2 2\n3.0\n")
    np.testing.assert_array_equal(load_matrix_market(p).to_dense(),
                                  [[0, -3], [3, 0]])


@pytest.mark.parametrize("text,line", [
    ("%%MatrixMarket matrix coordinate complex general\n1 1 1\n1 1 1 0\n", 1),
    ("%%MatrixMarkt matrix coordinate real general\n1 1 1\n1 1 1\n", 1),
    ("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1\n3 1 1\n",
     4),
    ("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1\n", 2),
    ("%%MatrixMarket matrix coordinate real general\n2 x 1\n1 1 1\n", 2),
    ("%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1 abc\n", 3),
])
def test_format_errors_carry_line_numbers(tmp_path, text, line):
    p = tmp_path / "bad.mtx"
    p.write_text(text)
    with pytest.raises(FormatError) as exc:
        load_matrix_market(p)
    assert exc.value.line == line
    assert str(exc.value).startswith(f"line {line}:")


# -- streaming -------------------------------------------------------------

def test_stream_blocks_cover_columns():
    D = np.arange(30.0).reshape(3, 10)
    A = MatrixSource(D)
    blocks = list(stream_columns(A, 4))
    assert [(b.start, b.stop) for b in blocks] == [(0, 4), (4, 8), (8, 10)]
    np.testing.assert_array_equal(np.hstack([b.data for b in blocks]), D)
    assert A.pass_counter == 1
    list(stream_columns(A, 4))
    assert A.pass_counter == 2


def test_abandoned_stream_is_not_a_pass():
    A = MatrixSource(np.ones((2, 6)))
    it = stream_columns(A, 2)
    next(it)
    assert A.pass_counter == 0
    with pytest.raises(ParameterError):
        list(stream_columns(A, 0))


@settings(max_examples=20, deadline=None)
@given(m=st.integers(1, 12), n=st.integers(1, 12), bw=st.integers(1, 15),
       sparse_input=st.booleans(), seed=st.integers(0, 1000))
def test_stream_partitions(m, n, bw, sparse_input, seed):
    D = sparse.random(m, n, density=0.5, random_state=seed).toarray()
    A = MatrixSource(sparse.csc_matrix(D) if sparse_input else D)
    blocks = list(stream_columns(A, bw))
    assert len(blocks) == math.ceil(n / bw)
    covered = np.concatenate([np.arange(b.start, b.stop) for b in blocks])
    np.testing.assert_array_equal(covered, np.arange(n))
    R = np.zeros((m, n))
    for rows, cols, vals in stream_triplets(A, chunk=5):
        R[rows, cols] += vals
    np.testing.assert_array_equal(R, D)
    assert A.pass_counter == 2
