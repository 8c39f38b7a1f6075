"""Experiment drivers behind the CLI: error-vs-rank sweeps and timing of
embeddings and pivoting paths.  Each returns a list of row dicts."""
import time
import zlib
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import svd

from .embed import KINDS, EmbeddingSpec, sketch
from .errors import ParameterError
from .factors import build_cur_stable, evaluate_error
from .matsource import (MatrixSource, SnnSpec, load_matrix_market,
                        snn_generate, snn_spec_from_dict, snn_weights)
from .pivot import lupp_columns, cpqr_columns
from .rangefinder import ortho
from .skeleton import rand_cpqr, rand_lupp, rsvd_deim, rsvd_leverage_sampling

__all__ = [
    "ALGORITHMS",
    "ERR_COLUMNS",
    "EMBED_COLUMNS",
    "PIVOT_COLUMNS",
    "ExperimentConfig",
    "builtin_matrix",
    "trial_seed",
    "run_selector",
    "err_vs_rank",
    "bench_embed",
    "bench_pivot",
    "pivot_path",
]

ERR_COLUMNS = ("algorithm", "k", "trial", "err", "opt_err", "ratio",
               "wall_seconds", "eta_col", "eta_row")
EMBED_COLUMNS = ("kind", "m", "n", "l", "seconds")
PIVOT_COLUMNS = ("kind", "l", "n", "seconds")


def _lupp(A, l, seed):
    return rand_lupp(A, l, seed=seed)


def _lupp1(A, l, seed):
    return rand_lupp(A, l, q=1, seed=seed)


def _cpqr(A, l, seed):
    return rand_cpqr(A, l, seed=seed)


def _cpqr1(A, l, seed):
    return rand_cpqr(A, l, q=1, seed=seed)


def _deim(A, l, seed):
    return rsvd_deim(A, l, seed=seed)


ALGORITHMS = {
    "rand-lupp": _lupp,
    "rand-lupp-1piter": _lupp1,
    "rand-cpqr": _cpqr,
    "rand-cpqr-1piter": _cpqr1,
    "rsvd-deim": _deim,
    "rsvd-ls": None,
}


def run_selector(name, A, k, l, seed):
    if name not in ALGORITHMS:
        raise ParameterError(f"unknown algorithm {name!r}")
    if name == "rsvd-ls":
        return rsvd_leverage_sampling(A, k, l, seed=seed)
    return ALGORITHMS[name](A, l, seed)


def trial_seed(master, algorithm, k, trial):
    """Deterministic per-trial seed from (master, algorithm, k, trial)."""
    ss = np.random.SeedSequence(
        [int(master), zlib.crc32(algorithm.encode()), int(k), int(trial)])
    return int(ss.generate_state(1)[0])


def builtin_matrix(name, seed=0):
    """Named test matrices: ``snn200``, ``snn1e3``, ``lowrank10``,
    ``diag5``."""
    if name == "snn200":
        return snn_generate(SnnSpec(snn_weights(200, head=20), 200, 200,
                                    seed=seed))
    if name == "snn1e3":
        return snn_generate(SnnSpec(snn_weights(1000, head=100), 1000, 1000,
                                    seed=seed))
    if name == "lowrank10":
        rng = np.random.default_rng(seed)
        return MatrixSource(rng.standard_normal((100, 10))
                            @ rng.standard_normal((10, 80)))
    if name == "diag5":
        return MatrixSource(np.diag([5.0, 4.0, 3.0, 2.0, 1.0]))
    raise ParameterError(f"unknown builtin matrix {name!r}")


@dataclass
class ExperimentConfig:
    matrix: dict
    algorithms: list = field(default_factory=lambda: ["rand-lupp"])
    ranks: list = field(default_factory=lambda: [10])
    norm: str = "fro"
    trials: int = 1
    seed: int = 0
    out: str = None
    oversample: int = 0

    def __post_init__(self):
        if not isinstance(self.matrix, dict) or "type" not in self.matrix:
            raise ParameterError("config field 'matrix' needs a 'type' key")
        if self.matrix["type"] not in ("snn", "mtx", "builtin"):
            raise ParameterError(
                f"config field 'matrix.type' must be snn, mtx or builtin, "
                f"got {self.matrix['type']!r}")
        bad = [a for a in self.algorithms if a not in ALGORITHMS]
        if bad or not self.algorithms:
            raise ParameterError(f"config field 'algorithms' has unknown "
                                 f"entries {bad}")
        self.ranks = [int(k) for k in self.ranks]
        if not self.ranks or any(k < 1 for k in self.ranks) or any(
                b <= a for a, b in zip(self.ranks, self.ranks[1:])):
            raise ParameterError("config field 'ranks' must be a strictly "
                                 "increasing list of positive integers")
        if int(self.trials) < 1:
            raise ParameterError("config field 'trials' must be >= 1")
        if self.norm not in ("fro", "spec"):
            raise ParameterError("config field 'norm' must be fro or spec")
        if int(self.oversample) < 0:
            raise ParameterError("config field 'oversample' must be >= 0")
        self.trials = int(self.trials)
        self.oversample = int(self.oversample)
        self.seed = int(self.seed)

    @classmethod
    def from_dict(cls, d):
        known = {"matrix", "algorithms", "ranks", "norm", "trials", "seed",
                 "out", "oversample"}
        extra = set(d) - known
        if extra:
            raise ParameterError(f"unknown config fields {sorted(extra)}")
        if "matrix" not in d:
            raise ParameterError("config field 'matrix' is required")
        return cls(**d)

    def load_matrix(self):
        mt = self.matrix
        if mt["type"] == "snn":
            return snn_generate(snn_spec_from_dict(mt))
        if mt["type"] == "mtx":
            if "path" not in mt:
                raise ParameterError("config field 'matrix.path' is required")
            return load_matrix_market(mt["path"])
        return builtin_matrix(mt.get("id", "snn200"), int(mt.get("seed", 0)))


def err_vs_rank(config, A=None):
    """One row per (algorithm, k, trial) with the stable-CUR error."""
    A = config.load_matrix() if A is None else A
    if A.m * A.n > 16_000_000:
        raise ParameterError("matrix exceeds the dense SVD budget")
    spectrum = svd(A.to_dense(), compute_uv=False)
    rows = []
    for alg in config.algorithms:
        for k in config.ranks:
            l = k + config.oversample
            for t in range(config.trials):
                seed = trial_seed(config.seed, alg, k, t)
                t0 = time.perf_counter()
                ss = run_selector(alg, A, k, l, seed)
                F = build_cur_stable(A, ss.Is, ss.Js)
                wall = time.perf_counter() - t0
                rep = evaluate_error(A, F, k, config.norm, spectrum=spectrum)
                rows.append({
                    "algorithm": alg, "k": k, "trial": t, "err": rep.err,
                    "opt_err": rep.opt_err, "ratio": rep.ratio,
                    "wall_seconds": wall,
                    "eta_col": "" if ss.eta_col is None else ss.eta_col.eta_bound,
                    "eta_row": "" if ss.eta_row is None else ss.eta_row.eta_bound,
                })
    return rows


def _median_time(fn, trials):
    times = []
    out = None
    for _ in range(trials):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return float(np.median(times)), out


def bench_embed(dims, ls, n=100, kinds=KINDS, trials=3, seed=0):
    """Median wall time of applying each embedding to a dense m x n matrix."""
    if trials < 1 or n < 1:
        raise ParameterError("trials and n must be >= 1")
    if any(int(m) < 1 for m in dims) or any(int(l) < 1 for l in ls):
        raise ParameterError("embedding dimensions must be positive")
    rows = []
    rng = np.random.default_rng(seed)
    for m in dims:
        A = MatrixSource(rng.standard_normal((int(m), n)))
        for l in ls:
            if l > m:
                continue
            for kind in kinds:
                spec = EmbeddingSpec(kind, int(l), int(m), seed=seed)
                sketch(spec, A)  # compile / warm caches
                sec, _ = _median_time(lambda: sketch(spec, A), trials)
                rows.append({"kind": kind, "m": int(m), "n": n, "l": int(l),
                             "seconds": sec})
    return rows


def pivot_path(kind, X=None, A=None, Y=None):
    """Pivot indices for one timed path.  ``lupp``/``cpqr`` pivot the row
    sketch X; ``deim`` orthonormalizes the column sketch Y, takes the SVD of
    ``Q_Y^T A`` and pivots its right singular vectors with LUPP."""
    if kind == "lupp":
        return lupp_columns(X).pivots
    if kind == "cpqr":
        return cpqr_columns(X).pivots
    if kind == "deim":
        B = ortho(Y).T @ A
        _, _, Vt = svd(B, full_matrices=False, check_finite=False)
        return lupp_columns(Vt).pivots
    raise ParameterError(f"unknown pivot path {kind!r}")


def bench_pivot(sizes, kinds=("lupp", "cpqr", "deim"), trials=3, seed=0,
                m=None, return_pivots=False):
    """Median wall time of each pivoting path on pre-generated sketches of a
    random m x n matrix (m defaults to n)."""
    if trials < 1:
        raise ParameterError("trials must be >= 1")
    rows = []
    for l, n in sizes:
        l, n = int(l), int(n)
        if not (1 <= l <= n):
            raise ParameterError(f"bad pivot size l={l}, n={n}")
        mm = n if m is None else int(m)
        rng = np.random.default_rng([seed, l, n])
        A = rng.standard_normal((mm, n))
        X = rng.standard_normal((l, mm)) @ A
        Y = A @ rng.standard_normal((n, l))
        for kind in kinds:
            pivot_path(kind, X, A, Y)  # warm-up (numba compilation)
            sec, piv = _median_time(lambda: pivot_path(kind, X, A, Y), trials)
            row = {"kind": kind, "l": l, "n": n, "seconds": sec}
            if return_pivots:
                row["pivots"] = piv
            rows.append(row)
    return rows
