"""Command-line entry point: ``randcur <command> [options]``.

Commands: err-vs-rank, bench-embed, bench-pivot, skeleton, cur.
Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""
import argparse
import csv
import logging
import sys
from pathlib import Path

from .bench import (ALGORITHMS, EMBED_COLUMNS, ERR_COLUMNS, PIVOT_COLUMNS,
                    ExperimentConfig, bench_embed, bench_pivot, builtin_matrix,
                    err_vs_rank, run_selector)
from .embed import KINDS
from .errors import FormatError, InstabilityError, ParameterError, RankDeficiencyError
from .factors import build_cur_stable, build_column_id, evaluate_error
from .matsource import load_matrix_market, load_snn_config, snn_generate

log = logging.getLogger("randcur")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


def _read_config(path):
    try:
        import tomllib
    except ImportError:
        import tomli as tomllib
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except OSError as exc:
        raise ParameterError(f"cannot read config {path}: {exc}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ParameterError(f"invalid config {path}: {exc}") from None


def _write_csv(rows, columns, out):
    fh = open(out, "w", newline="") if out else sys.stdout
    try:
        w = csv.DictWriter(fh, fieldnames=columns, extrasaction="ignore",
                           lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v)
                        for k, v in r.items()})
    finally:
        if out:
            fh.close()


def _int_list(text):
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected integers, got {text!r}")


def _pairs(text):
    out = []
    for tok in text.split(","):
        try:
            l, n = tok.split(":")
            out.append((int(l), int(n)))
        except ValueError:
            raise argparse.ArgumentTypeError(
                f"expected l:n pairs, got {tok!r}") from None
    return out


def cmd_err_vs_rank(args):
    cfg = _read_config(args.config) if args.config else {}
    cfg = dict(cfg.get("experiment", cfg))
    for key in ("seed", "out", "trials", "norm", "oversample"):
        val = getattr(args, key)
        if val is not None:
            cfg[key] = val
    if "matrix" not in cfg:
        cfg["matrix"] = {"type": "builtin", "id": args.builtin or "snn200"}
    config = ExperimentConfig.from_dict(cfg)
    rows = err_vs_rank(config)
    _write_csv(rows, ERR_COLUMNS, config.out)
    return EXIT_OK


def cmd_bench_embed(args):
    rows = bench_embed(args.dims, args.l, n=args.n, kinds=args.kinds,
                       trials=args.trials or 3, seed=args.seed or 0)
    _write_csv(rows, EMBED_COLUMNS, args.out)
    return EXIT_OK


def cmd_bench_pivot(args):
    rows = bench_pivot(args.sizes, kinds=args.kinds, trials=args.trials or 3,
                       seed=args.seed or 0, m=args.m)
    _write_csv(rows, PIVOT_COLUMNS, args.out)
    return EXIT_OK


def _load_input(args):
    if args.matrix:
        return load_matrix_market(args.matrix)
    if args.snn:
        return snn_generate(load_snn_config(args.snn))
    return builtin_matrix(args.builtin or "snn200")


def cmd_skeleton(args, build_cur=False):
    A = _load_input(args)
    seed = args.seed or 0
    l = args.rank + (args.oversample or 0)
    ss = run_selector(args.algorithm, A, args.rank, l, seed)
    doc = ss.to_json()
    if args.out:
        Path(args.out).write_text(doc + "\n")
    else:
        print(doc)
    for name, cert in (("eta_col", ss.eta_col), ("eta_row", ss.eta_row)):
        if cert is not None:
            print(f"{name} = {cert.eta_bound:.6g}", file=sys.stderr)
    if build_cur:
        F = build_cur_stable(A, ss.Is, ss.Js)
    else:
        F = build_column_id(A, ss.Js) if args.export else None
    if F is not None:
        if A.m * A.n <= 16_000_000:
            rep = evaluate_error(A, F, args.rank, args.norm or "fro")
            print(f"{F.kind} error = {rep.err:.6g} (optimal {rep.opt_err:.6g}, "
                  f"ratio {rep.ratio:.6g})", file=sys.stderr)
        if args.export:
            F.export(args.export)
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(
        prog="randcur",
        description="Randomized skeleton selection and CUR/ID benchmarks.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--out", default=None)
        sp.add_argument("--trials", type=int, default=None)
        sp.add_argument("--norm", choices=("fro", "spec"), default=None)
        sp.add_argument("--oversample", type=int, default=None)

    e = sub.add_parser("err-vs-rank", help="CUR error against rank k")
    e.add_argument("--config", default=None)
    e.add_argument("--builtin", default=None)
    common(e)
    e.set_defaults(func=cmd_err_vs_rank)

    b = sub.add_parser("bench-embed", help="embedding application timings")
    b.add_argument("--dims", type=_int_list, default=[1000, 2000, 4000])
    b.add_argument("--l", type=_int_list, default=[50, 200])
    b.add_argument("--n", type=int, default=100)
    b.add_argument("--kinds", nargs="+", choices=KINDS, default=list(KINDS))
    common(b)
    b.set_defaults(func=cmd_bench_embed)

    v = sub.add_parser("bench-pivot", help="pivoting path timings")
    v.add_argument("--sizes", type=_pairs, default=[(100, 1000), (400, 4000)])
    v.add_argument("--kinds", nargs="+", choices=("lupp", "cpqr", "deim"),
                   default=["lupp", "cpqr", "deim"])
    v.add_argument("--m", type=int, default=None)
    common(v)
    v.set_defaults(func=cmd_bench_pivot)

    for name, helptext, cur in (("skeleton", "select skeletons", False),
                                ("cur", "select skeletons, build stable CUR",
                                 True)):
        s = sub.add_parser(name, help=helptext)
        src = s.add_mutually_exclusive_group()
        src.add_argument("--matrix", help="Matrix Market file")
        src.add_argument("--snn", help="SNN TOML description")
        src.add_argument("--builtin", default=None)
        s.add_argument("--algorithm", choices=sorted(ALGORITHMS),
                       default="rand-lupp")
        s.add_argument("--rank", type=int, required=True)
        s.add_argument("--export", default=None,
                       help="directory for Matrix Market factor export")
        common(s)
        s.set_defaults(func=lambda a, _cur=cur: cmd_skeleton(a, _cur))
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ParameterError, FormatError, FileNotFoundError) as exc:
        log.error("configuration error: %s", exc)
        print(f"randcur: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (RankDeficiencyError, InstabilityError) as exc:
        print(f"randcur: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
