"""``smbic`` command line: generate, select, bench, subsample-size.

Exit codes: 1 usage or parameter error, 2 I/O error, 3 numerical failure.
Diagnostics go to stderr; with ``--format json`` stdout carries only JSON.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import logging
import os
import sys
from dataclasses import asdict, replace

import numpy as np

from . import bench
from .graph import GraphFormatError, degree_stats, load_edge_list, write_edge_list
from .selection import SelectionConfig, select_k
from .subsampling import read_nodeset, recommended_subsample_size, write_nodeset
from .synth import (
    DcsbmParams,
    GeneratorError,
    GeneratorRejection,
    OutlierParams,
    SbmParams,
    sample_dcsbm,
    sample_gsbm_with_outliers,
    sample_sbm,
    write_labels_csv,
)

EXIT_USAGE, EXIT_IO, EXIT_NUMERIC = 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; 2 is reserved for I/O here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _limit_threads(n: int | None):
    if n is None:
        return None
    # imported lazily so the library itself does not need it
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=n)


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="smbic", description="Estimate the number of communities in a network by SM-BIC.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="base random seed (default 0; bench: the spec's seed)")
    common.add_argument("--threads", type=_positive_int, default=None,
                        help="worker/BLAS thread cap (default: all cores); results do not depend on it")
    common.add_argument("--format", choices=("csv", "json"), default="csv",
                        help="output format for stdout (default csv)")

    g = sub.add_parser("generate", parents=[common], help="sample a planted-partition graph")
    g.add_argument("--model", choices=("sbm", "dcsbm", "gsbm"), default="sbm")
    g.add_argument("--k0", type=_positive_int, required=True, help="number of planted communities")
    g.add_argument("--n-nodes", type=_positive_int, required=True, help="number of community nodes N")
    g.add_argument("--rho", default="n^-0.5", help="density rule: constant, 'n^p' or 'c*n^p' (default n^-0.5)")
    g.add_argument("--beta", type=float, default=0.15, help="out-in ratio (default 0.15)")
    g.add_argument("--alpha", type=float, default=0.8, help="dcsbm: weight of the uniform degree component")
    g.add_argument("--outliers", type=int, default=0, help="gsbm: number of outlier nodes m")
    g.add_argument("--outlier-p", type=float, default=0.1, help="gsbm: outlier-outlier link probability")
    g.add_argument("--out", default="graph", help="output prefix; writes PREFIX.edges, PREFIX.labels.csv, PREFIX.json")

    s = sub.add_parser("select", parents=[common], help="choose K for an edge-list graph")
    s.add_argument("graph", help="edge-list file")
    s.add_argument("--indexing", choices=("zero", "one"), default="zero")
    s.add_argument("--model", choices=("sbm", "dcsbm"), default="sbm")
    s.add_argument("--k-max", type=_positive_int, default=10)
    s.add_argument("--n", type=_positive_int, default=None, help="subsample size (overrides --zeta/--rho)")
    s.add_argument("--zeta", type=float, default=1.5, help="size-rule constant (default 1.5)")
    s.add_argument("--rho", type=float, default=None, help="known density for the size rule (default: estimated)")
    s.add_argument("--assignment", choices=("spectral", "majority"), default="spectral")
    s.add_argument("--no-psi-term", action="store_true", help="dcsbm: drop sum A log(psi psi) from the likelihood")
    s.add_argument("--psi-normalization", choices=("raw", "block"), default="raw")
    s.add_argument("--subsample-file", default=None, help="reuse the node set stored in this file")
    s.add_argument("--save-subsample", default=None, help="write the node set used to this file")
    s.add_argument("--report", default=None, help="write the full JSON report here")
    s.add_argument("--labels", action="store_true", help="include per-K labels in the report")

    b = sub.add_parser("bench", parents=[common], help="run a Monte-Carlo experiment spec")
    b.add_argument("spec", help="spec file, or the name of a bundled spec (example1 .. example5)")
    b.add_argument("--replicates", type=_positive_int, default=None, help="override T")
    b.add_argument("--out", default=None, help="write the table here instead of stdout")

    z = sub.add_parser("subsample-size", parents=[common], help="ceil(zeta ln N / rho), capped at N")
    z.add_argument("--n-nodes", type=_positive_int, default=None)
    z.add_argument("--rho", type=float, default=None, help="density; estimated from --graph when omitted")
    z.add_argument("--graph", default=None, help="edge-list file to take N and the density from")
    z.add_argument("--indexing", choices=("zero", "one"), default="zero")
    z.add_argument("--zeta", type=float, default=1.5)
    return p


def _seed(args) -> int:
    return 0 if args.seed is None else args.seed


def _emit(args, payload: dict, text: str):
    if args.format == "json":
        print(json.dumps(payload, indent=2))
    else:
        print(text)


def cmd_generate(args) -> int:
    rule = bench.RhoRule.parse(args.rho)
    base = SbmParams(args.k0, args.n_nodes, rule(args.n_nodes), args.beta)
    if args.model == "sbm":
        g, truth = sample_sbm(base, _seed(args))
        params = asdict(base)
    elif args.model == "dcsbm":
        g, truth = sample_dcsbm(DcsbmParams(base, args.alpha), _seed(args))
        params = {**asdict(base), "alpha": args.alpha}
    else:
        g, truth = sample_gsbm_with_outliers(OutlierParams(base, args.outliers, args.outlier_p), _seed(args))
        params = {**asdict(base), "m": args.outliers, "outlier_p": args.outlier_p}
    paths = {"edges": args.out + ".edges", "labels": args.out + ".labels.csv", "params": args.out + ".json"}
    write_edge_list(g, paths["edges"])
    write_labels_csv(truth, paths["labels"])
    echo = {"model": args.model, "rho_rule": args.rho, "seed": _seed(args), **params,
            "num_nodes": g.num_nodes, "num_edges": g.num_edges, "attempts": truth.attempts,
            "clamped_pairs": truth.clamped_pairs}
    with open(paths["params"], "w") as fh:
        json.dump(echo, fh, indent=2)
    _emit(args, {"files": paths, **echo}, "\n".join(f"{k}={v}" for k, v in paths.items()))
    return 0


def cmd_select(args) -> int:
    g = load_edge_list(args.graph, args.indexing)
    logging.getLogger(__name__).info(g.summary.as_lines() if g.summary else "")
    cfg = SelectionConfig(K_max=args.k_max, model=args.model, seed=_seed(args), n=args.n, zeta=args.zeta,
                          rho=args.rho, assignment=args.assignment, include_psi_term=not args.no_psi_term,
                          psi_normalization=args.psi_normalization)
    # a stored node set replaces the size rule; the config echo stays as given
    nodes = read_nodeset(args.subsample_file, g.num_nodes) if args.subsample_file else None
    report = select_k(g, cfg, nodes)
    if args.save_subsample:
        write_nodeset(report.nodes, args.save_subsample)
    if args.report:
        with open(args.report, "w") as fh:
            fh.write(report.to_json(with_labels=args.labels))
    if args.format == "json":
        print(report.to_json(with_labels=args.labels))
    else:
        print(report.summary())
    return 0


def cmd_bench(args) -> int:
    path = args.spec if os.path.exists(args.spec) else bench.bundled_spec_path(args.spec)
    specs = bench.load_spec(path)
    rows = []
    log = logging.getLogger(__name__)
    for spec in specs:
        if args.replicates is not None:
            spec = replace(spec, T=args.replicates)
        if args.seed is not None:
            spec = replace(spec, seed=args.seed)
        rows += bench.run_experiment(spec, threads=args.threads,
                                     progress=lambda r: log.info("%s K0=%d N=%d zeta=%s prob=%.2f",
                                                                 r.generator, r.K0, r.N, r.zeta, r.prob))
    out = bench.rows_to_json(rows) if args.format == "json" else bench.rows_to_csv(rows)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(out if out.endswith("\n") else out + "\n")
    else:
        sys.stdout.write(out if out.endswith("\n") else out + "\n")
    return 0


def cmd_subsample_size(args) -> int:
    if args.zeta <= 0:
        raise UsageError("--zeta must be positive")
    if args.graph:
        g = load_edge_list(args.graph, args.indexing)
        N = g.num_nodes
        rho = args.rho if args.rho is not None else degree_stats(g).density_hat
    else:
        if args.n_nodes is None or args.rho is None:
            raise UsageError("give --graph, or both --n-nodes and --rho")
        N, rho = args.n_nodes, args.rho
    n = recommended_subsample_size(N, rho, args.zeta)
    _emit(args, {"n": n, "N": N, "rho": rho, "zeta": args.zeta}, str(n))
    return 0


COMMANDS = {"generate": cmd_generate, "select": cmd_select, "bench": cmd_bench, "subsample-size": cmd_subsample_size}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(message)s")
    try:
        with _limit_threads(args.threads) or contextlib.nullcontext():
            return COMMANDS[args.command](args)
    except (UsageError, bench.SpecError) as exc:
        print(f"smbic: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, GraphFormatError, IndexError) as exc:
        print(f"smbic: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (GeneratorRejection, np.linalg.LinAlgError, FloatingPointError, ArithmeticError) as exc:
        print(f"smbic: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (GeneratorError, ValueError) as exc:
        print(f"smbic: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
