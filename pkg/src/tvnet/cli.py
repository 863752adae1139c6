"""Command-line surface: estimate, grid-search, simulate, evaluate.

Usage errors exit with code 2; package errors print a machine-readable
category to stderr and exit with code 1. Every output directory receives a
manifest sufficient to reproduce the command.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .errors import TvnetError
from .graphs import assemble_graphs, constant_paths, evaluate as evaluate_graphs
from .io import (
    IngestionConfig,
    RunManifest,
    align_sequences,
    emit_results,
    ingest,
    input_digest,
    read_edges,
    write_dataset_csv,
    write_edges,
)
from .parallel import parallel_map, resolve_threads
from .selection import GridSpec, bandwidth_median_heuristic, grid_search
from .smooth import KernelSpec, SmoothConfig, estimate_node_smooth_path, estimate_node_static
from .synthetic import (
    ScenarioSpec,
    check_protocol_invariants,
    generate_anchors,
    generate_dataset,
    interpolate_parameters,
    true_graphs,
)
from .tv import TVConfig, estimate_node_tv

# Reference tuning from the 109th-Congress Senate voting analysis; used as
# documented defaults when no explicit values are given.
SENATE_SMOOTH_LAMBDA1 = 0.195
SENATE_SMOOTH_BANDWIDTH = 0.174
SENATE_TV_LAMBDA1 = 0.24
SENATE_TV_LAMBDA_TV = 0.28


def _add_ingestion_args(sp):
    sp.add_argument("--input", required=True, help="observation file (rows = observations)")
    sp.add_argument("--format", choices=("csv", "tsv"), default="csv")
    sp.add_argument("--has-header", action="store_true")
    sp.add_argument("--time-column", default=None, help="header name of the time column")
    sp.add_argument("--value-map", choices=("native", "zero_one"), default="native",
                    help="'native' expects +/-1 values, 'zero_one' maps 0->-1 and 1->+1")
    sp.add_argument("--missing-token", action="append", default=None,
                    help="token treated as missing (repeatable; default: 'NA' and empty)")
    sp.add_argument("--missing-policy", choices=("fill_minus_one", "drop_row", "error"),
                    default="fill_minus_one")


def _ingest_from_args(args):
    tokens = tuple(args.missing_token) if args.missing_token else ("NA", "")
    cfg = IngestionConfig(
        path=args.input,
        fmt=args.format,
        has_header=args.has_header,
        time_column=args.time_column,
        value_map=args.value_map,
        missing_tokens=tokens,
        missing_policy=args.missing_policy,
    )
    return ingest(cfg)


def _parse_grid(text: str, flag: str, parser) -> np.ndarray:
    try:
        values = np.asarray([float(v) for v in text.split(",") if v.strip() != ""])
    except ValueError:
        parser.error(f"{flag} expects a comma-separated list of numbers")
    if values.size == 0:
        parser.error(f"{flag} must list at least one value")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tvnet",
        description="Estimate time-varying network structure of binary pairwise Markov random fields.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    est = sub.add_parser("estimate", help="fit one method at fixed tuning values")
    _add_ingestion_args(est)
    est.add_argument("--method", choices=("smooth", "tv", "static"), required=True)
    est.add_argument("--lambda1", type=float, default=None,
                     help=f"l1 penalty (default {SENATE_SMOOTH_LAMBDA1} for smooth/static, "
                          f"{SENATE_TV_LAMBDA1} for tv; Senate-analysis selections)")
    est.add_argument("--bandwidth", type=float, default=None,
                     help="kernel bandwidth for --method smooth; defaults to the median "
                          f"heuristic of the time grid (Senate selection was {SENATE_SMOOTH_BANDWIDTH})")
    est.add_argument("--lambda-tv", type=float, default=None,
                     help=f"total-variation penalty for --method tv (default {SENATE_TV_LAMBDA_TV}, "
                          "the Senate-analysis selection)")
    est.add_argument("--kernel", choices=("epanechnikov", "boxcar"), default="epanechnikov")
    est.add_argument("--symmetrize", choices=("min", "max"), default="max")
    est.add_argument("--zero-eps", type=float, default=1e-8)
    est.add_argument("--threads", type=int, default=None)
    est.add_argument("--seed", type=int, default=0)
    est.add_argument("--output-dir", required=True)
    est.set_defaults(func=_cmd_estimate)

    gs = sub.add_parser("grid-search", help="tune by maximizing the averaged BIC over a grid")
    _add_ingestion_args(gs)
    gs.add_argument("--method", choices=("smooth", "tv", "static"), required=True)
    gs.add_argument("--lambda1-grid", default=None,
                    help="comma-separated values (default: 100 log-spaced points on [0.01, 0.3])")
    gs.add_argument("--bandwidth-grid", default=None,
                    help="comma-separated values (default: 0.05, 0.10, ..., 0.50)")
    gs.add_argument("--lambda-tv-grid", default=None,
                    help="comma-separated values (default: 10 log-spaced points on [0.05, 0.3])")
    gs.add_argument("--kernel", choices=("epanechnikov", "boxcar"), default="epanechnikov")
    gs.add_argument("--symmetrize", choices=("min", "max"), default="max")
    gs.add_argument("--zero-eps", type=float, default=1e-8)
    gs.add_argument("--threads", type=int, default=None)
    gs.add_argument("--seed", type=int, default=0)
    gs.add_argument("--output-dir", required=True)
    gs.set_defaults(func=_cmd_grid_search)

    sim = sub.add_parser("simulate", help="generate a synthetic benchmark dataset")
    sim.add_argument("--p", type=int, default=20)
    sim.add_argument("--n", type=int, default=500)
    sim.add_argument("--k", type=int, default=1, help="replicates per time point")
    sim.add_argument("--scheme", choices=("smooth", "piecewise"), default="smooth")
    sim.add_argument("--s-max", type=int, default=4)
    sim.add_argument("--anchors", type=int, default=6)
    sim.add_argument("--edges", type=int, default=15, help="edges per anchor graph")
    sim.add_argument("--churn", type=int, default=10, help="edges removed and added per rewiring")
    sim.add_argument("--burn-in", type=int, default=1000)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--output-dir", required=True)
    sim.set_defaults(func=_cmd_simulate)

    ev = sub.add_parser("evaluate", help="compare two edge files (truth, estimate)")
    ev.add_argument("truth", help="edge file with the reference graphs")
    ev.add_argument("estimate", help="edge file with the estimated graphs")
    ev.add_argument("--output-dir", default=None)
    ev.set_defaults(func=_cmd_evaluate)

    return parser


def _cmd_estimate(args, parser) -> int:
    if args.method != "smooth" and args.bandwidth is not None:
        parser.error("--bandwidth is only valid with --method smooth")
    if args.method != "tv" and args.lambda_tv is not None:
        parser.error("--lambda-tv is only valid with --method tv")
    data = _ingest_from_args(args)
    threads = resolve_threads(args.threads)
    lambda1 = args.lambda1
    params = {"method": args.method}

    if args.method == "smooth":
        lambda1 = SENATE_SMOOTH_LAMBDA1 if lambda1 is None else lambda1
        bandwidth = args.bandwidth
        if bandwidth is None:
            bandwidth = bandwidth_median_heuristic(data.times)
            params["bandwidth_from_median_heuristic"] = True
        cfg = SmoothConfig(lambda1=lambda1, kernel=KernelSpec(args.kernel, bandwidth))
        node_paths = parallel_map(
            lambda u: estimate_node_smooth_path(u, data, cfg), range(data.p), threads=threads
        )
        params.update({"lambda1": lambda1, "bandwidth": bandwidth, "kernel": args.kernel})
    elif args.method == "tv":
        lambda1 = SENATE_TV_LAMBDA1 if lambda1 is None else lambda1
        lambda_tv = SENATE_TV_LAMBDA_TV if args.lambda_tv is None else args.lambda_tv
        cfg = TVConfig(lambda1=lambda1, lambda_tv=lambda_tv)
        node_paths = parallel_map(
            lambda u: estimate_node_tv(u, data, cfg), range(data.p), threads=threads
        )
        params.update({"lambda1": lambda1, "lambda_tv": lambda_tv})
    else:
        lambda1 = SENATE_SMOOTH_LAMBDA1 if lambda1 is None else lambda1
        fits = parallel_map(
            lambda u: estimate_node_static(u, data, lambda1), range(data.p), threads=threads
        )
        node_paths = constant_paths(fits, data.n_times)
        params.update({"lambda1": lambda1})

    graphs = assemble_graphs(node_paths, data.times, mode=args.symmetrize, zero_eps=args.zero_eps)
    params["symmetrize"] = args.symmetrize
    manifest = RunManifest(
        command="estimate",
        params=params,
        seed=args.seed,
        threads=threads,
        input_digest=input_digest(args.input),
        argv=args.argv,
    )
    emit_results(args.output_dir, manifest, node_paths=node_paths, times=data.times, graphs=graphs)
    return 0


def _cmd_grid_search(args, parser) -> int:
    if args.method != "smooth" and args.bandwidth_grid is not None:
        parser.error("--bandwidth-grid is only valid with --method smooth")
    if args.method != "tv" and args.lambda_tv_grid is not None:
        parser.error("--lambda-tv-grid is only valid with --method tv")
    data = _ingest_from_args(args)
    threads = resolve_threads(args.threads)
    grid_kwargs = {}
    if args.lambda1_grid is not None:
        grid_kwargs["lambda1_grid"] = _parse_grid(args.lambda1_grid, "--lambda1-grid", parser)
    if args.bandwidth_grid is not None:
        grid_kwargs["h_grid"] = _parse_grid(args.bandwidth_grid, "--bandwidth-grid", parser)
    if args.lambda_tv_grid is not None:
        grid_kwargs["lambda_tv_grid"] = _parse_grid(args.lambda_tv_grid, "--lambda-tv-grid", parser)
    grid = GridSpec(**grid_kwargs)
    report = grid_search(args.method, data, grid, kernel_kind=args.kernel, threads=threads)
    graphs = assemble_graphs(report.selected_paths, data.times, mode=args.symmetrize, zero_eps=args.zero_eps)
    manifest = RunManifest(
        command="grid-search",
        params={
            "method": args.method,
            "selected": report.selected.params,
            "symmetrize": args.symmetrize,
            "cells": len(report.cells),
        },
        seed=args.seed,
        threads=threads,
        input_digest=input_digest(args.input),
        argv=args.argv,
    )
    emit_results(
        args.output_dir,
        manifest,
        node_paths=report.selected_paths,
        times=data.times,
        graphs=graphs,
        bic_report=report,
    )
    return 0


def _cmd_simulate(args, parser) -> int:
    spec = ScenarioSpec(
        p=args.p,
        s_max=args.s_max,
        n=args.n,
        anchors=args.anchors,
        edges_per_anchor=args.edges,
        churn=args.churn,
        replicates=args.k,
        scheme=args.scheme,
        seed=args.seed,
    )
    anchors = generate_anchors(spec, seed=np.random.SeedSequence([spec.seed, 0]))
    thetas = interpolate_parameters(anchors, spec)
    check_protocol_invariants(anchors, thetas, spec)
    data = generate_dataset(
        thetas, spec.replicates, np.random.SeedSequence([spec.seed, 1]), burn_in=args.burn_in
    )
    truth = true_graphs(thetas, data.times)
    manifest = RunManifest(
        command="simulate",
        params={
            "p": spec.p, "n": spec.n, "k": spec.replicates, "scheme": spec.scheme,
            "s_max": spec.s_max, "anchors": spec.anchors, "edges_per_anchor": spec.edges_per_anchor,
            "churn": spec.churn, "burn_in": args.burn_in,
        },
        seed=spec.seed,
        argv=args.argv,
    )
    written = emit_results(args.output_dir, manifest)
    out_dir = written["manifest"].parent
    write_dataset_csv(out_dir / "data.csv", data)
    write_edges(out_dir / "truth_edges.jsonl", truth)
    return 0


def _cmd_evaluate(args, parser) -> int:
    truth = read_edges(args.truth)
    estimated = read_edges(args.estimate)
    estimated, truth = align_sequences(estimated, truth)
    metrics = evaluate_graphs(estimated, truth)
    print(f"precision\t{metrics.precision:.6f}")
    print(f"recall\t{metrics.recall:.6f}")
    print(f"f1\t{metrics.f1:.6f}")
    if args.output_dir is not None:
        manifest = RunManifest(
            command="evaluate",
            params={"truth": args.truth, "estimate": args.estimate},
            input_digest=input_digest(args.truth),
            argv=args.argv,
        )
        emit_results(args.output_dir, manifest, metrics=metrics)
    return 0


def cli_main(argv=None) -> int:
    parser = build_parser()
    effective_argv = list(sys.argv[1:]) if argv is None else list(argv)
    try:
        args = parser.parse_args(effective_argv)
        args.argv = effective_argv
        return args.func(args, parser)
    except SystemExit as exc:
        code = exc.code
        return int(code) if code is not None else 0
    except TvnetError as exc:
        print(f"error[{exc.category}]: {exc}", file=sys.stderr)
        return 1


def main():
    sys.exit(cli_main(sys.argv[1:]))


if __name__ == "__main__":
    main()
