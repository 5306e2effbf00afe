"""Command-line entry point (``hmvc``).

Every option can also come from a ``--config`` file of ``key = value``
lines; keys are the long option names (``filter-order = 2``), and flags
given on the command line win. List-valued sweep options take comma
separated values (``alpha = 1,100``).
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .clustering import evaluate
from .dataset import read_edge_list, read_labels, read_matrix
from .errors import ConfigError, HMVCError
from .harness import (
    DatasetSpec,
    RunConfig,
    change_rate_table,
    edge_quality,
    read_config_file,
    report_row,
    rows_to_csv,
    run,
    two_moons_demo,
)
from .highorder import parse_order
from .learner import HmvcConfig

STOCHASTIC = ("fit", "fit-anchor", "sweep", "two-moons-demo")


def _floats(text: str) -> tuple:
    return tuple(float(t) for t in str(text).split(",") if t.strip())


def _ints(text: str) -> tuple:
    return tuple(int(t) for t in str(text).split(",") if t.strip())


def _orders(text: str) -> tuple:
    return tuple(parse_order(t.strip()) for t in str(text).split(",") if t.strip())


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    return str(text).strip().lower() in ("1", "true", "yes", "on")


def _add_data_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("data")
    g.add_argument("--features", nargs="+", default=None,
                   help="feature matrix per view (.csv or .npy)")
    g.add_argument("--graphs", nargs="+", default=None, help="edge-list file per graph")
    g.add_argument("--labels", default=None, help="ground-truth labels, one per line")
    g.add_argument("--format", dest="fmt", default="auto", choices=("auto", "csv", "npy"))
    g.add_argument("--header", type=_bool, nargs="?", const=True, default=False,
                   help="CSV files have a header row")
    g.add_argument("--n-clusters", type=int, default=None)
    g.add_argument("--synthetic", choices=("blobs", "graph", "moons"), default=None,
                   help="use a generated dataset instead of files")
    g.add_argument("--n-samples", type=int, default=150)
    g.add_argument("--noise-dims", type=int, default=0)
    g.add_argument("--data-seed", type=int, default=None,
                   help="generator seed (defaults to --seed)")
    g.add_argument("--name", default=None)


def _add_learner_args(p: argparse.ArgumentParser, sweep: bool) -> None:
    g = p.add_argument_group("learner")
    num = _floats if sweep else float
    g.add_argument("--alpha", type=num, default=None)
    g.add_argument("--beta", type=num, default=None)
    g.add_argument("--mu", type=num, default=None)
    g.add_argument("--filter-order", type=_ints if sweep else int, default=None)
    g.add_argument("--order", type=_orders if sweep else parse_order, default=None,
                   help="similarity order n, or 'inf'")
    g.add_argument("--sim-normalization", default="sym", choices=("sym", "rw", "symmetric",
                                                                  "row_stochastic"))
    g.add_argument("--max-iters", type=int, default=50)
    g.add_argument("--tol", type=float, default=1e-6)
    g.add_argument("--clusterer", default="spectral", choices=("spectral", "kmeans"))
    g.add_argument("--seed", type=int, default=None, help="required for stochastic steps")
    g.add_argument("--out", default=None, help="output directory")


def _add_anchor_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("anchors")
    g.add_argument("--anchors", dest="m", type=int, default=100, help="number of anchors m")
    g.add_argument("--eta", type=float, default=2.0)
    g.add_argument("--knn-k", type=int, default=10,
                   help="K of the degree graph for feature-only data")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hmvc", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    for name, helptext in (("fit", "learn the consensus graph and cluster"),
                           ("fit-anchor", "anchor-graph variant for large N"),
                           ("sweep", "grid over alpha/beta/mu/k/n")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", default=None, help="key = value configuration file")
        _add_data_args(p)
        _add_learner_args(p, sweep=name == "sweep")
        if name != "fit":
            _add_anchor_args(p)
        if name == "sweep":
            p.add_argument("--method", default="hmvc", choices=("hmvc", "ahmvc"))
            p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("two-moons-demo", help="edge quality of KNN graphs across orders")
    p.add_argument("--config", default=None)
    p.add_argument("--n-points", type=int, default=200)
    p.add_argument("--noise", type=float, default=0.05)
    p.add_argument("--k", dest="K", type=int, default=5)
    p.add_argument("--orders", type=_orders, default=(1, 2, 3, math.inf))
    p.add_argument("--rule", default="mutual", choices=("mutual", "union"))
    p.add_argument("--seeds", type=int, default=1, help="number of seeds from --seed on")
    p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("edge-quality", help="NwE and AccE of a graph against labels")
    p.add_argument("--config", default=None)
    p.add_argument("graph", help="edge list (.txt/.npz) or dense matrix (.csv/.npy)")
    p.add_argument("labels")
    p.add_argument("--dense", type=_bool, nargs="?", const=True, default=None,
                   help="treat the graph file as a dense matrix (default: by extension)")
    p.add_argument("--top-k", type=int, default=5)
    p.add_argument("--threshold", type=float, default=None)

    p = sub.add_parser("metrics", help="ACC/NMI/ARI/F1/PUR of a prediction")
    p.add_argument("--config", default=None)
    p.add_argument("pred")
    p.add_argument("truth")

    p = sub.add_parser("change-rate", help="relative change between similarity orders")
    p.add_argument("--config", default=None)
    p.add_argument("features")
    p.add_argument("--n-max", type=int, default=6)
    p.add_argument("--format", dest="fmt", default="auto", choices=("auto", "csv", "npy"))
    p.add_argument("--header", type=_bool, nargs="?", const=True, default=False)
    p.add_argument("--sim-normalization", default="sym",
                   choices=("sym", "rw", "symmetric", "row_stochastic"))
    return parser


def _apply_config_file(parser: argparse.ArgumentParser, argv) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if getattr(args, "config", None) is None:
        return args
    values = read_config_file(args.config)
    sub = parser._subparsers._group_actions[0].choices[args.command]  # noqa: SLF001
    actions = {}
    for act in sub._actions:  # noqa: SLF001
        for opt in act.option_strings:
            if opt.startswith("--"):
                actions[opt[2:].replace("-", "_")] = act
    defaults = {}
    for key, raw in values.items():
        act = actions.get(key)
        if act is None or key == "config":
            raise ConfigError(f"unknown configuration key {key!r} for '{args.command}'")
        if act.nargs in ("+", "*"):
            val = [act.type(t) if act.type else t for t in raw.split()]
        else:
            val = act.type(raw) if act.type else raw
        defaults[act.dest] = val
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def _dataset_spec(args) -> DatasetSpec:
    if args.synthetic:
        return DatasetSpec(source=args.synthetic, n_clusters=args.n_clusters,
                           n_samples=args.n_samples, noise_dims=args.noise_dims,
                           data_seed=args.seed if args.data_seed is None else args.data_seed,
                           name=args.name)
    if not args.features:
        raise ConfigError("give --features (and optionally --graphs) or --synthetic")
    return DatasetSpec(source="files", features=tuple(args.features),
                       graphs=tuple(args.graphs or ()), labels=args.labels, fmt=args.fmt,
                       header=args.header, n_clusters=args.n_clusters, name=args.name)


def _run_config(args) -> RunConfig:
    sweep = args.command == "sweep"

    def first(v, default):
        if v is None:
            return default
        return v[0] if sweep else v

    base = HmvcConfig(
        alpha=first(args.alpha, 1.0), beta=first(args.beta, 1.0), mu=first(args.mu, 1.0),
        filter_order=first(args.filter_order, 2), similarity_order=first(args.order, None),
        sim_normalization=args.sim_normalization, max_iters=args.max_iters,
        rel_tol=args.tol, seed=args.seed, clusterer=args.clusterer,
    )
    method = args.method if sweep else ("ahmvc" if args.command == "fit-anchor" else "hmvc")
    extra = {}
    if args.command != "fit":
        extra = {"m": args.m, "eta": args.eta, "knn_k": args.knn_k}
    if sweep:
        extra.update(alphas=args.alpha or (), betas=args.beta or (), mus=args.mu or (),
                     filter_orders=args.filter_order or (), orders=args.order or (),
                     jobs=args.jobs)
    return RunConfig(dataset=_dataset_spec(args), method=method, base=base,
                     out_dir=args.out, **extra)


def _cmd_run(args) -> int:
    cfg = _run_config(args)
    results = run(cfg)
    name = cfg.dataset.label
    rows = [report_row(r, cfg, name) for r in results]
    sys.stdout.write(rows_to_csv(rows))
    return 0 if all(r.ok for r in results) else 1


def _cmd_moons(args) -> int:
    rows = []
    for s in range(args.seed, args.seed + args.seeds):
        rows.extend(two_moons_demo(args.n_points, args.noise, s, args.K, args.orders, args.rule))
    sys.stdout.write(rows_to_csv(rows, ["seed", "order", "nwe", "acce"]))
    return 0


def _cmd_edge_quality(args) -> int:
    y = read_labels(args.labels)
    path = Path(args.graph)
    dense = args.dense if args.dense is not None else path.suffix.lower() in (".csv", ".npy")
    graph = read_matrix(path) if dense else read_edge_list(path, len(y))
    nwe, acce = edge_quality(graph, y, args.top_k, args.threshold)
    print(json.dumps({"nwe": nwe, "acce": acce}))
    return 0


def _cmd_metrics(args) -> int:
    pred = np.loadtxt(args.pred, dtype=np.int64, ndmin=1)
    truth = np.loadtxt(args.truth, dtype=np.int64, ndmin=1)
    print(json.dumps(evaluate(pred, truth).metrics()))
    return 0


def _cmd_change_rate(args) -> int:
    X = read_matrix(args.features, args.fmt, args.header)
    rows = change_rate_table(X, args.n_max, args.sim_normalization)
    sys.stdout.write(rows_to_csv(rows, ["order", "rate", "skipped"]))
    return 0


COMMANDS = {"fit": _cmd_run, "fit-anchor": _cmd_run, "sweep": _cmd_run,
            "two-moons-demo": _cmd_moons, "edge-quality": _cmd_edge_quality,
            "metrics": _cmd_metrics, "change-rate": _cmd_change_rate}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = _apply_config_file(parser, argv)
    except (ConfigError, ValueError) as exc:
        parser.error(str(exc))
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command in STOCHASTIC and args.seed is None:
        parser.error(f"'{args.command}' needs --seed")
    try:
        return COMMANDS[args.command](args)
    except (HMVCError, OSError, ValueError) as exc:
        print(f"hmvc: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
