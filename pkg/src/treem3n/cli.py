"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
Diagnostics go to standard error, results to standard output or ``--out``.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .baselines import TRAINERS
from .data_io import (Dataset, DatasetFormatError, ModelFormatError,
                      load_model, parse_dataset, read_graph, save_model,
                      synth_generate, write_dataset, write_graph)
from .evaluation import benchmark, cross_validate, evaluate, format_table
from .gadget import (bounded_degree_tree_exists, gadget_build,
                     gadget_check_tree, spanning_trees)
from .inference import LPError
from .model import predict_batch
from .training import ConvergenceWarning, TrainConfig

log = logging.getLogger("treem3n")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _positive_float(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return v


def _add_train_flags(p):
    d = TrainConfig()
    p.add_argument("--lambda", dest="lam", type=_positive_float, default=d.lam,
                   help="l2 regularization weight (default: %(default)s)")
    p.add_argument("--restarts", type=_positive_int, default=d.restarts,
                   help="CRANK random restarts (default: %(default)s)")
    p.add_argument("--beta0", type=_positive_float, default=None,
                   help="initial penalty weight (default: 0.01 * lambda * L)")
    p.add_argument("--beta-factor", type=float, default=d.beta_factor,
                   help="penalty escalation factor (default: %(default)s)")
    p.add_argument("--inner-tol", type=_positive_float, default=d.inner_tol,
                   help="relative gap for convex solves (default: %(default)s)")
    p.add_argument("--inner-max-epochs", type=_positive_int,
                   default=d.inner_max_epochs,
                   help="passes per convex solve (default: %(default)s)")
    p.add_argument("--cccp-max-iters", type=_positive_int,
                   default=d.cccp_max_iters,
                   help="CCCP iterations per penalty level (default: %(default)s)")
    p.add_argument("--support-eps", type=_positive_float, default=d.support_eps,
                   help="relative edge-support threshold (default: %(default)s)")


def _add_common(p):
    p.add_argument("--seed", type=int, default=0,
                   help="seed for all randomness (default: %(default)s)")
    p.add_argument("--threads", type=_positive_int, default=None,
                   help="worker processes (default: available CPUs)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="treem3n", description=(
        "Tree-structured max-margin multi-label learning."),
        allow_abbrev=False)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("synth", help="generate synthetic tree-model data",
                       allow_abbrev=False)
    p.add_argument("--labels", type=_positive_int, default=10)
    p.add_argument("--features", type=_positive_int, default=4)
    p.add_argument("--train", type=_positive_int, default=100)
    p.add_argument("--test", type=_positive_int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True,
                   help="directory for train.mll, test.mll, truth.json, truth.edges")

    p = sub.add_parser("train", help="train a model", allow_abbrev=False)
    p.add_argument("--method", choices=sorted(TRAINERS), required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True, help="model JSON path")
    _add_train_flags(p)
    _add_common(p)

    p = sub.add_parser("predict", help="predict labels", allow_abbrev=False)
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", default=None,
                   help="write predictions as a dataset file (default: stdout)")

    p = sub.add_parser("eval", help="Hamming, exact-match and F1 accuracy",
                       allow_abbrev=False)
    p.add_argument("--model", required=True, action="append",
                   help="model JSON path; repeat to compare several")
    p.add_argument("--data", required=True)
    p.add_argument("--json", action="store_true", help="emit JSON")

    p = sub.add_parser("cv", help="cross-validate lambda", allow_abbrev=False)
    p.add_argument("--method", choices=sorted(TRAINERS), required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--lambdas", default="0.0001,0.001,0.01,0.1,1",
                   help="comma-separated grid (default: %(default)s)")
    p.add_argument("--folds", type=_positive_int, default=5)
    p.add_argument("--out", default=None, help="JSON report path")
    _add_train_flags(p)
    _add_common(p)

    p = sub.add_parser("gadget", help="bounded-degree tree hardness gadget",
                       allow_abbrev=False)
    p.add_argument("--graph", required=True, help="edge list with #vertices=n")
    p.add_argument("--degree", type=_positive_int, required=True)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--check-all-trees", action="store_true",
                   help="search all spanning trees for one that separates")
    g.add_argument("--tree", help="edge list of one spanning tree to check")
    p.add_argument("--exhaustive", action="store_true",
                   help="maximize by enumeration instead of max-product")

    p = sub.add_parser("bench", help="time prediction", allow_abbrev=False)
    p.add_argument("--model", required=True, action="append",
                   help="model JSON path; repeat to compare several")
    p.add_argument("--data", required=True)
    p.add_argument("--repeats", type=_positive_int, default=3)
    p.add_argument("--json", action="store_true", help="emit JSON")
    for p in sub.choices.values():
        p.add_argument("--quiet", action="store_true",
                       help="do not log the resolved config and progress")
    return parser


def _config(args) -> TrainConfig:
    return TrainConfig(lam=args.lam, beta0=args.beta0,
                       beta_factor=args.beta_factor, restarts=args.restarts,
                       inner_tol=args.inner_tol,
                       inner_max_epochs=args.inner_max_epochs,
                       cccp_max_iters=args.cccp_max_iters,
                       support_eps=args.support_eps, seed=args.seed,
                       n_jobs=args.threads or os.cpu_count() or 1)


def _labeled(path) -> Dataset:
    data = parse_dataset(path)
    if len(data) == 0:
        raise DatasetFormatError(path, 1, 1, "no instances")
    return data


def cmd_synth(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    train, test, truth = synth_generate(args.labels, args.features, args.train,
                                        args.test, args.seed)
    write_dataset(train, out / "train.mll")
    write_dataset(test, out / "test.mll")
    save_model(truth, out / "truth.json")
    write_graph(truth.edges, out / "truth.edges")
    print(f"wrote {out}/train.mll ({len(train)}), {out}/test.mll ({len(test)}), "
          f"{out}/truth.json")


def cmd_train(args):
    cfg = _config(args)
    data = _labeled(args.data)
    log.info("config %s", json.dumps({"method": args.method, **cfg.to_dict()}))
    t0 = time.perf_counter()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ConvergenceWarning)
        model = TRAINERS[args.method](data, cfg.lam, cfg)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    log.info("trained in %.2fs", time.perf_counter() - t0)
    save_model(model, args.out)
    edges = "" if model.structure != "tree" else " edges=" + " ".join(
        f"{i}-{j}" for i, j in model.edges.sorted())
    print(f"{args.method}: structure={model.structure} "
          f"objective={model.metadata.get('objective', float('nan')):.6g}{edges}")


def cmd_predict(args):
    model = load_model(args.model)
    data = parse_dataset(args.data)
    if data.L != model.L or data.d != model.d:
        raise DatasetFormatError(args.data, 1, 1, "dimensions do not match the model")
    Y = predict_batch(model, data.X)
    if args.out:
        write_dataset(Dataset(data.L, data.d, data.X, Y), args.out)
    else:
        for row in Y:
            print(",".join(str(k) for k in np.flatnonzero(row)))


def cmd_eval(args):
    data = _labeled(args.data)
    if data.Y is None:
        raise DatasetFormatError(args.data, 1, 1, "data carry no labels")
    results = {}
    for path in args.model:
        model = load_model(path)
        if data.L != model.L or data.d != model.d:
            raise DatasetFormatError(args.data, 1, 1,
                                     f"dimensions do not match {path}")
        name = model.metadata.get("method", Path(path).stem)
        if name in results:
            name = Path(path).stem
        results[name] = evaluate(model, data)
    if args.json:
        print(json.dumps({k: v.to_dict() for k, v in results.items()}, indent=1))
    else:
        sys.stdout.write(format_table(results))


def cmd_cv(args):
    try:
        grid = [float(v) for v in args.lambdas.split(",") if v.strip()]
    except ValueError:
        raise UsageError("--lambdas must be comma-separated numbers") from None
    if not grid or any(not v > 0 for v in grid):
        raise UsageError("--lambdas must hold positive numbers")
    cfg = _config(args)
    data = _labeled(args.data)
    log.info("config %s", json.dumps({"method": args.method, "grid": grid,
                                      "folds": args.folds, **cfg.to_dict()}))
    best, table = cross_validate(data, args.method, grid, args.folds, cfg)
    report = {"method": args.method, "best_lambda": best, "table": table}
    if args.out:
        Path(args.out).write_text(json.dumps(report, indent=1) + "\n")
    for row in table:
        print(f"lambda={row['lambda']:<10g} zero_one={row['zero_one']:.4f} "
              f"hamming={row['hamming']:.4f} f1={row['f1']:.4f}")
    print(f"best lambda: {best:g}")


def cmd_gadget(args):
    G = read_graph(args.graph)
    g = gadget_build(G, args.degree)
    bdst = bounded_degree_tree_exists(G, args.degree)
    if args.tree:
        T = read_graph(args.tree)
        ok = gadget_check_tree(g, T, args.exhaustive)
        print(f"tree {'separates' if ok else 'does not separate'} the gadget "
              f"(max degree {int(T.degrees().max())}, D={args.degree})")
        return
    found = None
    n_trees = 0
    for T in spanning_trees(G):
        n_trees += 1
        if gadget_check_tree(g, T, args.exhaustive):
            found = T
            break
    print("separable" if found is not None else "not separable")
    if found is not None:
        print("tree: " + " ".join(f"{i}-{j}" for i, j in found.sorted()))
    print(f"bounded-degree spanning tree exists: {'yes' if bdst else 'no'}")
    print(f"agreement: {'yes' if (found is not None) == bdst else 'NO'}")
    log.info("checked %d spanning trees, %d training samples", n_trees,
             len(g.trainset))


def cmd_bench(args):
    data = parse_dataset(args.data)
    rows = []
    for path in args.model:
        model = load_model(path)
        if data.L != model.L or data.d != model.d:
            raise DatasetFormatError(args.data, 1, 1,
                                     f"dimensions do not match {path}")
        rep = benchmark(model, data, args.repeats)
        rep["model"] = path
        rows.append(rep)
    fastest = min(r["per_example_mean"] for r in rows)
    for r in rows:
        r["relative"] = r["per_example_mean"] / fastest
    if args.json:
        print(json.dumps(rows, indent=1))
        return
    for r in rows:
        print(f"{r['model']:<30} {r['structure']:<6} "
              f"{1e3 * r['per_example_mean']:10.4f} ms/example  "
              f"x{r['relative']:.2f}")


COMMANDS = {"synth": cmd_synth, "train": cmd_train, "predict": cmd_predict,
            "eval": cmd_eval, "cv": cmd_cv, "gadget": cmd_gadget,
            "bench": cmd_bench}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required")
    except UsageError as err:
        parser.print_usage(sys.stderr)
        print(err, file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(name)s: %(message)s", stream=sys.stderr)
    try:
        COMMANDS[args.command](args)
    except UsageError as err:
        print(f"treem3n: {err}", file=sys.stderr)
        return EXIT_USAGE
    except (DatasetFormatError, ModelFormatError, OSError) as err:
        print(f"treem3n: data error: {err}", file=sys.stderr)
        return EXIT_DATA
    except (LPError, ArithmeticError, np.linalg.LinAlgError) as err:
        print(f"treem3n: numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as err:
        print(f"treem3n: data error: {err}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


def main() -> int:
    return run(sys.argv[1:])
