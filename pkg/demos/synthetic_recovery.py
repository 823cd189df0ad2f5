"""Train every method on synthetic tree-model data and compare.

    python demos/synthetic_recovery.py [--seed 0] [--train 1000]

Prints the accuracy table on held-out data and, for each tree learner, how
many edges it shares with the generating tree.
"""
import argparse
import time

from treem3n.baselines import TRAINERS
from treem3n.data_io import synth_generate
from treem3n.evaluation import evaluate, format_table
from treem3n.training import TrainConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--labels", type=int, default=10)
    ap.add_argument("--train", type=int, default=1000)
    ap.add_argument("--lam", type=float, default=0.001)
    ap.add_argument("--methods", default="empty,mst,project,crank,full")
    args = ap.parse_args()

    train, test, truth = synth_generate(args.labels, 4, args.train, 1000, args.seed)
    print("generating tree:", " ".join(f"{i}-{j}" for i, j in truth.edges.sorted()))
    cfg = TrainConfig(lam=args.lam, restarts=3, seed=args.seed)
    results = {}
    for name in args.methods.split(","):
        t0 = time.perf_counter()
        model = TRAINERS[name](train, cfg=cfg)
        dt = time.perf_counter() - t0
        results[name] = evaluate(model, test)
        line = f"{name:<8} trained in {dt:6.1f}s"
        if model.structure == "tree":
            shared = len(set(model.edges) & set(truth.edges))
            line += f"  shares {shared}/{args.labels - 1} edges"
        print(line)
    results["truth"] = evaluate(truth, test)
    print()
    print(format_table(results), end="")


if __name__ == "__main__":
    main()
