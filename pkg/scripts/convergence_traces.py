"""Record best-fitness traces of PSO and APSO over matched seeds.

    python scripts/convergence_traces.py --seeds 20 --pz-mode product --out results/traces

Writes ``traces_<method>.csv`` with one column per seed and a summary of
final costs (median, best, worst) for each method.
"""
from __future__ import annotations

import argparse
import csv
import statistics
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from pzopf.network import ieee30
from pzopf.solvers import OpfProblem, PsoConfig, solve_pso


@dataclass
class TraceConfig:
    seeds: int = 20
    pz_mode: str = "product"
    swarm_size: int = 100
    max_iterations: int = 50
    out: str = "results/traces"


def run(cfg: TraceConfig):
    net = ieee30()
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    summary = []
    for tag in ("pso", "apso"):
        base = PsoConfig(swarm_size=cfg.swarm_size, max_iterations=cfg.max_iterations, adaptive=tag == "apso")
        results = [solve_pso(OpfProblem.from_mode(net, cfg.pz_mode), base.update(rng_seed=s))
                   for s in range(cfg.seeds)]
        traces = np.array([r.trace for r in results])
        with open(out / f"traces_{tag}.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iteration", *(f"seed{s}" for s in range(cfg.seeds))])
            for it, row in enumerate(traces.T):
                w.writerow([it, *(f"{v:.6f}" for v in row)])
        costs = [r.best_cost for r in results]
        summary.append((tag, statistics.median(costs), min(costs), max(costs)))
    for tag, med, lo, hi in summary:
        print(f"{tag:5s} median {med:.4f}  best {lo:.4f}  worst {hi:.4f}")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--seeds", type=int, default=TraceConfig.seeds)
    ap.add_argument("--pz-mode", default=TraceConfig.pz_mode, choices=("product", "off"))
    ap.add_argument("--out", default=TraceConfig.out)
    a = ap.parse_args(argv)
    run(TraceConfig(seeds=a.seeds, pz_mode=a.pz_mode, out=a.out))


if __name__ == "__main__":
    main()
