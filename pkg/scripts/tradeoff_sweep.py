"""Cost/delay trade-off of the cluster heuristic against the GA benchmarks.

Builds the fat-tree reference scenario for each seed, sweeps the cluster
count and runs GA(cost) and GA(delay), writing one CSV with a seed column.

    python3 scripts/tradeoff_sweep.py --seeds 0 1 2 --output tradeoff.csv
"""

from __future__ import annotations

import argparse
import csv
import sys
import time

from vnforch.cluster import ClusterParams, place_clustered
from vnforch.errors import PlacementError
from vnforch.ga import GaConfig, evolve
from vnforch.scenario_gen import reference_scenario


def sweep(seed: int, k_max: int, generations: int):
    sc = reference_scenario(seed)
    jobs = [("cluster", str(k), lambda k=k: place_clustered(sc, ClusterParams(k=k))) for k in range(1, k_max + 1)]
    jobs += [
        ("ga", obj, lambda obj=obj: evolve(sc, GaConfig(objective=obj, generations=generations, rng_seed=seed)).result)
        for obj in ("cost", "delay")
    ]
    for label, param, solve in jobs:
        t0 = time.perf_counter()
        try:
            r = solve()
        except PlacementError:
            r = None
        ms = (time.perf_counter() - t0) * 1e3
        yield {
            "seed": seed,
            "label": label,
            "param": param,
            "total_cost": f"{r.total_cost:.6f}" if r else "",
            "total_delay": f"{r.total_delay:.6f}" if r else "",
            "runtime_ms": f"{ms:.3f}",
            "feasible": "true" if r else "false",
        }


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--seeds", type=int, nargs="+", default=[0])
    ap.add_argument("--k-max", type=int, default=7)
    ap.add_argument("--generations", type=int, default=200)
    ap.add_argument("--output", default=None, help="CSV path (default stdout)")
    args = ap.parse_args()
    out = open(args.output, "w", newline="") if args.output else sys.stdout
    w = csv.DictWriter(out, ["seed", "label", "param", "total_cost", "total_delay", "runtime_ms", "feasible"], lineterminator="\n")
    w.writeheader()
    for seed in args.seeds:
        rows = list(sweep(seed, args.k_max, args.generations))
        w.writerows(rows)
        cl = [r for r in rows if r["label"] == "cluster" and r["feasible"] == "true"]
        points = {(r["total_cost"], r["total_delay"]) for r in cl}
        print(f"seed {seed}: {len(points)} distinct cluster points", file=sys.stderr)
    if out is not sys.stdout:
        out.close()


if __name__ == "__main__":
    main()
