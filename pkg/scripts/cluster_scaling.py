"""Runtime of the cluster heuristic as the fat-tree grows.

Places the reference services on k-ary fat-trees (16, 54, 128, ... hosts)
and fits a line to log(runtime) against log(hosts).

    python3 scripts/cluster_scaling.py --k 4 6 8 10
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from vnforch.cluster import ClusterParams, place_clustered
from vnforch.scenario_gen import reference_scenario


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--k", type=int, nargs="+", default=[4, 6, 8], help="fat-tree parameters (even)")
    ap.add_argument("--clusters", type=int, default=4)
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    hosts, secs = [], []
    print("k,hosts,vnfs,seconds")
    for k in args.k:
        sc = reference_scenario(args.seed, k=k)
        best = np.inf
        for _ in range(args.repeats):
            t0 = time.perf_counter()
            place_clustered(sc, ClusterParams(k=args.clusters))
            best = min(best, time.perf_counter() - t0)
        hosts.append(len(sc.host_graph.hosts))
        secs.append(best)
        print(f"{k},{hosts[-1]},{len(sc.vnffg.vnfs)},{best:.6f}")
    if len(hosts) > 1:
        slope = np.polyfit(np.log(hosts), np.log(secs), 1)[0]
        print(f"# log-log slope {slope:.2f}")


if __name__ == "__main__":
    main()
