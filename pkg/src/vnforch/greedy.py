"""Minimum-distance and minimum-latency placement.

Both strategies sweep the service-graph edges from the heaviest traffic down.
For each edge they place whichever endpoints are still unplaced, choosing the
host (or host pair) that keeps the edge short:

* min-distance ranks candidates by path delay between the endpoint hosts,
  then hop count, so chatty VNFs get packed close together;
* min-latency ranks them by how much the placement adds to the expected
  service delay (processing plus propagation, summed over services).

Every candidate must fit the residual host capacity and residual virtual-link
bandwidth, and must keep each service's partial delay and cost within budget.
VNFs that no edge touches are placed last on the least-loaded fitting host,
largest first, backtracking if a later one would not fit.
"""

from __future__ import annotations

import numpy as np

from .errors import InfeasiblePlacement, NoFeasibleAssignment
from .evaluator import PlacementResult, is_feasible, summarize
from .model import Scenario
from .partial import PartialPlacement, backtrack, feasible_in_order
from .paths import PathTable, build_path_table


def sweep_edges(sc: Scenario) -> list[tuple[int, int]]:
    """Service-graph edges (traffic or a visit transition), heaviest first."""
    ix = sc.index
    W = (ix.visits[:, :, None] * ix.transition).sum(axis=0)
    src, dst = np.nonzero((ix.traffic > 0) | (W > 0))
    edges = [(int(a), int(b)) for a, b in zip(src, dst) if a != b]
    return sorted(edges, key=lambda e: (-ix.traffic[e], ix.vnf_ids[e[0]], ix.vnf_ids[e[1]]))


def _distance_score(sw: PartialPlacement, table: PathTable):
    hid = sw.ix.host_ids

    def score(new: dict[int, int], edge: tuple[int, int], inc) -> tuple:
        a, b = edge
        ha = new.get(a, sw.x.get(a))
        hb = new.get(b, sw.x.get(b))
        e = table[(hid[ha], hid[hb])]
        return (e.delay, e.hops)

    return score


def _latency_score(sw: PartialPlacement, table: PathTable):
    hid = sw.ix.host_ids

    def score(new: dict[int, int], edge: tuple[int, int], inc) -> tuple:
        a, b = edge
        ha = new.get(a, sw.x.get(a))
        hb = new.get(b, sw.x.get(b))
        e = table[(hid[ha], hid[hb])]
        return (float(inc[2].sum()), e.delay, e.hops)

    return score


def _place_isolated(pp: PartialPlacement, todo: list[int], budget: int = 1_000) -> None:
    """Place VNFs no edge touches, largest demand first, each on the least
    loaded fitting host, backtracking when a later VNF no longer fits."""
    ix = pp.ix
    todo = sorted(todo, key=lambda v: (-float(ix.demand[v].sum()), ix.vnf_ids[v]))

    def candidates(pp: PartialPlacement, v: int):
        hosts = np.flatnonzero(pp.fits_capacity(v))
        util = np.array([pp.host_util_after(v, h) for h in hosts])
        return feasible_in_order(pp, v, hosts[np.lexsort((hosts, util))])

    if not backtrack(pp, todo, candidates, budget):
        raise NoFeasibleAssignment(f"no feasible host for isolated VNFs {[ix.vnf_ids[v] for v in todo]}")


def _run(sc: Scenario, make_score, name: str) -> PlacementResult:
    sw = PartialPlacement(sc)
    table = build_path_table(sc.host_graph)
    score = make_score(sw, table)
    hosts = range(sw.H)
    for a, b in sweep_edges(sc):
        free = [v for v in (a, b) if v not in sw.x]
        if not free:
            continue
        best_key, best = None, None
        if len(free) == 1:
            options = ({free[0]: h} for h in hosts)
        else:
            options = ({a: h1, b: h2} for h1 in hosts for h2 in hosts)
        for new in options:
            inc = sw.increments(new)
            if inc is None:
                continue
            key = score(new, (a, b), inc) + tuple(new[v] for v in free)
            if best_key is None or key < best_key:
                best_key, best = key, (new, inc)
        if best is None:
            ids = [sc.index.vnf_ids[v] for v in free]
            raise NoFeasibleAssignment(f"no feasible host for {ids} on edge {sc.index.vnf_ids[a]}->{sc.index.vnf_ids[b]}")
        sw.commit(*best)
    _place_isolated(sw, [v for v in range(len(sc.index.vnf_ids)) if v not in sw.x])
    p = sw.placement()
    report = is_feasible(p, sc)
    if not report.ok:
        raise InfeasiblePlacement(report, p)
    return summarize(p, sc, name)


def place_min_distance(sc: Scenario) -> PlacementResult:
    return _run(sc, _distance_score, "min-distance")


def place_min_latency(sc: Scenario) -> PlacementResult:
    return _run(sc, _latency_score, "min-latency")
