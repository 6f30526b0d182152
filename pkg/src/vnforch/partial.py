"""Incremental constraint tracking for partial placements.

A :class:`PartialPlacement` keeps host loads, per-link flows and the delay and
cost each service has accumulated so far.  All four quantities only grow as
VNFs are added, so a partial placement that breaks a limit cannot be completed
into a feasible one; the heuristics use this to prune.
"""

from __future__ import annotations

from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

from .evaluator import EPS
from .model import Placement, Scenario

def _ratio(load: np.ndarray, cap: np.ndarray) -> np.ndarray:
    """load / cap with x/0 = inf for x > 0 and 0/0 = 0."""
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(cap > 0, load / cap, np.where(load > 0, np.inf, 0.0))


Increment = tuple[dict[int, np.ndarray], dict[tuple[int, int], float], np.ndarray, np.ndarray]


def _limit(x: np.ndarray) -> np.ndarray:
    return x + EPS * np.maximum(1.0, np.abs(x))


class PartialPlacement:
    def __init__(self, sc: Scenario):
        ix = sc.index
        self.sc = sc
        self.ix = ix
        self.H = len(ix.host_ids)
        self.x: dict[int, int] = {}
        self.load = np.zeros_like(ix.capacity)
        self.flow = np.zeros_like(ix.bandwidth)
        self.W = ix.visits[:, :, None] * ix.transition  # S x V x V expected traversals
        self.delay_used = np.zeros(len(ix.service_ids))
        self.cost_used = np.zeros(len(ix.service_ids))
        self.cap_lim = _limit(ix.capacity)
        self.bw_lim = np.where(np.isinf(ix.bandwidth), np.inf, _limit(ix.bandwidth))
        self.delay_lim = _limit(ix.max_delay)
        self.cost_lim = _limit(ix.max_cost)
        related = (ix.traffic > 0) | (self.W.sum(axis=0) > 0)
        related |= related.T
        np.fill_diagonal(related, False)
        self.neighbors = [np.flatnonzero(related[v]) for v in range(len(ix.vnf_ids))]

    def increments(self, new: dict[int, int]) -> Increment | None:
        """Load, flow, delay and cost added by placing ``new`` on top of the
        current partial assignment; None if any limit would be exceeded."""
        ix = self.ix
        load: dict[int, np.ndarray] = {}
        for v, h in new.items():
            load[h] = load.get(h, 0.0) + ix.demand[v]
        for h, add in load.items():
            if np.any(self.load[h] + add > self.cap_lim[h]):
                return None
        flow: dict[tuple[int, int], float] = {}
        dly = np.zeros(len(self.delay_used))
        cost = np.zeros(len(self.cost_used))
        for v, h in new.items():
            dly += ix.visits[:, v] * ix.proc_delay[v]
            n = ix.visits[:, v]
            c = ix.cost[h, v]
            cost += n * c if np.isfinite(c) else np.where(n > 0, np.inf, 0.0)
            for u in self.neighbors[v]:
                u = int(u)
                if u in new:
                    hu = new[u]
                    pairs = [(v, h, u, hu)]  # the (u, v) direction is added when u is visited
                elif u in self.x:
                    hu = self.x[u]
                    pairs = [(v, h, u, hu), (u, hu, v, h)]
                else:
                    continue
                for a, ha, b, hb in pairs:
                    f = ix.traffic[a, b]
                    if f and ha != hb:
                        flow[(ha, hb)] = flow.get((ha, hb), 0.0) + f
                    w = self.W[:, a, b]
                    if ha != hb and np.any(w):
                        dly += w * ix.delay[ha, hb]
        for (a, b), f in flow.items():
            if self.flow[a, b] + f > self.bw_lim[a, b]:
                return None
        if np.any(self.delay_used + dly > self.delay_lim) or np.any(self.cost_used + cost > self.cost_lim):
            return None
        return load, flow, dly, cost

    def commit(self, new: dict[int, int], inc: Increment) -> None:
        load, flow, dly, cost = inc
        for h, add in load.items():
            self.load[h] += add
        for (a, b), f in flow.items():
            self.flow[a, b] += f
        self.delay_used += dly
        self.cost_used += cost
        self.x.update(new)

    def undo(self, new: dict[int, int], inc: Increment) -> None:
        load, flow, dly, cost = inc
        for h, add in load.items():
            self.load[h] -= add
        for (a, b), f in flow.items():
            self.flow[a, b] -= f
        self.delay_used -= dly
        self.cost_used -= cost
        for v in new:
            del self.x[v]

    def host_util_after(self, v: int, h: int) -> float:
        """Utilization of ``h`` alone once ``v`` joins it."""
        return float(_ratio(self.load[h] + self.ix.demand[v], self.ix.capacity[h]).max(initial=0.0))

    def fits_capacity(self, v: int) -> np.ndarray:
        """Hosts with room for ``v`` (links and budgets not checked)."""
        return np.all(self.load + self.ix.demand[v] <= self.cap_lim, axis=1)

    def max_util_after(self, v: int) -> np.ndarray:
        """Largest utilization over all hosts once ``v`` joins host ``h``, for every ``h``."""
        util = _ratio(self.load, self.ix.capacity).max(axis=1, initial=0.0)
        new = _ratio(self.load + self.ix.demand[v], self.ix.capacity).max(axis=1, initial=0.0)
        if len(util) < 2:
            return new
        top = int(np.argmax(util))
        others = np.full(len(util), util[top])
        others[top] = np.max(np.delete(util, top))
        return np.maximum(new, others)

    def placement(self) -> Placement:
        ix = self.ix
        return Placement({ix.vnf_ids[v]: ix.host_ids[h] for v, h in sorted(self.x.items())})


Candidates = Callable[[PartialPlacement, int], Iterable[tuple[int, Increment]]]


def feasible_in_order(pp: PartialPlacement, v: int, hosts: Iterable[int]) -> Iterator[tuple[int, Increment]]:
    """The hosts of ``hosts`` that can take ``v`` now, lazily and in order."""
    for h in hosts:
        inc = pp.increments({v: int(h)})
        if inc is not None:
            yield int(h), inc


def backtrack(pp: PartialPlacement, order: Sequence[int], candidates: Candidates, budget: int = 1_000) -> bool:
    """Place ``order`` one VNF at a time, trying ``candidates(pp, v)`` in the
    given order and backing up when some later VNF has no candidate left.

    ``candidates`` may be lazy: the state is the same each time it resumes.
    The first complete assignment found is the greedy one whenever the greedy
    never gets stuck.  ``budget`` caps how many candidate lists are built;
    returns False, leaving ``pp`` as it was, when it runs out or no assignment
    exists.
    """
    expanded = 0

    def dfs(i: int) -> bool:
        nonlocal expanded
        if i == len(order):
            return True
        if expanded >= budget:
            return False
        expanded += 1
        v = order[i]
        for h, inc in candidates(pp, v):
            pp.commit({v: h}, inc)
            if dfs(i + 1):
                return True
            pp.undo({v: h}, inc)
            if expanded >= budget:
                return False
        return False

    return dfs(0)
