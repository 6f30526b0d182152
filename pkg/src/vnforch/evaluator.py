"""Feasibility checks and objective metrics shared by every placement algorithm.

Two independent routes are provided:

* scalar functions (``check_capacity`` ... ``is_feasible``) that walk the
  scenario dictionaries directly, and
* :class:`BatchEvaluator`, which scores many integer-encoded placements at once
  with numpy.  It backs the exhaustive oracle and the genetic algorithm.

The test-suite cross-checks the two.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Literal, Mapping

import numpy as np

from .model import INF, Placement, Scenario, ServiceSpec

# absolute slack for float comparisons against capacities and budgets
EPS = 1e-9

Objective = Literal["cost", "delay", "weighted"]


def _exceeds(value: float, limit: float) -> bool:
    return value > limit + EPS * max(1.0, abs(limit)) if math.isfinite(limit) else False


@dataclass(frozen=True)
class Violation:
    kind: str  # capacity | link | delay | cost
    where: tuple[str, ...]
    value: float
    limit: float

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind, "where": list(self.where), "value": _jnum(self.value), "limit": _jnum(self.limit)}


def _jnum(x: float) -> float | None:
    return None if math.isinf(x) or math.isnan(x) else x


@dataclass(frozen=True)
class FeasibilityReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok

    def kinds(self) -> set[str]:
        return {v.kind for v in self.violations}

    def to_dict(self) -> dict[str, Any]:
        return {"feasible": self.ok, "violations": [v.to_dict() for v in self.violations]}


def _require_complete(p: Placement, sc: Scenario) -> None:
    missing = [v.id for v in sc.vnffg.vnfs if v.id not in p.assignment]
    if missing:
        raise ValueError(f"placement is incomplete, unplaced VNFs: {missing}")


def host_loads(p: Placement, sc: Scenario) -> dict[str, dict[str, float]]:
    loads = {h.id: {r: 0.0 for r in sc.resource_types} for h in sc.host_graph.hosts}
    for v, h in p.assignment.items():
        for r, q in sc.vnf(v).demand.items():
            loads[h][r] += q
    return loads


def check_capacity(p: Placement, sc: Scenario) -> list[Violation]:
    _require_complete(p, sc)
    out = []
    for h, load in host_loads(p, sc).items():
        cap = sc.host(h).capacity
        for r in sc.resource_types:
            c = cap.get(r, 0.0)
            if _exceeds(load[r], c):
                out.append(Violation("capacity", (h, r), load[r], c))
    return out


def link_flows(p: Placement, sc: Scenario) -> dict[tuple[str, str], float]:
    flows: dict[tuple[str, str], float] = {}
    for (v1, v2), f in sc.vnffg.traffic.items():
        h1, h2 = p.assignment[v1], p.assignment[v2]
        if f and h1 != h2:
            flows[(h1, h2)] = flows.get((h1, h2), 0.0) + f
    return flows


def check_link_capacity(p: Placement, sc: Scenario) -> list[Violation]:
    _require_complete(p, sc)
    hg = sc.host_graph
    out = []
    for (h1, h2), flow in sorted(link_flows(p, sc).items()):
        t = hg.bandwidth(h1, h2)
        if _exceeds(flow, t) or (t == 0 and flow > 0):
            out.append(Violation("link", (h1, h2), flow, t))
    return out


def service_delay(p: Placement, s: ServiceSpec, sc: Scenario) -> float:
    _require_complete(p, sc)
    hg = sc.host_graph
    total = 0.0
    for v, n in s.visits.items():
        if n:
            total += n * sc.vnf(v).proc_delay
    for (v1, v2), prob in s.transition.items():
        w = s.n(v1) * prob
        if w:
            total += w * hg.delay(p.assignment[v1], p.assignment[v2])
    return total


def placement_cost(p: Placement, s: ServiceSpec, sc: Scenario) -> float:
    _require_complete(p, sc)
    hg = sc.host_graph
    total = 0.0
    for v, n in s.visits.items():
        if n:
            total += n * hg.kappa(p.assignment[v], v)
    return total


def check_services(p: Placement, sc: Scenario) -> list[Violation]:
    out = []
    for s in sc.services:
        d = service_delay(p, s, sc)
        if _exceeds(d, s.max_delay):
            out.append(Violation("delay", (s.id,), d, s.max_delay))
        c = placement_cost(p, s, sc)
        if _exceeds(c, s.max_cost):
            out.append(Violation("cost", (s.id,), c, s.max_cost))
    return out


def is_feasible(p: Placement, sc: Scenario) -> FeasibilityReport:
    return FeasibilityReport(
        tuple(check_capacity(p, sc) + check_link_capacity(p, sc) + check_services(p, sc))
    )


def max_utilization(assignment: Placement | Mapping[str, str], sc: Scenario) -> float:
    """Largest fraction of any resource consumed at any host; partial
    assignments are fine (unplaced VNFs contribute nothing)."""
    amap = assignment.assignment if isinstance(assignment, Placement) else assignment
    loads: dict[tuple[str, str], float] = {}
    for v, h in amap.items():
        for r, q in sc.vnf(v).demand.items():
            loads[(h, r)] = loads.get((h, r), 0.0) + q
    best = 0.0
    for (h, r), load in loads.items():
        c = sc.host(h).capacity.get(r, 0.0)
        u = load / c if c > 0 else (INF if load > 0 else 0.0)
        best = max(best, u)
    return best


def total_cost(p: Placement, sc: Scenario) -> float:
    return sum(placement_cost(p, s, sc) for s in sc.services)


def total_delay(p: Placement, sc: Scenario) -> float:
    return sum(service_delay(p, s, sc) for s in sc.services)


def objective_value(p: Placement, sc: Scenario, objective: Objective, weight: float = 0.5) -> float:
    if objective == "cost":
        return total_cost(p, sc)
    if objective == "delay":
        return total_delay(p, sc)
    if objective == "weighted":
        return weight * total_cost(p, sc) + (1 - weight) * total_delay(p, sc)
    raise ValueError(f"unknown objective {objective!r}")


@dataclass(frozen=True)
class PlacementResult:
    """A feasible placement plus the metrics reported for it."""

    placement: Placement
    algorithm: str
    total_cost: float
    total_delay: float
    service_delays: dict[str, float]
    service_costs: dict[str, float]
    max_utilization: float
    extra: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "algorithm": self.algorithm,
            "placement": dict(sorted(self.placement.assignment.items())),
            "total_cost": self.total_cost,
            "total_delay": self.total_delay,
            "service_delays": self.service_delays,
            "service_costs": self.service_costs,
            "max_utilization": self.max_utilization,
            "feasible": True,
        }


def summarize(p: Placement, sc: Scenario, algorithm: str, **extra: Any) -> PlacementResult:
    delays = {s.id: service_delay(p, s, sc) for s in sc.services}
    costs = {s.id: placement_cost(p, s, sc) for s in sc.services}
    return PlacementResult(
        placement=p,
        algorithm=algorithm,
        total_cost=sum(costs.values()),
        total_delay=sum(delays.values()),
        service_delays=delays,
        service_costs=costs,
        max_utilization=max_utilization(p, sc),
        extra=extra,
    )


# --------------------------------------------------------------------------
# vectorized route


def _rowsum(A: np.ndarray) -> np.ndarray:
    """Left-to-right sum of each row.  ``A.sum(axis=1)`` may reorder the
    additions depending on the number of rows, which would make a placement's
    score depend on the batch it was scored in."""
    out = np.zeros(A.shape[0])
    for j in range(A.shape[1]):
        out += A[:, j]
    return out


class BatchEvaluator:
    """Scores integer-encoded placements (rows of host indices, columns in
    ``sc.index.vnf_ids`` order) in bulk."""

    def __init__(self, sc: Scenario):
        ix = sc.index
        self.ix = ix
        self.V, self.H = len(ix.vnf_ids), len(ix.host_ids)
        self.S = len(ix.service_ids)
        self.demand = ix.demand
        self.capacity = ix.capacity
        self.cap_slack = ix.capacity + EPS * np.maximum(1.0, ix.capacity)
        src, dst = np.nonzero(ix.traffic)
        keep = src != dst
        self.t_src, self.t_dst = src[keep], dst[keep]
        self.t_rate = ix.traffic[self.t_src, self.t_dst]
        self.bandwidth = ix.bandwidth
        self.delay = ix.delay
        self.proc = ix.visits @ ix.proc_delay  # S
        w = ix.visits[:, :, None] * ix.transition  # S x V x V
        self.w_s, self.w_a, self.w_b = np.nonzero(w)
        self.w_val = w[self.w_s, self.w_a, self.w_b]
        self.n_s, self.n_v = np.nonzero(ix.visits)
        self.n_val = ix.visits[self.n_s, self.n_v]
        self.cost = ix.cost
        self.max_delay = ix.max_delay
        self.max_cost = ix.max_cost

    def _limit(self, lim: np.ndarray) -> np.ndarray:
        return lim + EPS * np.maximum(1.0, np.abs(lim))

    def loads(self, X: np.ndarray) -> np.ndarray:
        B = X.shape[0]
        out = np.zeros((B, self.H, self.demand.shape[1]))
        rows = np.repeat(np.arange(B), self.V)
        np.add.at(out, (rows, X.ravel()), np.tile(self.demand, (B, 1)))
        return out

    def capacity_ok(self, X: np.ndarray) -> np.ndarray:
        return np.all(self.loads(X) <= self.cap_slack, axis=(1, 2))

    def link_ok(self, X: np.ndarray) -> np.ndarray:
        B = X.shape[0]
        if len(self.t_rate) == 0:
            return np.ones(B, dtype=bool)
        a, b = X[:, self.t_src], X[:, self.t_dst]  # B x E
        flows = np.zeros((B, self.H, self.H))
        rows = np.repeat(np.arange(B), len(self.t_rate))
        np.add.at(flows, (rows, a.ravel(), b.ravel()), np.tile(self.t_rate, B))
        bw = self.bandwidth
        lim = np.where(np.isinf(bw), np.inf, bw + EPS * np.maximum(1.0, bw))
        bad = (flows > lim) | ((bw == 0) & (flows > 0))
        return ~bad.any(axis=(1, 2))

    def service_delays(self, X: np.ndarray) -> np.ndarray:
        B = X.shape[0]
        out = np.tile(self.proc, (B, 1))
        if len(self.w_val):
            d = self.delay[X[:, self.w_a], X[:, self.w_b]] * self.w_val  # B x E
            for s in range(self.S):
                m = self.w_s == s
                if m.any():
                    out[:, s] += _rowsum(d[:, m])
        return out

    def service_costs(self, X: np.ndarray) -> np.ndarray:
        B = X.shape[0]
        out = np.zeros((B, self.S))
        if len(self.n_val):
            c = self.cost[X[:, self.n_v], self.n_v] * self.n_val
            for s in range(self.S):
                m = self.n_s == s
                if m.any():
                    out[:, s] = _rowsum(c[:, m])
        return out

    def evaluate(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Return (feasible mask, total cost, total delay) for each row."""
        X = np.atleast_2d(np.asarray(X, dtype=np.int64))
        delays = self.service_delays(X)
        costs = self.service_costs(X)
        feas = self.capacity_ok(X) & self.link_ok(X)
        if self.S:
            feas &= np.all(delays <= self._limit(self.max_delay), axis=1)
            feas &= np.all(costs <= self._limit(self.max_cost), axis=1)
        return feas, _rowsum(costs), _rowsum(delays)

    def objective(self, X: np.ndarray, objective: Objective, weight: float = 0.5) -> tuple[np.ndarray, np.ndarray]:
        feas, cost, delay = self.evaluate(X)
        if objective == "cost":
            val = cost
        elif objective == "delay":
            val = delay
        elif objective == "weighted":
            val = weight * cost + (1 - weight) * delay
        else:
            raise ValueError(f"unknown objective {objective!r}")
        return feas, val


class SearchSpaceTooLarge(ValueError):
    pass


def _enumerate(H: int, V: int, start: int, stop: int) -> np.ndarray:
    codes = np.arange(start, stop, dtype=np.int64)
    if V == 0:
        return np.zeros((len(codes), 0), dtype=np.int64)
    return np.stack(np.unravel_index(codes, (H,) * V), axis=1)


def brute_force_place(
    sc: Scenario,
    objective: Objective = "cost",
    *,
    weight: float = 0.5,
    bound: int = 10**6,
    batch: int = 1 << 15,
) -> Placement | None:
    """Exhaustive search over all |H|^|V| assignments.

    Returns the feasible minimizer of ``objective`` (summed over services), ties
    broken by the lexicographically smallest assignment in sorted-id order, or
    None when nothing is feasible.
    """
    ix = sc.index
    H, V = len(ix.host_ids), len(ix.vnf_ids)
    if H == 0:
        return None if V else Placement({})
    size = H**V
    if size > bound:
        raise SearchSpaceTooLarge(f"{H}^{V} = {size} assignments exceeds bound {bound}")
    ev = BatchEvaluator(sc)
    best_val, best_row = INF, None
    for start in range(0, size, batch):
        X = _enumerate(H, V, start, min(size, start + batch))
        feas, val = ev.objective(X, objective, weight)
        val = np.where(feas, val, np.inf)
        i = int(np.argmin(val))  # first occurrence = lexicographically smallest
        if feas[i] and val[i] < best_val:
            best_val, best_row = val[i], X[i]
    return None if best_row is None else ix.decode(best_row)


def iter_assignments(sc: Scenario) -> Iterable[Placement]:
    """All complete assignments in lexicographic order (small scenarios only)."""
    ix = sc.index
    for combo in itertools.product(ix.host_ids, repeat=len(ix.vnf_ids)):
        yield Placement(dict(zip(ix.vnf_ids, combo)))
