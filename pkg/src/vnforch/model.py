"""Domain types for VNF placement: service graphs, host graphs, services, scenarios.

All types are frozen dataclasses.  Mapping fields are plain dicts and are
treated as read-only once a scenario has been validated.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Any, Iterable, Mapping

import numpy as np

INF = math.inf

Pair = tuple[str, str]


@dataclass(frozen=True)
class Vnf:
    id: str
    demand: dict[str, float]
    proc_delay: float = 0.0  # ms


@dataclass(frozen=True)
class Vnffg:
    vnfs: tuple[Vnf, ...]
    traffic: dict[Pair, float] = field(default_factory=dict)  # Mbit/s

    def f(self, v1: str, v2: str) -> float:
        return self.traffic.get((v1, v2), 0.0)

    @property
    def ids(self) -> list[str]:
        return [v.id for v in self.vnfs]


@dataclass(frozen=True)
class ServiceSpec:
    id: str
    visits: dict[str, float]
    transition: dict[Pair, float]
    max_delay: float  # ms
    max_cost: float

    def n(self, v: str) -> float:
        return self.visits.get(v, 0.0)

    def p(self, v2: str, v1: str) -> float:
        """Probability of visiting ``v2`` right after ``v1``."""
        return self.transition.get((v1, v2), 0.0)


@dataclass(frozen=True)
class Host:
    id: str
    capacity: dict[str, float]
    domain: str = "d0"
    operator: str = "op0"


@dataclass(frozen=True)
class HostGraph:
    hosts: tuple[Host, ...]
    link_capacity: dict[Pair, float] = field(default_factory=dict)  # Mbit/s
    link_delay: dict[Pair, float] = field(default_factory=dict)  # ms
    cost: dict[Pair, float] = field(default_factory=dict)  # (host, vnf) -> money

    def bandwidth(self, h1: str, h2: str) -> float:
        if h1 == h2:
            return INF
        return self.link_capacity.get((h1, h2), 0.0)

    def delay(self, h1: str, h2: str) -> float:
        # a pair without a delay entry has no virtual link at all
        if h1 == h2:
            return 0.0
        return self.link_delay.get((h1, h2), INF)

    def kappa(self, h: str, v: str) -> float:
        return self.cost.get((h, v), INF)

    @property
    def ids(self) -> list[str]:
        return [h.id for h in self.hosts]

    @cached_property
    def by_id(self) -> dict[str, Host]:
        return {h.id: h for h in self.hosts}


@dataclass(frozen=True)
class Placement:
    assignment: dict[str, str]  # vnf id -> host id

    def host_of(self, v: str) -> str:
        return self.assignment[v]

    def hosts_used(self) -> set[str]:
        return set(self.assignment.values())

    def genes(self) -> dict[str, set[str]]:
        out: dict[str, set[str]] = {}
        for v, h in self.assignment.items():
            out.setdefault(h, set()).add(v)
        return out


@dataclass(frozen=True)
class ScenarioIndex:
    """Dense integer-indexed arrays of a scenario, in sorted-id order."""

    vnf_ids: list[str]
    host_ids: list[str]
    resources: list[str]
    service_ids: list[str]
    demand: np.ndarray  # V x R
    proc_delay: np.ndarray  # V
    traffic: np.ndarray  # V x V
    capacity: np.ndarray  # H x R
    bandwidth: np.ndarray  # H x H, diagonal inf
    delay: np.ndarray  # H x H, diagonal 0, missing links inf
    cost: np.ndarray  # H x V
    visits: np.ndarray  # S x V
    transition: np.ndarray  # S x V x V, [s, v1, v2] = P(v2 | v1, s)
    max_delay: np.ndarray  # S
    max_cost: np.ndarray  # S

    @cached_property
    def vnf_pos(self) -> dict[str, int]:
        return {v: i for i, v in enumerate(self.vnf_ids)}

    @cached_property
    def host_pos(self) -> dict[str, int]:
        return {h: i for i, h in enumerate(self.host_ids)}

    def encode(self, p: Placement) -> np.ndarray:
        return np.array([self.host_pos[p.assignment[v]] for v in self.vnf_ids], dtype=np.int64)

    def decode(self, x: Iterable[int]) -> Placement:
        return Placement({v: self.host_ids[int(h)] for v, h in zip(self.vnf_ids, x)})


@dataclass(frozen=True)
class Scenario:
    resource_types: tuple[str, ...]
    vnffg: Vnffg
    host_graph: HostGraph
    services: tuple[ServiceSpec, ...] = ()

    @cached_property
    def vnf_by_id(self) -> dict[str, Vnf]:
        return {v.id: v for v in self.vnffg.vnfs}

    def vnf(self, v: str) -> Vnf:
        return self.vnf_by_id[v]

    def host(self, h: str) -> Host:
        return self.host_graph.by_id[h]

    @cached_property
    def index(self) -> ScenarioIndex:
        vnf_ids = sorted(self.vnf_by_id)
        host_ids = sorted(self.host_graph.by_id)
        res = list(self.resource_types)
        svc = sorted(self.services, key=lambda s: s.id)
        hg = self.host_graph
        V, H, S = len(vnf_ids), len(host_ids), len(svc)
        demand = np.array([[self.vnf(v).demand.get(r, 0.0) for r in res] for v in vnf_ids], dtype=float).reshape(V, len(res))
        capacity = np.array([[self.host(h).capacity.get(r, 0.0) for r in res] for h in host_ids], dtype=float).reshape(H, len(res))
        traffic = np.array([[self.vnffg.f(a, b) for b in vnf_ids] for a in vnf_ids], dtype=float).reshape(V, V)
        bandwidth = np.array([[hg.bandwidth(a, b) for b in host_ids] for a in host_ids], dtype=float).reshape(H, H)
        delay = np.array([[hg.delay(a, b) for b in host_ids] for a in host_ids], dtype=float).reshape(H, H)
        cost = np.array([[hg.kappa(h, v) for v in vnf_ids] for h in host_ids], dtype=float).reshape(H, V)
        visits = np.array([[s.n(v) for v in vnf_ids] for s in svc], dtype=float).reshape(S, V)
        transition = np.array(
            [[[s.p(b, a) for b in vnf_ids] for a in vnf_ids] for s in svc], dtype=float
        ).reshape(S, V, V)
        return ScenarioIndex(
            vnf_ids=vnf_ids,
            host_ids=host_ids,
            resources=res,
            service_ids=[s.id for s in svc],
            demand=demand,
            proc_delay=np.array([self.vnf(v).proc_delay for v in vnf_ids], dtype=float),
            traffic=traffic,
            capacity=capacity,
            bandwidth=bandwidth,
            delay=delay,
            cost=cost,
            visits=visits,
            transition=transition,
            max_delay=np.array([s.max_delay for s in svc], dtype=float),
            max_cost=np.array([s.max_cost for s in svc], dtype=float),
        )

    def with_changes(self, **kw: Any) -> "Scenario":
        """Copy with top-level fields replaced (cached views are not carried over)."""
        fields = dict(
            resource_types=self.resource_types,
            vnffg=self.vnffg,
            host_graph=self.host_graph,
            services=self.services,
        )
        fields.update(kw)
        return Scenario(**fields)


# --------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class Issue:
    kind: str
    message: str

    def to_dict(self) -> dict[str, str]:
        return {"kind": self.kind, "message": self.message}


class ScenarioError(ValueError):
    """Raised by :func:`validate_scenario`; ``issues`` lists every violation."""

    def __init__(self, issues: list[Issue]):
        self.issues = issues
        super().__init__("; ".join(f"{i.kind}: {i.message}" for i in issues))

    @property
    def kinds(self) -> set[str]:
        return {i.kind for i in self.issues}


DANGLING = "DanglingReference"
NEGATIVE = "NegativeQuantity"
PROB_MASS = "ProbabilityMassExceeded"
MISSING_COST = "MissingCostEntry"
DUPLICATE = "DuplicateId"
NONPOSITIVE = "NonPositiveQuantity"
MISSING_DEMAND = "MissingDemandEntry"
SELF_TRAFFIC = "SelfTraffic"

_PROB_TOL = 1e-9


def _check_nonneg(x: float) -> bool:
    return not (isinstance(x, float) and math.isnan(x)) and x >= 0


def validate_scenario(sc: Scenario) -> Scenario:
    """Return ``sc`` unchanged if every invariant holds, else raise ScenarioError
    carrying all violations found."""
    issues: list[Issue] = []

    def bad(kind: str, msg: str) -> None:
        issues.append(Issue(kind, msg))

    res = list(sc.resource_types)
    if not res:
        bad(MISSING_DEMAND, "scenario declares no resource types")
    if len(set(res)) != len(res):
        bad(DUPLICATE, "resource type names are not unique")
    rset = set(res)

    vids = [v.id for v in sc.vnffg.vnfs]
    if len(set(vids)) != len(vids):
        bad(DUPLICATE, "VNF ids are not unique")
    vset = set(vids)
    for v in sc.vnffg.vnfs:
        for r in res:
            if r not in v.demand:
                bad(MISSING_DEMAND, f"VNF {v.id} has no demand for {r}")
        for r, q in v.demand.items():
            if r not in rset:
                bad(DANGLING, f"VNF {v.id} demands unknown resource {r}")
            if not _check_nonneg(q):
                bad(NEGATIVE, f"VNF {v.id} demand {r}={q}")
        if not _check_nonneg(v.proc_delay):
            bad(NEGATIVE, f"VNF {v.id} proc_delay={v.proc_delay}")

    for (a, b), f in sc.vnffg.traffic.items():
        if a not in vset or b not in vset:
            bad(DANGLING, f"traffic ({a},{b}) references unknown VNF")
        if not _check_nonneg(f):
            bad(NEGATIVE, f"traffic ({a},{b})={f}")
        if a == b and f != 0:
            bad(SELF_TRAFFIC, f"traffic ({a},{a})={f} must be 0")

    hg = sc.host_graph
    hids = [h.id for h in hg.hosts]
    if len(set(hids)) != len(hids):
        bad(DUPLICATE, "host ids are not unique")
    hset = set(hids)
    for h in hg.hosts:
        for r, c in h.capacity.items():
            if r not in rset:
                bad(DANGLING, f"host {h.id} lists unknown resource {r}")
            if not c > 0:
                bad(NONPOSITIVE, f"host {h.id} capacity {r}={c}")

    for name, table in (("link capacity", hg.link_capacity), ("link delay", hg.link_delay)):
        for (a, b), q in table.items():
            if a not in hset or b not in hset:
                bad(DANGLING, f"{name} ({a},{b}) references unknown host")
            if not _check_nonneg(q):
                bad(NEGATIVE, f"{name} ({a},{b})={q}")

    for (h, v), k in hg.cost.items():
        if h not in hset or v not in vset:
            bad(DANGLING, f"cost ({h},{v}) references unknown host or VNF")
        if not _check_nonneg(k):
            bad(NEGATIVE, f"cost ({h},{v})={k}")
    for h in hids:
        for v in vids:
            if (h, v) not in hg.cost:
                bad(MISSING_COST, f"no cost entry for ({h},{v})")

    sids = [s.id for s in sc.services]
    if len(set(sids)) != len(sids):
        bad(DUPLICATE, "service ids are not unique")
    for s in sc.services:
        for v, n in s.visits.items():
            if v not in vset:
                bad(DANGLING, f"service {s.id} visits unknown VNF {v}")
            if not _check_nonneg(n):
                bad(NEGATIVE, f"service {s.id} n({v})={n}")
        mass: dict[str, float] = {}
        for (a, b), p in s.transition.items():
            if a not in vset or b not in vset:
                bad(DANGLING, f"service {s.id} transition ({a},{b}) references unknown VNF")
            if not (0 <= p <= 1):
                bad(NEGATIVE if p < 0 else PROB_MASS, f"service {s.id} P({b}|{a})={p}")
            mass[a] = mass.get(a, 0.0) + p
        for a, m in sorted(mass.items()):
            if m > 1 + _PROB_TOL:
                bad(PROB_MASS, f"service {s.id} outgoing probability from {a} sums to {m:g}")
        if not s.max_delay > 0:
            bad(NONPOSITIVE, f"service {s.id} max_delay={s.max_delay}")
        if not s.max_cost > 0:
            bad(NONPOSITIVE, f"service {s.id} max_cost={s.max_cost}")

    if issues:
        raise ScenarioError(issues)
    return sc


# --------------------------------------------------------------------------
# serialization
#
# JSON has no infinity, so an infinite cost (forbidden pairing) or an infinite
# delay is written as null.


def _num(x: float) -> float | int | None:
    if isinstance(x, float) and math.isinf(x):
        return None
    return x


def _unnum(x: Any) -> float:
    return INF if x is None else x


def scenario_to_dict(sc: Scenario) -> dict[str, Any]:
    hg = sc.host_graph
    links = []
    for a, b in sorted(set(hg.link_capacity) | set(hg.link_delay)):
        entry: dict[str, Any] = {"src": a, "dst": b}
        if (a, b) in hg.link_capacity:
            entry["capacity"] = _num(hg.link_capacity[(a, b)])
        if (a, b) in hg.link_delay:
            entry["delay"] = _num(hg.link_delay[(a, b)])
        links.append(entry)
    return {
        "resource_types": list(sc.resource_types),
        "vnfs": [{"id": v.id, "demand": dict(v.demand), "proc_delay": v.proc_delay} for v in sc.vnffg.vnfs],
        "traffic": [{"src": a, "dst": b, "rate": f} for (a, b), f in sc.vnffg.traffic.items()],
        "hosts": [
            {"id": h.id, "capacity": dict(h.capacity), "domain": h.domain, "operator": h.operator}
            for h in hg.hosts
        ],
        "links": links,
        "costs": [{"host": h, "vnf": v, "cost": _num(k)} for (h, v), k in hg.cost.items()],
        "services": [
            {
                "id": s.id,
                "visits": dict(s.visits),
                "transitions": [{"src": a, "dst": b, "p": p} for (a, b), p in s.transition.items()],
                "max_delay": s.max_delay,
                "max_cost": s.max_cost,
            }
            for s in sc.services
        ],
    }


def scenario_from_dict(d: Mapping[str, Any]) -> Scenario:
    try:
        vnfs = tuple(
            Vnf(id=str(v["id"]), demand=dict(v.get("demand", {})), proc_delay=v.get("proc_delay", 0.0))
            for v in d["vnfs"]
        )
        traffic = {(str(t["src"]), str(t["dst"])): t["rate"] for t in d.get("traffic", [])}
        hosts = tuple(
            Host(
                id=str(h["id"]),
                capacity=dict(h["capacity"]),
                domain=str(h.get("domain", "d0")),
                operator=str(h.get("operator", "op0")),
            )
            for h in d["hosts"]
        )
        cap, dly = {}, {}
        for ln in d.get("links", []):
            key = (str(ln["src"]), str(ln["dst"]))
            if "capacity" in ln:
                cap[key] = _unnum(ln["capacity"])
            if "delay" in ln:
                dly[key] = _unnum(ln["delay"])
        costs = {(str(c["host"]), str(c["vnf"])): _unnum(c["cost"]) for c in d.get("costs", [])}
        services = tuple(
            ServiceSpec(
                id=str(s["id"]),
                visits=dict(s.get("visits", {})),
                transition={(str(t["src"]), str(t["dst"])): t["p"] for t in s.get("transitions", [])},
                max_delay=s["max_delay"],
                max_cost=s["max_cost"],
            )
            for s in d.get("services", [])
        )
        return Scenario(
            resource_types=tuple(d["resource_types"]),
            vnffg=Vnffg(vnfs, traffic),
            host_graph=HostGraph(hosts, cap, dly, costs),
            services=services,
        )
    except (KeyError, TypeError) as e:
        raise ScenarioError([Issue("MalformedDocument", f"missing or malformed field: {e}")]) from e


def dumps_scenario(sc: Scenario) -> str:
    return json.dumps(scenario_to_dict(sc), indent=2, allow_nan=False) + "\n"


def loads_scenario(text: str) -> Scenario:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioError([Issue("MalformedDocument", str(e))]) from e
    if not isinstance(doc, dict):
        raise ScenarioError([Issue("MalformedDocument", "top level must be an object")])
    return scenario_from_dict(doc)


def save_scenario(sc: Scenario, path: str | Path) -> None:
    Path(path).write_text(dumps_scenario(sc))


def load_scenario(path: str | Path) -> Scenario:
    return loads_scenario(Path(path).read_text())
