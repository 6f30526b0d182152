"""Physical infrastructure and the host graphs derived from it at three
levels of abstraction: per machine, per NFVI-PoP, and one aggregate per
provider."""

from __future__ import annotations

import json
import statistics
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from .model import Host, HostGraph
from .paths import shortest_paths


@dataclass(frozen=True)
class Machine:
    id: str
    pop: str
    capacity: dict[str, float]
    price: float = 1.0  # per-unit fee charged by the owning operator


@dataclass(frozen=True)
class Pop:
    id: str
    domain: str = "d0"
    operator: str = "op0"


@dataclass(frozen=True)
class PhysLink:
    a: str
    b: str
    bandwidth: float  # Mbit/s
    latency: float  # ms


@dataclass(frozen=True)
class PhysicalInfra:
    machines: tuple[Machine, ...]
    pops: tuple[Pop, ...]
    switches: tuple[str, ...] = ()
    phys_links: tuple[PhysLink, ...] = ()

    def pop_of(self) -> dict[str, Pop]:
        pops = {p.id: p for p in self.pops}
        return {m.id: pops[m.pop] for m in self.machines}

    def validate(self) -> "PhysicalInfra":
        problems = []
        nodes = {m.id for m in self.machines} | set(self.switches)
        pops = {p.id for p in self.pops}
        if len(nodes) != len(self.machines) + len(self.switches):
            problems.append("machine/switch ids are not unique")
        for m in self.machines:
            if m.pop not in pops:
                problems.append(f"machine {m.id} references unknown PoP {m.pop}")
            if any(not c > 0 for c in m.capacity.values()):
                problems.append(f"machine {m.id} has a non-positive capacity")
        for ln in self.phys_links:
            if ln.a not in nodes or ln.b not in nodes:
                problems.append(f"link {ln.a}-{ln.b} references an unknown endpoint")
            if not ln.bandwidth > 0:
                problems.append(f"link {ln.a}-{ln.b} bandwidth must be > 0")
            if not ln.latency >= 0:
                problems.append(f"link {ln.a}-{ln.b} latency must be >= 0")
        if problems:
            raise ValueError("; ".join(problems))
        return self


class DisconnectedInfra(ValueError):
    pass


@dataclass(frozen=True)
class VirtualLink:
    delay: float
    bandwidth: float
    hops: int


def _adjacency(infra: PhysicalInfra) -> dict[str, list[tuple[str, float, float]]]:
    # physical cables carry traffic both ways
    adj: dict[str, list[tuple[str, float, float]]] = {}
    for ln in infra.phys_links:
        adj.setdefault(ln.a, []).append((ln.b, ln.latency, ln.bandwidth))
        adj.setdefault(ln.b, []).append((ln.a, ln.latency, ln.bandwidth))
    for nbrs in adj.values():
        nbrs.sort()
    return adj


def machine_paths(infra: PhysicalInfra) -> dict[tuple[str, str], VirtualLink]:
    """Minimum-latency path between every ordered machine pair.

    Only switches relay traffic.  Among equal-latency paths the one with the
    larger bottleneck wins, then the one with fewer hops.
    """
    adj = _adjacency(infra)
    machines = sorted(m.id for m in infra.machines)
    machine_set = set(machines)
    out: dict[tuple[str, str], VirtualLink] = {}
    for src in machines:
        reach = shortest_paths(src, adj, relays=lambda n: n not in machine_set)
        for dst in machines:
            if dst != src and dst in reach:
                d, bw, hops, _ = reach[dst]
                out[(src, dst)] = VirtualLink(d, bw, hops)
    return out


def _host_graph(
    hosts: list[Host], links: Mapping[tuple[str, str], VirtualLink], costs: Mapping[tuple[str, str], float]
) -> HostGraph:
    if len(hosts) > 1 and not links:
        raise DisconnectedInfra("no pair of hosts is connected")
    return HostGraph(
        hosts=tuple(hosts),
        link_capacity={k: vl.bandwidth for k, vl in sorted(links.items())},
        link_delay={k: vl.delay for k, vl in sorted(links.items())},
        cost=dict(costs),
    )


def abstract_level1(infra: PhysicalInfra, costs: Mapping[tuple[str, str], float]) -> HostGraph:
    """One host per machine; one virtual link per connected machine pair."""
    pop_of = infra.pop_of()
    hosts = [
        Host(m.id, dict(m.capacity), pop_of[m.id].domain, pop_of[m.id].operator)
        for m in sorted(infra.machines, key=lambda m: m.id)
    ]
    return _host_graph(hosts, machine_paths(infra), costs)


def pop_capacity(infra: PhysicalInfra) -> dict[str, dict[str, float]]:
    caps: dict[str, dict[str, float]] = {p.id: {} for p in infra.pops}
    for m in infra.machines:
        for r, c in m.capacity.items():
            caps[m.pop][r] = caps[m.pop].get(r, 0.0) + c
    return caps


def pop_links(infra: PhysicalInfra) -> dict[tuple[str, str], VirtualLink]:
    """Inter-PoP virtual links: the best machine-level path between the two
    PoPs (lowest delay, then widest, then shortest).  Parallel paths are not
    summed."""
    out: dict[tuple[str, str], VirtualLink] = {}
    pop_of = {m.id: m.pop for m in infra.machines}
    for (a, b), vl in machine_paths(infra).items():
        pa, pb = pop_of[a], pop_of[b]
        if pa == pb:
            continue
        cur = out.get((pa, pb))
        if cur is None or (vl.delay, -vl.bandwidth, vl.hops) < (cur.delay, -cur.bandwidth, cur.hops):
            out[(pa, pb)] = vl
    return out


def abstract_level2(infra: PhysicalInfra, costs: Mapping[tuple[str, str], float]) -> HostGraph:
    """One host per NFVI-PoP with the summed capacity of its machines."""
    caps = pop_capacity(infra)
    pops = sorted((p for p in infra.pops if any(m.pop == p.id for m in infra.machines)), key=lambda p: p.id)
    hosts = [Host(p.id, caps[p.id], p.domain, p.operator) for p in pops]
    return _host_graph(hosts, pop_links(infra), costs)


@dataclass(frozen=True)
class AggregateView:
    """Provider-wide advertisement; cannot seed a placement."""

    capacity: dict[str, float]
    link_summary: dict[str, dict[str, float]] = field(default_factory=dict)


def abstract_level3(infra: PhysicalInfra) -> AggregateView:
    total: dict[str, float] = {}
    for m in infra.machines:
        for r, c in m.capacity.items():
            total[r] = total.get(r, 0.0) + c
    summary: dict[str, dict[str, float]] = {}
    links = list(pop_links(infra).values())
    if links:
        for name, vals in (("delay", [v.delay for v in links]), ("bandwidth", [v.bandwidth for v in links])):
            summary[name] = {"min": min(vals), "max": max(vals), "mean": statistics.fmean(vals)}
    return AggregateView(total, summary)


def machine_prices(infra: PhysicalInfra) -> dict[str, float]:
    return {m.id: m.price for m in infra.machines}


def pop_prices(infra: PhysicalInfra) -> dict[str, float]:
    by_pop: dict[str, list[float]] = {}
    for m in infra.machines:
        by_pop.setdefault(m.pop, []).append(m.price)
    return {p: statistics.fmean(v) for p, v in by_pop.items()}


# --------------------------------------------------------------------------
# file format


def infra_to_dict(infra: PhysicalInfra) -> dict[str, Any]:
    return {
        "machines": [{"id": m.id, "pop": m.pop, "capacity": dict(m.capacity), "price": m.price} for m in infra.machines],
        "pops": [{"id": p.id, "domain": p.domain, "operator": p.operator} for p in infra.pops],
        "switches": list(infra.switches),
        "phys_links": [
            {"a": ln.a, "b": ln.b, "bandwidth": ln.bandwidth, "latency": ln.latency} for ln in infra.phys_links
        ],
    }


def infra_from_dict(d: Mapping[str, Any]) -> PhysicalInfra:
    return PhysicalInfra(
        machines=tuple(
            Machine(str(m["id"]), str(m["pop"]), dict(m["capacity"]), m.get("price", 1.0)) for m in d["machines"]
        ),
        pops=tuple(Pop(str(p["id"]), str(p.get("domain", "d0")), str(p.get("operator", "op0"))) for p in d["pops"]),
        switches=tuple(str(s) for s in d.get("switches", [])),
        phys_links=tuple(
            PhysLink(str(ln["a"]), str(ln["b"]), ln["bandwidth"], ln["latency"]) for ln in d.get("phys_links", [])
        ),
    )


def save_infra(infra: PhysicalInfra, path: str | Path) -> None:
    Path(path).write_text(json.dumps(infra_to_dict(infra), indent=2) + "\n")


def load_infra(path: str | Path) -> PhysicalInfra:
    return infra_from_dict(json.loads(Path(path).read_text())).validate()
