"""Synthetic scenarios: k-ary fat-tree datacenters, randomized vertical
services, and small random scenarios for property tests.

None of the default distributions come from measurements; they are
synthetic choices that keep the reference scenario feasible while leaving
room for cost/latency trade-offs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .infrastructure import Machine, PhysicalInfra, PhysLink, Pop, abstract_level1, abstract_level2, machine_prices, pop_prices
from .model import Host, HostGraph, Scenario, ServiceSpec, Vnf, Vnffg, validate_scenario


class InvalidK(ValueError):
    pass


@dataclass(frozen=True)
class LinkSpec:
    bandwidth: float  # Mbit/s
    latency: float  # ms


@dataclass(frozen=True)
class FatTreeConfig:
    host_caps: dict[str, float] = field(default_factory=lambda: {"cpu": 8.0, "mem": 16.0})
    host_edge: LinkSpec = LinkSpec(1000.0, 0.5)
    edge_agg: LinkSpec = LinkSpec(1000.0, 1.0)
    agg_core: LinkSpec = LinkSpec(1000.0, 2.0)
    # operator -> (low, high) unit price; pods are dealt to operators round-robin
    price_ranges: dict[str, tuple[float, float]] = field(default_factory=lambda: {"op0": (1.0, 10.0)})
    domains: int = 1


def gen_fat_tree(k: int, cfg: FatTreeConfig | None = None, rng_seed: int = 0) -> PhysicalInfra:
    """Standard k-ary fat-tree: (k/2)^2 cores, k pods of k/2 aggregation and
    k/2 edge switches, k/2 machines per edge switch.  Each pod is one PoP."""
    if k < 2 or k % 2:
        raise InvalidK(f"fat-tree parameter must be even and >= 2, got {k}")
    cfg = cfg or FatTreeConfig()
    rng = np.random.default_rng(rng_seed)
    half = k // 2
    ops = sorted(cfg.price_ranges)
    cores = [f"core{i}" for i in range(half * half)]
    switches = list(cores)
    links: list[PhysLink] = []
    machines: list[Machine] = []
    pops: list[Pop] = []
    for p in range(k):
        op = ops[p % len(ops)]
        domain = f"d{p * cfg.domains // k}"
        pops.append(Pop(f"pod{p}", domain, op))
        lo, hi = cfg.price_ranges[op]
        aggs = [f"agg{p}_{i}" for i in range(half)]
        edges = [f"edge{p}_{i}" for i in range(half)]
        switches += aggs + edges
        for i, agg in enumerate(aggs):
            for j in range(half):
                links.append(PhysLink(agg, cores[i * half + j], cfg.agg_core.bandwidth, cfg.agg_core.latency))
            for e in edges:
                links.append(PhysLink(e, agg, cfg.edge_agg.bandwidth, cfg.edge_agg.latency))
        for i, e in enumerate(edges):
            for j in range(half):
                mid = f"m{p}_{i}_{j}"
                price = round(float(rng.uniform(lo, hi)), 2)
                machines.append(Machine(mid, f"pod{p}", dict(cfg.host_caps), price))
                links.append(PhysLink(mid, e, cfg.host_edge.bandwidth, cfg.host_edge.latency))
    return PhysicalInfra(tuple(machines), tuple(pops), tuple(switches), tuple(links)).validate()


@dataclass(frozen=True)
class ServiceConfig:
    demand_ranges: dict[str, tuple[int, int]] = field(default_factory=lambda: {"cpu": (1, 4), "mem": (1, 6)})
    proc_delay_range: tuple[float, float] = (0.5, 3.0)  # ms
    traffic_range: tuple[float, float] = (10.0, 100.0)  # Mbit/s
    branch_prob: float = 0.2


@dataclass(frozen=True)
class Budgets:
    max_delay: float = 200.0  # ms
    max_cost: float = 1e4


def gen_services(
    count: int,
    vnf_range: tuple[int, int] = (5, 10),
    rng_seed: int = 0,
    budgets: Budgets | None = None,
    cfg: ServiceConfig | None = None,
) -> tuple[Vnffg, tuple[ServiceSpec, ...]]:
    """``count`` services, each a chain that occasionally branches off an
    earlier VNF.  Every service visits each of its own VNFs once; transition
    probabilities split evenly among a VNF's successors."""
    lo, hi = vnf_range
    if lo < 1 or hi < lo:
        raise ValueError(f"bad VNF range {vnf_range}")
    budgets = budgets or Budgets()
    cfg = cfg or ServiceConfig()
    rng = np.random.default_rng(rng_seed)
    vnfs: list[Vnf] = []
    traffic: dict[tuple[str, str], float] = {}
    services = []
    for s in range(count):
        size = int(rng.integers(lo, hi + 1))
        ids = [f"s{s}v{j}" for j in range(size)]
        for vid in ids:
            demand = {r: float(rng.integers(a, b + 1)) for r, (a, b) in cfg.demand_ranges.items()}
            d = round(float(rng.uniform(*cfg.proc_delay_range)), 2)
            vnfs.append(Vnf(vid, demand, d))
        children: dict[str, list[str]] = {}
        for j in range(1, size):
            parent = j - 1
            if j > 1 and rng.random() < cfg.branch_prob:
                parent = int(rng.integers(0, j - 1))
            children.setdefault(ids[parent], []).append(ids[j])
            traffic[(ids[parent], ids[j])] = round(float(rng.uniform(*cfg.traffic_range)), 1)
        transition = {(a, b): 1.0 / len(kids) for a, kids in children.items() for b in kids}
        services.append(
            ServiceSpec(f"s{s}", {v: 1.0 for v in ids}, transition, budgets.max_delay, budgets.max_cost)
        )
    return Vnffg(tuple(vnfs), traffic), tuple(services)


def price_costs(prices: dict[str, float], vnffg: Vnffg) -> dict[tuple[str, str], float]:
    """Fee of running a VNF at a host: the host's unit price times the VNF's
    total demand."""
    return {
        (h, v.id): round(p * sum(v.demand.values()), 4) for h, p in sorted(prices.items()) for v in vnffg.vnfs
    }


def build_scenario(
    infra: PhysicalInfra, vnffg: Vnffg, services: tuple[ServiceSpec, ...], level: int = 1
) -> Scenario:
    resources = sorted({r for v in vnffg.vnfs for r in v.demand} | {r for m in infra.machines for r in m.capacity})
    if level == 1:
        hg = abstract_level1(infra, price_costs(machine_prices(infra), vnffg))
    elif level == 2:
        hg = abstract_level2(infra, price_costs(pop_prices(infra), vnffg))
    else:
        raise ValueError("only levels 1 and 2 yield a host graph")
    return validate_scenario(Scenario(tuple(resources), vnffg, hg, services))


def reference_scenario(seed: int = 0, k: int = 4, services: int = 3, vnf_range: tuple[int, int] = (5, 10)) -> Scenario:
    """Fat-tree datacenter seen at machine granularity, hosting three services
    of 5 to 10 VNFs each."""
    infra = gen_fat_tree(k, rng_seed=seed)
    vnffg, svcs = gen_services(services, vnf_range, rng_seed=seed + 1)
    return build_scenario(infra, vnffg, svcs, level=1)


def gen_random_scenario(
    rng: np.random.Generator | int,
    n_hosts: int | tuple[int, int] = (4, 16),
    n_vnfs: int | tuple[int, int] = (3, 12),
    *,
    resources: tuple[str, ...] = ("cpu", "mem"),
    n_services: int | tuple[int, int] = (1, 3),
    domains: int = 1,
    link_prob: float = 1.0,
    tightness: float = 0.5,
) -> Scenario:
    """Random host graph plus random chain services.

    ``tightness`` is the expected fraction of total capacity the VNFs demand.
    Delay and cost budgets are set between the best-case and worst-case
    values of each service so the constraints actually bind.
    """
    rng = np.random.default_rng(rng)

    def draw(x: int | tuple[int, int]) -> int:
        return x if isinstance(x, int) else int(rng.integers(x[0], x[1] + 1))

    H, V, S = draw(n_hosts), draw(n_vnfs), draw(n_services)
    S = max(1, min(S, V))
    vnf_ids = [f"v{i:02d}" for i in range(V)]
    demand = {v: {r: float(rng.integers(1, 6)) for r in resources} for v in vnf_ids}
    vnfs = tuple(Vnf(v, demand[v], round(float(rng.uniform(0.5, 3.0)), 2)) for v in vnf_ids)
    total = {r: sum(demand[v][r] for v in vnf_ids) for r in resources}
    host_ids = [f"h{i:02d}" for i in range(H)]
    hosts = []
    for i, h in enumerate(host_ids):
        cap = {r: float(max(np.ceil(total[r] / (H * tightness) * rng.uniform(0.5, 1.5)), 5.0)) for r in resources}
        hosts.append(Host(h, cap, f"d{i * domains // H}", f"op{i * domains // H}"))
    pos = rng.uniform(0, 10, size=(H, 2))
    cap_l, dly_l = {}, {}
    for i in range(H):
        for j in range(i + 1, H):
            if link_prob < 1.0 and rng.random() > link_prob:
                continue
            d = round(float(np.linalg.norm(pos[i] - pos[j]) + 0.1), 2)
            bw = float(rng.integers(20, 200))
            for a, b in ((i, j), (j, i)):
                cap_l[(host_ids[a], host_ids[b])] = bw
                dly_l[(host_ids[a], host_ids[b])] = d
    price = {h: round(float(rng.uniform(1, 10)), 2) for h in host_ids}
    cost = {(h, v): round(price[h] * float(rng.uniform(0.5, 1.5)), 2) for h in host_ids for v in vnf_ids}
    # split the VNFs into S chains
    order = list(rng.permutation(V))
    cuts = sorted(rng.choice(np.arange(1, V), size=S - 1, replace=False)) if S > 1 else []
    chains = [[vnf_ids[i] for i in part] for part in np.split(np.array(order), cuts)]
    traffic: dict[tuple[str, str], float] = {}
    services = []
    hg = HostGraph(tuple(hosts), cap_l, dly_l, cost)
    for s, chain in enumerate(chains):
        chain = sorted(chain)
        trans = {}
        for a, b in zip(chain, chain[1:]):
            traffic[(a, b)] = round(float(rng.uniform(1, 60)), 1)
            trans[(a, b)] = 1.0
        proc = sum(v.proc_delay for v in vnfs if v.id in chain)
        lo_d, hi_d = proc, proc + (len(chain) - 1) * max(dly_l.values(), default=0.0)
        costs_v = [[cost[(h, v)] for h in host_ids] for v in chain]
        lo_c, hi_c = sum(min(c) for c in costs_v), sum(max(c) for c in costs_v)
        max_delay = round(lo_d + rng.uniform(0.3, 1.0) * (hi_d - lo_d) + 0.01, 2)
        max_cost = round(lo_c + rng.uniform(0.3, 1.0) * (hi_c - lo_c) + 0.01, 2)
        services.append(ServiceSpec(f"s{s}", {v: 1.0 for v in chain}, trans, max_delay, max_cost))
    sc = Scenario(tuple(resources), Vnffg(vnfs, traffic), hg, tuple(services))
    return validate_scenario(sc)
