"""Cluster-based placement.

The service graph and the host graph are both partitioned into ``k`` clusters
by agglomerative merging: VNFs joined by heavy traffic end up together, hosts
joined by low-delay links end up together.  VNF clusters are then paired with
host clusters, and VNFs are placed cost-greedily inside their paired host
cluster, breaking cost ties by load balance.

Multi-domain operation: links crossing domains look ``interdomain_weight``
times longer to the host clustering, and hosts outside the local domain cost
``foreign_cost_factor`` times more during assignment.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InfeasiblePlacement, KTooLarge, NoHostFits
from .evaluator import EPS, PlacementResult, is_feasible, summarize
from .model import INF, HostGraph, Placement, Scenario, Vnffg
from .partial import PartialPlacement, backtrack, feasible_in_order


@dataclass(frozen=True)
class MergeStep:
    a: str  # smallest member id of each merged cluster
    b: str
    weight: float


@dataclass(frozen=True)
class Clustering:
    cluster_of: dict[str, int]
    k: int
    merge_trace: tuple[MergeStep, ...] = ()

    def members(self) -> list[list[str]]:
        out: list[list[str]] = [[] for _ in range(self.k)]
        for node, c in sorted(self.cluster_of.items()):
            out[c].append(node)
        return out


@dataclass(frozen=True)
class ClusterParams:
    k: int = 1
    interdomain_weight: float = 10.0
    foreign_cost_factor: float = 1.0
    local_domain: str | None = None  # None: domain of the smallest host id

    def __post_init__(self):
        if self.k < 1:
            raise KTooLarge(f"cluster count must be >= 1, got {self.k}")
        if self.interdomain_weight < 1 or self.foreign_cost_factor < 1:
            raise ValueError("multi-domain multipliers must be >= 1")


def agglomerate(ids: list[str], linkage: np.ndarray, k: int, mode: str) -> Clustering:
    """Single-linkage agglomeration on a symmetric matrix.

    ``mode="max"`` merges the pair with the largest link (similarities);
    ``mode="min"`` the smallest (distances).  Ties go to the pair whose
    smallest member ids are lexicographically smallest.
    """
    n = len(ids)
    if not 1 <= k <= n:
        raise KTooLarge(f"cannot form {k} clusters from {n} nodes")
    order = sorted(range(n), key=lambda i: ids[i])
    ids = [ids[i] for i in order]
    L = linkage[np.ix_(order, order)].astype(float, copy=True)
    pick_fn = np.argmax if mode == "max" else np.argmin
    combine = np.maximum if mode == "max" else np.minimum
    active = np.ones(n, dtype=bool)
    upper = np.triu(np.ones((n, n), dtype=bool), 1)
    members = [[i] for i in range(n)]
    trace = []
    for _ in range(n - k):
        cand = np.flatnonzero(upper & active[:, None] & active[None, :])
        vals = L.ravel()[cand]
        i, j = divmod(int(cand[pick_fn(vals)]), n)
        trace.append(MergeStep(ids[i], ids[j], float(L[i, j])))
        row = combine(L[i], L[j])
        L[i, :] = row
        L[:, i] = row
        active[j] = False
        members[i] += members[j]
        members[j] = []
    cluster_of = {}
    for c, slot in enumerate(np.flatnonzero(active)):
        for m in members[slot]:
            cluster_of[ids[m]] = c
    return Clustering(cluster_of, k, tuple(trace))


def traffic_matrix(g: Vnffg) -> tuple[list[str], np.ndarray]:
    ids = sorted(g.ids)
    pos = {v: i for i, v in enumerate(ids)}
    W = np.zeros((len(ids), len(ids)))
    for (a, b), f in g.traffic.items():
        if a != b:
            W[pos[a], pos[b]] += f
            W[pos[b], pos[a]] += f
    return ids, W


def host_distance_matrix(hg: HostGraph, interdomain_weight: float = 1.0) -> tuple[list[str], np.ndarray]:
    ids = sorted(hg.ids)
    n = len(ids)
    D = np.full((n, n), INF)
    for i, a in enumerate(ids):
        for j, b in enumerate(ids):
            if i == j:
                continue
            d = min(hg.delay(a, b), hg.delay(b, a))
            if hg.by_id[a].domain != hg.by_id[b].domain:
                d *= interdomain_weight
            D[i, j] = d
    return ids, D


def cluster_vnffg(g: Vnffg, k: int) -> Clustering:
    ids, W = traffic_matrix(g)
    return agglomerate(ids, W, k, "max")


def cluster_hosts(hg: HostGraph, k: int, params: ClusterParams | None = None) -> Clustering:
    params = params or ClusterParams()
    ids, D = host_distance_matrix(hg, params.interdomain_weight)
    return agglomerate(ids, D, k, "min")


def resource_priority(sc: Scenario) -> list[str]:
    """Resources ordered by how scarce they are overall (demand / capacity)."""
    ix = sc.index
    need = ix.demand.sum(axis=0)
    have = ix.capacity.sum(axis=0)
    share = np.divide(need, have, out=np.full_like(need, INF), where=have > 0)
    return [ix.resources[i] for i in sorted(range(len(ix.resources)), key=lambda i: (-share[i], ix.resources[i]))]


def match_clusters(vc: Clustering, hc: Clustering, sc: Scenario) -> dict[int, int]:
    """Pair the i-th most demanding VNF cluster with the i-th most capable host
    cluster."""
    if vc.k != hc.k:
        raise ValueError(f"cluster counts differ: {vc.k} VNF vs {hc.k} host clusters")
    prio = resource_priority(sc)

    def vkey(c: int, mem: list[str]):
        return tuple(-sum(sc.vnf(v).demand.get(r, 0.0) for v in mem) for r in prio) + (mem[0],)

    def hkey(c: int, mem: list[str]):
        return tuple(-sum(sc.host(h).capacity.get(r, 0.0) for h in mem) for r in prio) + (mem[0],)

    vs = sorted(range(vc.k), key=lambda c: vkey(c, vc.members()[c]))
    hs = sorted(range(hc.k), key=lambda c: hkey(c, hc.members()[c]))
    return dict(zip(vs, hs))


@dataclass
class _State:
    """Running loads of a partial assignment over the scenario index."""

    sc: Scenario
    load: np.ndarray = field(init=False)
    flow: np.ndarray = field(init=False)
    util: np.ndarray = field(init=False)
    x: dict[int, int] = field(default_factory=dict)

    def __post_init__(self):
        ix = self.sc.index
        self.load = np.zeros_like(ix.capacity)
        self.flow = np.zeros_like(ix.bandwidth)
        self.util = np.zeros(len(ix.host_ids))

    @classmethod
    def from_partial(cls, sc: Scenario, x: dict[int, int]) -> "_State":
        """State after placing every VNF of ``x`` at once."""
        st = cls(sc)
        if not x:
            return st
        ix = sc.index
        vs = np.fromiter(x.keys(), dtype=np.int64, count=len(x))
        hs = np.fromiter(x.values(), dtype=np.int64, count=len(x))
        np.add.at(st.load, hs, ix.demand[vs])
        T = ix.traffic[np.ix_(vs, vs)]
        src, dst = np.nonzero((T > 0) & (hs[:, None] != hs[None, :]))
        np.add.at(st.flow, (hs[src], hs[dst]), T[src, dst])
        if ix.capacity.shape[1]:
            with np.errstate(divide="ignore", invalid="ignore"):
                st.util = np.max(st.load / ix.capacity, axis=1)
        st.x = dict(x)
        return st

    def fits(self, v: int, h: int) -> bool:
        ix = self.sc.index
        cap = ix.capacity[h]
        if np.any(self.load[h] + ix.demand[v] > cap + EPS * np.maximum(1.0, cap)):
            return False
        return self.links_ok(v, h)

    def links_ok(self, v: int, h: int) -> bool:
        ix = self.sc.index
        extra: dict[tuple[int, int], float] = {}
        for u, hu in self.x.items():
            if hu == h:
                continue
            if ix.traffic[v, u]:
                extra[(h, hu)] = extra.get((h, hu), 0.0) + ix.traffic[v, u]
            if ix.traffic[u, v]:
                extra[(hu, h)] = extra.get((hu, h), 0.0) + ix.traffic[u, v]
        for (a, b), f in extra.items():
            bw = ix.bandwidth[a, b]
            if self.flow[a, b] + f > bw + EPS * max(1.0, bw):
                return False
        return True

    def util_after(self, v: int, h: int) -> float:
        ix = self.sc.index
        new = np.max((self.load[h] + ix.demand[v]) / ix.capacity[h]) if ix.capacity.shape[1] else 0.0
        others = np.delete(self.util, h)
        return float(max(new, others.max() if len(others) else 0.0))

    def place(self, v: int, h: int) -> None:
        ix = self.sc.index
        for u, hu in self.x.items():
            if hu != h:
                self.flow[h, hu] += ix.traffic[v, u]
                self.flow[hu, h] += ix.traffic[u, v]
        self.x[v] = h
        self.load[h] += ix.demand[v]
        if ix.capacity.shape[1]:
            self.util[h] = np.max(self.load[h] / ix.capacity[h])

    def placement(self) -> Placement:
        ix = self.sc.index
        return Placement({ix.vnf_ids[v]: ix.host_ids[h] for v, h in sorted(self.x.items())})


def local_domain(sc: Scenario, params: ClusterParams) -> str:
    if params.local_domain is not None:
        return params.local_domain
    return sc.host(min(sc.host_graph.ids)).domain


def cheapest_host(
    state: _State, v: int, candidates: list[int], eff_cost: np.ndarray
) -> int | None:
    """Cheapest fitting candidate; ties by resulting max utilization, then id."""
    best, best_key = None, None
    for h in candidates:
        c = eff_cost[h]
        if not np.isfinite(c) or not state.fits(v, h):
            continue
        key = (c, state.util_after(v, h), h)
        if best_key is None or key < best_key:
            best, best_key = h, key
    return best


def assign(
    vc: Clustering, hc: Clustering, matching: dict[int, int], sc: Scenario, params: ClusterParams, budget: int = 1_000
) -> Placement:
    """Cost-greedy placement, VNFs in decreasing processing delay.

    Each VNF goes to the cheapest host of its matched cluster that keeps every
    limit (capacity, links, service delay and cost budgets), ties broken by
    the resulting maximum utilization and then host id; hosts outside the
    cluster are the fallback.  A VNF left with no host sends the search back
    to revise earlier choices.  With ``foreign_cost_factor > 1`` local hosts
    are searched exhaustively (within ``budget``) before any foreign host.
    """
    ix = sc.index
    H = len(ix.host_ids)
    home = local_domain(sc, params)
    foreign = np.array([sc.host(h).domain != home for h in ix.host_ids], dtype=bool)
    factor = np.where(foreign, params.foreign_cost_factor, 1.0)
    host_clusters = hc.members()
    home_cluster = [
        {ix.host_pos[h] for h in host_clusters[matching[vc.cluster_of[vid]]]} for vid in ix.vnf_ids
    ]
    order = sorted(range(len(ix.vnf_ids)), key=lambda v: (-ix.proc_delay[v], ix.vnf_ids[v]))

    def candidates_within(allowed: np.ndarray):
        def candidates(pp: PartialPlacement, v: int):
            eff = ix.cost[:, v] * factor
            ok = np.flatnonzero(allowed & np.isfinite(eff) & pp.fits_capacity(v))
            outside = np.array([h not in home_cluster[v] for h in ok], dtype=bool)
            util = pp.max_util_after(v)[ok]
            ranked = ok[np.lexsort((ok, util, eff[ok], outside))]
            return feasible_in_order(pp, v, ranked)

        return candidates

    phases = [np.ones(H, dtype=bool)]
    if params.foreign_cost_factor > 1 and foreign.any() and not foreign.all():
        phases.insert(0, ~foreign)
    for allowed in phases:
        pp = PartialPlacement(sc)
        if backtrack(pp, order, candidates_within(allowed), budget):
            p = pp.placement()
            report = is_feasible(p, sc)
            if not report.ok:
                raise InfeasiblePlacement(report, p)
            return p
    raise NoHostFits("no host assignment satisfies the limits" + (" within the search budget" if budget else ""))


def place_clustered(sc: Scenario, params: ClusterParams | None = None) -> PlacementResult:
    params = params or ClusterParams()
    V, H = len(sc.vnffg.vnfs), len(sc.host_graph.hosts)
    if params.k > min(V, H):
        raise KTooLarge(f"k={params.k} exceeds min(|V|={V}, |H|={H})")
    vc = cluster_vnffg(sc.vnffg, params.k)
    hc = cluster_hosts(sc.host_graph, params.k, params)
    matching = match_clusters(vc, hc, sc)
    p = assign(vc, hc, matching, sc, params)
    return summarize(p, sc, "cluster", k=params.k)
