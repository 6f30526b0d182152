"""Genetic-algorithm benchmark for VNF placement.

A chromosome is a complete placement; its genes are the hosts, each carrying
the set of VNFs placed there.  Crossover builds a child from the best genes
of two parents, mutation swaps VNFs between two genes, and each generation
keeps the K fittest distinct feasible chromosomes.  Fitness is the negated
total cost or total delay.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .cluster import ClusterParams, _State, cheapest_host, place_clustered
from .errors import CannotSeedPool, PlacementError
from .evaluator import BatchEvaluator, PlacementResult, summarize
from .model import Placement, Scenario


@dataclass(frozen=True)
class GaConfig:
    pool_size: int = 20
    generations: int = 200
    crossover_rate: float = 0.8
    mutation_rate: float = 0.05
    objective: Literal["cost", "delay"] = "cost"
    rng_seed: int = 0
    seed_retries: int | None = None  # random draws tried when seeding the pool

    def __post_init__(self):
        if self.pool_size < 2:
            raise ValueError("pool_size must be >= 2")
        if self.generations < 1:
            raise ValueError("generations must be >= 1")
        for name in ("crossover_rate", "mutation_rate"):
            if not 0 <= getattr(self, name) <= 1:
                raise ValueError(f"{name} must be in [0, 1]")
        if self.objective not in ("cost", "delay"):
            raise ValueError(f"unknown objective {self.objective!r}")


@dataclass(frozen=True)
class Chromosome:
    """Host index per VNF, in ``Scenario.index.vnf_ids`` order."""

    hosts: tuple[int, ...]

    def genes(self, sc: Scenario) -> dict[str, frozenset[str]]:
        ix = sc.index
        out: dict[str, set[str]] = {}
        for v, h in zip(ix.vnf_ids, self.hosts):
            out.setdefault(ix.host_ids[h], set()).add(v)
        return {h: frozenset(vs) for h, vs in sorted(out.items())}

    def placement(self, sc: Scenario) -> Placement:
        return sc.index.decode(self.hosts)

    @classmethod
    def from_placement(cls, p: Placement, sc: Scenario) -> "Chromosome":
        return cls(tuple(int(h) for h in sc.index.encode(p)))


class Fitness:
    """Memoized feasibility and objective value of chromosomes."""

    def __init__(self, sc: Scenario, objective: str):
        self.sc = sc
        self.ev = BatchEvaluator(sc)
        self.objective = objective
        self.cache: dict[tuple[int, ...], tuple[bool, float]] = {}
        # crossover is a pure function of its parents
        self.children: dict[tuple[tuple[int, ...], tuple[int, ...]], "Chromosome | None"] = {}
        self.genes: dict[tuple[int, ...], list[tuple[float, int, int, tuple[int, ...]]]] = {}

    def ranked_genes(self, c: Chromosome) -> list[tuple[float, int, int, tuple[int, ...]]]:
        """(quality per VNF, -size, host index, VNF indices) for each gene of ``c``."""
        if c.hosts not in self.genes:
            hosts = np.asarray(c.hosts, dtype=np.int64)
            q = vnf_qualities(hosts, self.sc, self.objective)
            out = []
            for h in np.unique(hosts):
                members = np.flatnonzero(hosts == h)
                out.append((float(q[members].sum()) / len(members), -len(members), int(h), tuple(int(v) for v in members)))
            self.genes[c.hosts] = out
        return self.genes[c.hosts]

    def evaluate(self, chroms: list[Chromosome]) -> list[tuple[bool, float]]:
        todo = [c.hosts for c in chroms if c.hosts not in self.cache]
        if todo:
            todo = list(dict.fromkeys(todo))
            feas, val = self.ev.objective(np.array(todo, dtype=np.int64).reshape(len(todo), -1), self.objective)
            for key, f, v in zip(todo, feas, val):
                self.cache[key] = (bool(f), float(v))
        return [self.cache[c.hosts] for c in chroms]

    def feasible(self, c: Chromosome) -> bool:
        return self.evaluate([c])[0][0]

    def value(self, c: Chromosome) -> float:
        return self.evaluate([c])[0][1]


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def init_pool(
    sc: Scenario, cfg: GaConfig, rng: np.random.Generator | None = None, fitness: Fitness | None = None
) -> list[Chromosome]:
    """K feasible chromosomes: uniform random assignments kept if feasible and
    not already drawn, topped up with perturbations of the single-cluster
    heuristic.  Repeats appear only when fewer than K distinct ones turn up."""
    rng = _rng(cfg.rng_seed if rng is None else rng)
    fitness = fitness or Fitness(sc, cfg.objective)
    K = cfg.pool_size
    V, H = len(sc.index.vnf_ids), len(sc.index.host_ids)
    retries = cfg.seed_retries if cfg.seed_retries is not None else max(1000, 50 * K)
    pool: list[Chromosome] = []
    drawn = 0
    while len(pool) < K and drawn < retries and H:
        n = min(256, retries - drawn)
        batch = [Chromosome(tuple(int(h) for h in row)) for row in rng.integers(0, H, size=(n, V))]
        drawn += n
        for c, (ok, _) in zip(batch, fitness.evaluate(batch)):
            if ok and len(pool) < K and c not in pool:
                pool.append(c)
    if len(pool) < K:
        try:
            base = Chromosome.from_placement(place_clustered(sc, ClusterParams(k=1)).placement, sc)
        except (PlacementError, ValueError):
            base = None
        if base is not None:
            if base not in pool:
                pool.append(base)
            attempts = 0
            while len(pool) < K and attempts < 20 * K:
                attempts += 1
                hosts = list(base.hosts)
                if V and H > 1:
                    hosts[int(rng.integers(V))] = int(rng.integers(H))
                c = Chromosome(tuple(hosts))
                if c not in pool and fitness.feasible(c):
                    pool.append(c)
            while len(pool) < K:
                pool.append(base)
    if not pool:
        raise CannotSeedPool("no feasible chromosome found to seed the pool")
    return pool


def gene_quality(
    host: str,
    vnfs: frozenset[str] | set[str],
    sc: Scenario,
    objective: str,
    placement: Placement | None = None,
) -> float:
    """Lower is better.  Cost: summed placement fees of the gene's VNFs.
    Delay: their processing delay plus the propagation delay of edges leaving
    them, with the far endpoint located by ``placement``."""
    hg = sc.host_graph
    total = 0.0
    for s in sc.services:
        for v in sorted(vnfs):
            n = s.n(v)
            if not n:
                continue
            if objective == "cost":
                total += n * hg.kappa(host, v)
            else:
                total += n * sc.vnf(v).proc_delay
        if objective == "delay" and placement is not None:
            for (a, b), prob in s.transition.items():
                if a in vnfs and b in placement.assignment:
                    w = s.n(a) * prob
                    if w:
                        total += w * hg.delay(host, placement.assignment[b])
    return total


def vnf_qualities(hosts: np.ndarray, sc: Scenario, objective: str) -> np.ndarray:
    """Each VNF's share of :func:`gene_quality` in the complete placement
    ``hosts``; a gene's quality is the sum over its VNFs."""
    ix = sc.index
    n = ix.visits.sum(axis=0)
    if objective == "cost":
        return np.where(n > 0, n * ix.cost[hosts, np.arange(len(hosts))], 0.0)
    W = (ix.visits[:, :, None] * ix.transition).sum(axis=0)
    D = ix.delay[hosts[:, None], hosts[None, :]]
    return n * ix.proc_delay + np.where(W > 0, W * D, 0.0).sum(axis=1)


def _propagation_increment(state: _State, v: int, W: np.ndarray) -> np.ndarray:
    """Propagation delay added at each host by placing ``v`` next to the
    VNFs already in ``state``."""
    ix = state.sc.index
    out = np.zeros(len(ix.host_ids))
    for u, hu in state.x.items():
        out_w, in_w = W[:, v, u].sum(), W[:, u, v].sum()
        if out_w:
            out += out_w * ix.delay[:, hu]
        if in_w:
            out += in_w * ix.delay[hu, :]
    return out


def crossover(
    p1: Chromosome, p2: Chromosome, sc: Scenario, cfg: GaConfig, fitness: Fitness | None = None
) -> Chromosome | None:
    """Child built from the parents' best genes; None if it is infeasible.

    Genes are ranked by quality per hosted VNF (larger genes win ties, then
    the first parent).  A gene is adopted only if none of its VNFs is covered
    yet.  Uncovered VNFs go to the cheapest fitting host, or for the delay
    objective to the fitting host adding the least propagation delay.
    """
    fitness = fitness or Fitness(sc, cfg.objective)
    child = _crossover(p1, p2, sc, cfg, fitness)
    return child if child is not None and fitness.feasible(child) else None


def _crossover(p1: Chromosome, p2: Chromosome, sc: Scenario, cfg: GaConfig, fitness: Fitness) -> Chromosome | None:
    """Unchecked child (None only if the repair finds no fitting host)."""
    key = (p1.hosts, p2.hosts)
    if key not in fitness.children:
        fitness.children[key] = _build_child(p1, p2, sc, cfg, fitness)
    return fitness.children[key]


def _build_child(p1: Chromosome, p2: Chromosome, sc: Scenario, cfg: GaConfig, fitness: Fitness) -> Chromosome | None:
    ix = sc.index
    V = len(ix.vnf_ids)
    ranked = [(q, neg_len, rank, h, m) for rank, p in enumerate((p1, p2)) for q, neg_len, h, m in fitness.ranked_genes(p)]
    ranked.sort(key=lambda g: g[:4])
    x = [-1] * V
    for *_, h, members in ranked:
        if all(x[v] < 0 for v in members):
            for v in members:
                x[v] = h
    leftover = [v for v in range(V) if x[v] < 0]
    if leftover:
        state = _State.from_partial(sc, {v: h for v, h in enumerate(x) if h >= 0})
        leftover.sort(key=lambda v: (-ix.proc_delay[v], ix.vnf_ids[v]))
        everywhere = list(range(len(ix.host_ids)))
        W = ix.visits[:, :, None] * ix.transition if cfg.objective == "delay" else None
        for v in leftover:
            price = ix.cost[:, v] if W is None else _propagation_increment(state, v, W)
            h = cheapest_host(state, v, everywhere, price)
            if h is None:
                return None
            state.place(v, h)
            x[v] = h
    return Chromosome(tuple(x))


def mutate(
    c: Chromosome, sc: Scenario, cfg: GaConfig, rng: np.random.Generator, fitness: Fitness | None = None
) -> Chromosome:
    """With probability rm, swap one VNF between two random genes (or move one
    into an empty gene).  Infeasible results are rejected."""
    out = _mutant(c, len(sc.index.host_ids), cfg.mutation_rate, rng)
    if out is None:
        return c
    fitness = fitness or Fitness(sc, cfg.objective)
    return out if fitness.feasible(out) else c


def _distinct_pair(n: int, rng: np.random.Generator) -> tuple[int, int]:
    """Uniform ordered pair of distinct indices below ``n`` (n >= 2)."""
    i = int(rng.integers(n))
    j = int(rng.integers(n - 1))
    return i, j + (j >= i)


def _mutant(c: Chromosome, H: int, rate: float, rng: np.random.Generator) -> Chromosome | None:
    """Unchecked mutation of ``c``; None when no mutation happens."""
    if rng.random() >= rate or H < 2:
        return None
    g1, g2 = _distinct_pair(H, rng)
    in1 = [v for v, h in enumerate(c.hosts) if h == g1]
    in2 = [v for v, h in enumerate(c.hosts) if h == g2]
    if not in1 and not in2:
        return None
    hosts = list(c.hosts)
    if in1 and in2 and rng.random() < 0.5:
        a, b = in1[int(rng.integers(len(in1)))], in2[int(rng.integers(len(in2)))]
        hosts[a], hosts[b] = g2, g1
    elif in1:
        hosts[in1[int(rng.integers(len(in1)))]] = g2
    else:
        hosts[in2[int(rng.integers(len(in2)))]] = g1
    return Chromosome(tuple(hosts))


@dataclass
class GaResult:
    result: PlacementResult
    best: Chromosome
    trace: list[float] = field(default_factory=list)  # best fitness after each generation


def _select(population: list[Chromosome], fitness: Fitness, K: int) -> list[Chromosome]:
    unique = list(dict.fromkeys(population))
    scored = [(v, c.hosts, c) for c, (ok, v) in zip(unique, fitness.evaluate(unique)) if ok]
    scored.sort(key=lambda t: (t[0], t[1]))
    return [c for _, _, c in scored[:K]]


def evolve(sc: Scenario, cfg: GaConfig | None = None) -> GaResult:
    cfg = cfg or GaConfig()
    fitness = Fitness(sc, cfg.objective)
    streams = np.random.SeedSequence(cfg.rng_seed).spawn(cfg.generations + 1)
    pool = init_pool(sc, cfg, np.random.default_rng(streams[0]), fitness)
    # the initial pool may hold duplicates; selection keeps distinct chromosomes
    pool = _select(pool, fitness, cfg.pool_size)
    trace = []
    H = len(sc.index.host_ids)
    for g in range(cfg.generations):
        rng = np.random.default_rng(streams[g + 1])
        # operators draw from rng in a fixed order; feasibility is then checked per batch
        children = []
        for _ in range(cfg.pool_size):
            if rng.random() < cfg.crossover_rate:
                i, j = _distinct_pair(len(pool), rng) if len(pool) > 1 else (0, 0)
                child = _crossover(pool[i], pool[j], sc, cfg, fitness)
                if child is not None:
                    children.append(child)
        offspring = [c for c, (ok, _) in zip(children, fitness.evaluate(children)) if ok]
        mutants = [m for c in pool + offspring if (m := _mutant(c, H, cfg.mutation_rate, rng)) is not None]
        offspring += [m for m, (ok, _) in zip(mutants, fitness.evaluate(mutants)) if ok]
        pool = _select(pool + offspring, fitness, cfg.pool_size)
        trace.append(-fitness.value(pool[0]))
    best = pool[0]
    res = summarize(best.placement(sc), sc, f"ga-{cfg.objective}", generations=cfg.generations)
    return GaResult(res, best, trace)
