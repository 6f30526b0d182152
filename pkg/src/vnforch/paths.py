"""Minimum-delay paths that also track bottleneck bandwidth and hop count."""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping

from .model import INF, HostGraph

Adjacency = Mapping[str, Iterable[tuple[str, float, float]]]  # node -> (nbr, delay, bandwidth)


def shortest_paths(
    src: str, adj: Adjacency, relays: Callable[[str], bool] = lambda _: True
) -> dict[str, tuple[float, float, int, tuple[str, ...]]]:
    """Dijkstra on the label (delay, -bottleneck, hops).

    Delay is minimized first; among equal-delay paths the widest wins, then the
    one with fewer hops.  Nodes for which ``relays`` is false can end a path but
    never forward it.  Returns node -> (delay, bottleneck, hops, path).
    """
    best: dict[str, tuple[float, float, int]] = {src: (0.0, -INF, 0)}
    prev: dict[str, str] = {}
    heap = [(0.0, -INF, 0, src)]
    done = set()
    while heap:
        d, nb, hops, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        if u != src and not relays(u):
            continue
        for w, lat, bw in adj.get(u, ()):
            if w in done:
                continue
            label = (d + lat, max(nb, -bw), hops + 1)
            if label < best.get(w, (INF, 0.0, 0)):
                best[w] = label
                prev[w] = u
                heapq.heappush(heap, (*label, w))
    out = {}
    for node, (d, nb, hops) in best.items():
        path = [node]
        while path[-1] != src:
            path.append(prev[path[-1]])
        out[node] = (d, -nb, hops, tuple(reversed(path)))
    return out


@dataclass(frozen=True)
class PathEntry:
    delay: float
    bandwidth: float
    hops: int
    path: tuple[str, ...] = ()


UNREACHABLE = PathEntry(INF, 0.0, 0)


class PathTable:
    """All-pairs minimum-delay paths over the virtual links of a host graph."""

    def __init__(self, entries: dict[tuple[str, str], PathEntry]):
        self.entries = entries

    def __getitem__(self, pair: tuple[str, str]) -> PathEntry:
        return self.entries.get(pair, UNREACHABLE)

    def delay(self, a: str, b: str) -> float:
        return self[(a, b)].delay

    def hops(self, a: str, b: str) -> int:
        return self[(a, b)].hops

    def bottleneck(self, a: str, b: str) -> float:
        return self[(a, b)].bandwidth


def build_path_table(hg: HostGraph) -> PathTable:
    adj: dict[str, list[tuple[str, float, float]]] = {h: [] for h in hg.ids}
    for (a, b), d in sorted(hg.link_delay.items()):
        bw = hg.bandwidth(a, b)
        if a != b and bw > 0 and d < INF:
            adj[a].append((b, d, bw))
    entries = {}
    for src in sorted(hg.ids):
        for dst, (d, bw, hops, path) in shortest_paths(src, adj).items():
            entries[(src, dst)] = PathEntry(d, bw, hops, path)
    return PathTable(entries)
