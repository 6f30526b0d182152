import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from builders import restrict_hosts, t1
from vnforch.cluster import (
    ClusterParams,
    Clustering,
    agglomerate,
    assign,
    cluster_hosts,
    cluster_vnffg,
    match_clusters,
    place_clustered,
)
from vnforch.errors import KTooLarge, NoHostFits, PlacementError
from vnforch.evaluator import brute_force_place, is_feasible
from vnforch.model import Host, HostGraph, Scenario, ServiceSpec, Vnf, Vnffg, validate_scenario
from vnforch.scenario_gen import gen_random_scenario


def abc(fab=5.0, fbc=1.0) -> Vnffg:
    return Vnffg(tuple(Vnf(v, {"cpu": 1.0}) for v in "abc"), {("a", "b"): fab, ("b", "c"): fbc})


def line_hosts(domains=("d0", "d0", "d0")) -> HostGraph:
    hosts = tuple(Host(f"h{i + 1}", {"cpu": 1.0}, d) for i, d in enumerate(domains))
    dly = {("h1", "h2"): 1.0, ("h2", "h1"): 1.0, ("h2", "h3"): 9.0, ("h3", "h2"): 9.0}
    return HostGraph(hosts, {k: 10.0 for k in dly}, dly)


class TestVnfClustering:
    def test_heaviest_edge_merges_first(self):
        assert cluster_vnffg(abc(), 2).members() == [["a", "b"], ["c"]]

    def test_extremes(self):
        assert cluster_vnffg(abc(), 3).members() == [["a"], ["b"], ["c"]]
        assert cluster_vnffg(abc(), 1).members() == [["a", "b", "c"]]

    def test_too_many_clusters(self):
        with pytest.raises(KTooLarge):
            cluster_vnffg(abc(), 4)

    def test_both_directions_count(self):
        g = Vnffg(abc().vnfs, {("a", "b"): 2.0, ("c", "b"): 2.0, ("b", "c"): 2.0})
        assert cluster_vnffg(g, 2).members() == [["a"], ["b", "c"]]


class TestHostClustering:
    def test_lowest_delay_merges_first(self):
        assert cluster_hosts(line_hosts(), 2).members() == [["h1", "h2"], ["h3"]]

    def test_singletons(self):
        assert cluster_hosts(line_hosts(), 3).k == 3

    def test_interdomain_weight_reorders_merges(self):
        hg = line_hosts(("d0", "d1", "d1"))
        c = cluster_hosts(hg, 2, ClusterParams(interdomain_weight=20.0))
        assert c.members() == [["h1"], ["h2", "h3"]]


class TestMatching:
    def _scenario(self) -> Scenario:
        vnfs = (Vnf("a", {"cpu": 8.0}), Vnf("b", {"cpu": 4.0}), Vnf("c", {"cpu": 4.0}))
        hosts = (Host("h1", {"cpu": 8.0}), Host("h2", {"cpu": 12.0}), Host("h3", {"cpu": 8.0}))
        return Scenario(("cpu",), Vnffg(vnfs), HostGraph(hosts), ())

    def test_single_pair(self):
        sc = self._scenario()
        one = Clustering({"a": 0, "b": 0, "c": 0}, 1)
        assert match_clusters(one, Clustering({"h1": 0, "h2": 0, "h3": 0}, 1), sc) == {0: 0}

    def test_rank_pairing(self):
        sc = self._scenario()
        vc = Clustering({"a": 1, "b": 1, "c": 0}, 2)  # demands {12, 4}
        hc = Clustering({"h1": 0, "h2": 1, "h3": 1}, 2)  # capacities {8, 20}
        assert match_clusters(vc, hc, sc) == {1: 1, 0: 0}

    def test_ties_follow_smallest_member(self):
        sc = self._scenario()
        vc = Clustering({"a": 2, "b": 1, "c": 0}, 3)
        hc = Clustering({"h1": 0, "h2": 1, "h3": 2}, 3)
        m = match_clusters(vc, hc, sc)
        # a (8) -> h2 (12); b and c tie at 4 -> h1 then h3
        assert m == {2: 1, 1: 0, 0: 2}

    def test_counts_must_agree(self):
        sc = self._scenario()
        with pytest.raises(ValueError):
            match_clusters(Clustering({"a": 0, "b": 0, "c": 0}, 1), Clustering({"h1": 0, "h2": 1, "h3": 1}, 2), sc)


class TestAssign:
    def test_single_cluster_is_cost_greedy(self):
        sc = t1()
        vc = cluster_vnffg(sc.vnffg, 1)
        hc = cluster_hosts(sc.host_graph, 1)
        p = assign(vc, hc, {0: 0}, sc, ClusterParams())
        assert p.assignment == {"a": "h1", "b": "h1"}

    def test_cost_ties_go_to_the_least_loaded_outcome(self):
        sc = t1(c1=12.0, c2=12.0, kappa={(h, v): 1.0 for h in ("h1", "h2") for v in "ab"})
        assert place_clustered(sc).placement.assignment == {"a": "h1", "b": "h2"}

    def test_oversized_vnf(self):
        sc = t1()
        big = Vnffg((Vnf("a", {"cpu": 99.0}, 1.0), sc.vnffg.vnfs[1]), sc.vnffg.traffic)
        with pytest.raises(NoHostFits):
            place_clustered(sc.with_changes(vnffg=big))


class TestPlaceClustered:
    def test_one_cluster(self):
        r = place_clustered(t1(), ClusterParams(k=1))
        assert r.placement.assignment == {"a": "h1", "b": "h1"}
        assert (r.total_cost, r.total_delay) == pytest.approx((2.0, 4.0 - 2.0))

    def test_two_clusters(self):
        r = place_clustered(t1(), ClusterParams(k=2))
        assert r.placement.assignment == {"a": "h2", "b": "h1"}
        assert (r.total_cost, r.total_delay) == pytest.approx((3.0, 4.0))

    def test_k_bounds(self):
        with pytest.raises(KTooLarge):
            place_clustered(t1(), ClusterParams(k=3))
        with pytest.raises(KTooLarge):
            ClusterParams(k=0)
        with pytest.raises(ValueError):
            ClusterParams(foreign_cost_factor=0.5)

    def test_single_host(self):
        sc = restrict_hosts(t1(c1=20.0), ["h1"])
        assert place_clustered(sc).placement.hosts_used() == {"h1"}
        with pytest.raises(NoHostFits):
            place_clustered(restrict_hosts(t1(), ["h2"]))

    def test_backs_up_when_greedy_gets_stuck(self):
        # cost-greedy puts a (largest delay) on cheap h1 and b then fits nowhere
        vnfs = (Vnf("a", {"cpu": 6.0}, 2.0), Vnf("b", {"cpu": 10.0}, 1.0))
        hosts = (Host("h1", {"cpu": 10.0}), Host("h2", {"cpu": 6.0}))
        cost = {("h1", "a"): 1.0, ("h1", "b"): 5.0, ("h2", "a"): 5.0, ("h2", "b"): 5.0}
        link = {("h1", "h2"): 1.0, ("h2", "h1"): 1.0}
        sc = validate_scenario(
            Scenario(("cpu",), Vnffg(vnfs), HostGraph(hosts, link, link, cost), (ServiceSpec("s", {"a": 1, "b": 1}, {}, 10, 100),))
        )
        assert place_clustered(sc).placement.assignment == {"a": "h2", "b": "h1"}


class TestMultiDomain:
    def _scenario(self) -> Scenario:
        # foreign h0 is cheaper, local h1/h2 can hold everything between them
        vnfs = (Vnf("a", {"cpu": 4.0}, 1.0), Vnf("b", {"cpu": 4.0}, 1.0))
        hosts = (Host("h0", {"cpu": 8.0}, "far"), Host("h1", {"cpu": 4.0}, "home"), Host("h2", {"cpu": 4.0}, "home"))
        link = {(x, y): 1.0 for x in ("h0", "h1", "h2") for y in ("h0", "h1", "h2") if x != y}
        cost = {(h, v): (1.0 if h == "h0" else 3.0) for h in ("h0", "h1", "h2") for v in "ab"}
        svc = ServiceSpec("s", {"a": 1, "b": 1}, {("a", "b"): 1.0}, 100, 100)
        return validate_scenario(Scenario(("cpu",), Vnffg(vnfs, {("a", "b"): 0.5}), HostGraph(hosts, link, link, cost), (svc,)))

    def test_no_penalty_uses_cheapest_host(self):
        r = place_clustered(self._scenario(), ClusterParams(local_domain="home"))
        assert r.placement.hosts_used() == {"h0"}

    def test_penalty_keeps_placement_local(self):
        r = place_clustered(self._scenario(), ClusterParams(local_domain="home", foreign_cost_factor=1e6))
        assert r.placement.hosts_used() == {"h1", "h2"}

    def test_default_home_is_domain_of_smallest_host_id(self):
        r = place_clustered(self._scenario(), ClusterParams(foreign_cost_factor=1e6))
        assert r.placement.hosts_used() == {"h0"}


@given(st.integers(0, 2**32 - 1), st.integers(1, 12), st.sampled_from(["max", "min"]))
def test_merge_trace_is_monotone_and_yields_k_clusters(seed, n, mode):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(1, n + 1))
    A = rng.integers(0, 5, size=(n, n)).astype(float)  # small range forces ties
    A = np.triu(A, 1) + np.triu(A, 1).T
    ids = [f"n{i:02d}" for i in rng.permutation(n)]
    c = agglomerate(ids, A, k, mode)
    weights = [m.weight for m in c.merge_trace]
    assert len(weights) == n - k
    step = np.diff(weights)
    assert np.all(step <= 0) if mode == "max" else np.all(step >= 0)
    assert sorted(set(c.cluster_of.values())) == list(range(k))
    assert sorted(c.cluster_of) == sorted(ids)


@given(st.integers(0, 2**32 - 1), st.integers(1, 4))
def test_placements_are_feasible_and_deterministic(seed, k):
    sc = gen_random_scenario(np.random.default_rng(seed), n_hosts=(2, 8), n_vnfs=(2, 8), domains=2)
    k = min(k, len(sc.vnffg.vnfs), len(sc.host_graph.hosts))
    params = ClusterParams(k=k, foreign_cost_factor=3.0)
    try:
        r = place_clustered(sc, params)
    except PlacementError:
        return
    assert is_feasible(r.placement, sc).ok
    assert place_clustered(sc, params).placement == r.placement


@given(st.integers(0, 2**32 - 1))
def test_single_cluster_finds_a_placement_whenever_one_exists_on_tiny_inputs(seed):
    sc = gen_random_scenario(np.random.default_rng(seed), n_hosts=(2, 4), n_vnfs=(2, 4))
    exists = brute_force_place(sc, "cost") is not None
    try:
        place_clustered(sc)
        found = True
    except PlacementError:
        found = False
    assert found == exists
