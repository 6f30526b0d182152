"""End-to-end acceptance checks.

Each test prints one line ``[acceptance] <n> <name>: PASS|FAIL (<detail>)``
before asserting, so the verdicts are visible even under ``pytest -q``.
"""

import os
import subprocess
import sys
import time

import numpy as np
import pytest

from builders import random_infra, restrict_hosts
from vnforch.cli import main
from vnforch.cluster import ClusterParams, agglomerate, cluster_hosts, cluster_vnffg, local_domain, place_clustered
from vnforch.errors import PlacementError
from vnforch.evaluator import brute_force_place, is_feasible, objective_value
from vnforch.ga import GaConfig, evolve
from vnforch.greedy import place_min_distance, place_min_latency
from vnforch.infrastructure import abstract_level1, abstract_level2, abstract_level3
from vnforch.model import save_scenario
from vnforch.scenario_gen import gen_random_scenario, reference_scenario

pytestmark = pytest.mark.acceptance


@pytest.fixture
def verdict(capsys):
    def report(number: int, name: str, ok: bool, detail: str) -> None:
        with capsys.disabled():
            print(f"\n[acceptance] {number} {name}: {'PASS' if ok else 'FAIL'} ({detail})")

    return report


def test_every_returned_placement_is_feasible(verdict):
    t0 = time.perf_counter()
    bad, checked = [], 0
    for i in range(200):
        sc = gen_random_scenario(np.random.default_rng([1, i]), n_hosts=(4, 16), n_vnfs=(3, 12))
        V, H = len(sc.vnffg.vnfs), len(sc.host_graph.hosts)
        runs = [(f"cluster k={k}", lambda k=k: place_clustered(sc, ClusterParams(k=k))) for k in range(1, min(V, H) + 1)]
        runs += [("min-distance", lambda: place_min_distance(sc)), ("min-latency", lambda: place_min_latency(sc))]
        runs += [
            (f"ga {o}", lambda o=o: evolve(sc, GaConfig(objective=o, generations=50, rng_seed=i)).result)
            for o in ("cost", "delay")
        ]
        for name, solve in runs:
            try:
                r = solve()
            except PlacementError:
                continue
            checked += 1
            if not is_feasible(r.placement, sc).ok:
                bad.append((i, name))
    elapsed = time.perf_counter() - t0
    ok = not bad and elapsed < 60
    verdict(1, "universal feasibility", ok, f"{len(bad)} infeasible of {checked} placements, {elapsed:.1f} s of 60 s")
    assert not bad
    assert elapsed < 60


def _oracle_cases(n: int = 100):
    cases, seed = [], 0
    while len(cases) < n:
        rng = np.random.default_rng(1000 + seed)
        seed += 1
        H = int(rng.integers(2, 9))
        max_v = int(np.floor(np.log(4096) / np.log(H) + 1e-9))
        V = 2 if len(cases) % 4 == 0 else int(rng.integers(2, min(max_v, 8) + 1))
        sc = gen_random_scenario(rng, n_hosts=H, n_vnfs=V, n_services=(1, 2))
        assert H**V <= 4096
        if brute_force_place(sc, "cost") is not None:
            cases.append(sc)
    return cases


def test_small_instances_agree_with_exhaustive_search(verdict):
    cases = _oracle_cases()
    hits = {"cost": 0, "delay": 0}
    latency_exact = pairs = 0
    for i, sc in enumerate(cases):
        for objective in hits:
            opt = objective_value(brute_force_place(sc, objective), sc, objective)
            r = evolve(sc, GaConfig(pool_size=20, generations=200, objective=objective, rng_seed=i))
            got = objective_value(r.result.placement, sc, objective)
            hits[objective] += got <= opt + 1e-9 * max(1.0, opt)
        if len(sc.vnffg.vnfs) == 2:
            pairs += 1
            opt = objective_value(brute_force_place(sc, "delay"), sc, "delay")
            try:
                latency_exact += abs(place_min_latency(sc).total_delay - opt) <= 1e-9 * max(1.0, opt)
            except PlacementError:
                pass
    ok = latency_exact == pairs and min(hits.values()) >= 95
    detail = f"min-latency exact on {latency_exact}/{pairs} two-VNF cases, GA optimal cost {hits['cost']}/100, delay {hits['delay']}/100"
    verdict(2, "oracle agreement", ok, detail)
    assert latency_exact == pairs
    assert hits["cost"] >= 95 and hits["delay"] >= 95


def test_reference_sweep_shows_cost_delay_trade_offs(verdict, tmp_path):
    scenario = tmp_path / "reference.json"
    save_scenario(reference_scenario(0), scenario)
    out = tmp_path / "sweep.csv"
    t0 = time.perf_counter()
    code = main(["sweep", str(scenario), "--k-min", "1", "--k-max", "7", "--no-timing", "--output", str(out)])
    elapsed = time.perf_counter() - t0
    lines = out.read_text().splitlines()[1:]
    rows = [dict(zip(("label", "param", "cost", "delay"), line.split(",")[:4])) for line in lines]
    cluster = [(float(r["cost"]), float(r["delay"])) for r in rows if r["label"] == "cluster"]
    ga = {r["param"]: (float(r["cost"]), float(r["delay"])) for r in rows if r["label"] == "ga"}
    distinct = len(set(cluster))
    best_delay = min(d for _, d in cluster)
    min_cost = min(c for c, _ in cluster)
    delay_ok = ga["delay"][1] <= 1.1 * best_delay
    cost_ok = ga["cost"][0] <= min_cost
    ok = code == 0 and len(rows) == 9 and distinct >= 3 and delay_ok and cost_ok and elapsed < 120
    detail = (
        f"{distinct} distinct cluster points; GA(delay) {ga['delay'][1]:.2f} vs 1.1 x {best_delay:.2f}; "
        f"GA(cost) {ga['cost'][0]:.2f} vs {min_cost:.2f}; {elapsed:.1f} s"
    )
    verdict(3, "trade-off sweep shape", ok, detail)
    assert code == 0 and len(rows) == 9
    assert distinct >= 3
    assert delay_ok and cost_ok
    assert elapsed < 120


def test_cluster_runtime_grows_polynomially(verdict):
    sizes, times = [], []
    for k in (4, 6, 8):
        sc = reference_scenario(0, k=k)
        best = np.inf
        for _ in range(5):
            t0 = time.perf_counter()
            place_clustered(sc, ClusterParams(k=4))
            best = min(best, time.perf_counter() - t0)
        sizes.append(len(sc.host_graph.hosts))
        times.append(best)
    slope = float(np.polyfit(np.log(sizes), np.log(times), 1)[0])
    ok = sizes == [16, 54, 128] and slope <= 3.2 and times[0] < 1
    detail = f"hosts {sizes}, seconds {[round(t, 4) for t in times]}, log-log slope {slope:.2f}"
    verdict(4, "polynomial runtime", ok, detail)
    assert sizes == [16, 54, 128]
    assert slope <= 3.2
    assert times[0] < 1


def _trace_ok(c, n: int, k: int, mode: str) -> bool:
    w = np.array([m.weight for m in c.merge_trace])
    monotone = bool(np.all(np.diff(w) <= 0)) if mode == "max" else bool(np.all(np.diff(w) >= 0))
    return len(w) == n - k and monotone and c.k == k and set(c.cluster_of.values()) == set(range(k))


def test_merge_traces_are_monotone_and_stop_at_k(verdict):
    failures = 0
    for i in range(100):
        rng = np.random.default_rng([5, i])
        n = int(rng.integers(1, 25))
        k = int(rng.integers(1, n + 1))
        A = rng.integers(0, 6, size=(n, n)).astype(float)
        A = np.triu(A, 1) + np.triu(A, 1).T
        ids = [f"n{j:02d}" for j in rng.permutation(n)]
        mode = ("max", "min")[i % 2]
        failures += not _trace_ok(agglomerate(ids, A, k, mode), n, k, mode)
        # the same invariants through the scenario-level entry points
        sc = gen_random_scenario(rng, n_hosts=(1, 10), n_vnfs=(1, 10), domains=2)
        V, H = len(sc.vnffg.vnfs), len(sc.host_graph.hosts)
        kv, kh = int(rng.integers(1, V + 1)), int(rng.integers(1, H + 1))
        failures += not _trace_ok(cluster_vnffg(sc.vnffg, kv), V, kv, "max")
        failures += not _trace_ok(cluster_hosts(sc.host_graph, kh, ClusterParams()), H, kh, "min")
    verdict(5, "clustering correctness", failures == 0, f"{failures} bad traces out of 300")
    assert failures == 0


def test_abstraction_levels_agree(verdict):
    failures = []
    for i in range(50):
        infra = random_infra(np.random.default_rng([6, i]))
        l1, l2, l3 = abstract_level1(infra, {}), abstract_level2(infra, {}), abstract_level3(infra)
        for r in ("cpu", "mem"):
            total = sum(m.capacity[r] for m in infra.machines)
            if not (sum(h.capacity[r] for h in l1.hosts) == sum(h.capacity[r] for h in l2.hosts) == l3.capacity[r] == total):
                failures.append((i, "capacity", r))
        pop_of = {m.id: m.pop for m in infra.machines}
        for a in l2.ids:
            for b in l2.ids:
                if a != b:
                    pairs = [l1.delay(x, y) for x in l1.ids for y in l1.ids if pop_of[x] == a and pop_of[y] == b]
                    if l2.delay(a, b) != min(pairs):
                        failures.append((i, "delay", a, b))
    verdict(6, "abstraction consistency", not failures, f"{len(failures)} mismatches over 50 infrastructures")
    assert not failures


def test_heavy_foreign_penalty_keeps_placements_local(verdict):
    used_foreign, placed, errors, scenarios, seed = [], 0, 0, 0, 0
    while scenarios < 50:
        sc = gen_random_scenario(np.random.default_rng([7, seed]), n_hosts=(4, 10), n_vnfs=(3, 7), domains=2)
        seed += 1
        home = local_domain(sc, ClusterParams())
        local = [h.id for h in sc.host_graph.hosts if h.domain == home]
        if brute_force_place(restrict_hosts(sc, local), "cost") is None:
            continue
        scenarios += 1
        for k in range(1, min(len(sc.vnffg.vnfs), len(sc.host_graph.hosts)) + 1):
            try:
                r = place_clustered(sc, ClusterParams(k=k, foreign_cost_factor=1e6))
            except PlacementError:
                errors += 1
                continue
            placed += 1
            if {sc.host(h).domain for h in r.placement.hosts_used()} - {home}:
                used_foreign.append((seed - 1, k))
    ok = not used_foreign and errors == 0
    detail = f"{placed} placements over 50 scenarios, {len(used_foreign)} touch a foreign host, {errors} failed"
    verdict(7, "multi-domain locality", ok, detail)
    assert not used_foreign
    assert errors == 0


def _cli(args, hash_seed: str) -> int:
    env = dict(os.environ, PYTHONHASHSEED=hash_seed)
    return subprocess.run([sys.executable, "-m", "vnforch", *args], env=env, capture_output=True).returncode


def test_cli_output_is_byte_identical_across_runs(verdict, tmp_path):
    small = tmp_path / "small.json"
    save_scenario(gen_random_scenario(np.random.default_rng(9), n_hosts=5, n_vnfs=6), small)
    reference = tmp_path / "reference.json"
    assert _cli(["generate", "--output", str(reference)], "0") == 0
    jobs = {f"run {a}": ["run", str(small), "--algo", a, "--no-timing"] for a in
            ("min-distance", "min-latency", "cluster", "ga", "brute-force")}
    jobs["run cluster k=3"] = ["run", str(small), "--algo", "cluster", "--clusters", "3", "--no-timing"]
    jobs["sweep"] = ["sweep", str(reference), "--no-timing"]
    jobs["generate"] = ["generate", "--seed", "4"]
    differing = []
    for name, args in jobs.items():
        outputs = []
        for run, hash_seed in enumerate(("0", "1", "12345")):
            out = tmp_path / f"{name.replace(' ', '_')}_{run}.csv"
            code = _cli([*args, "--seed", "3", "--output", str(out)], hash_seed)
            outputs.append((code, out.read_bytes() if out.exists() else None))
        if len(set(outputs)) != 1 or outputs[0][0] != 0 or outputs[0][1] is None:
            differing.append(name)
    verdict(8, "determinism", not differing, f"{len(jobs) - len(differing)}/{len(jobs)} commands identical over 3 runs")
    assert not differing
