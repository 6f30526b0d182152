"""Command-line experiment runner.

Subcommands::

    generate   write a fat-tree scenario (and optionally its physical infra)
    run        place one scenario with one algorithm and report the result
    sweep      cluster counts k_min..k_max plus GA(cost) and GA(delay), as CSV
    validate   check a scenario file, or a placement against it

Exit status: 0 success / feasible, 1 infeasible, 2 input error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from pathlib import Path
from typing import Any, Callable

from .cluster import ClusterParams, place_clustered
from .errors import InfeasiblePlacement, KTooLarge, PlacementError
from .evaluator import SearchSpaceTooLarge, brute_force_place, is_feasible, summarize
from .ga import GaConfig, evolve
from .greedy import place_min_distance, place_min_latency
from .infrastructure import save_infra
from .model import Placement, Scenario, ScenarioError, dumps_scenario, load_scenario
from .scenario_gen import InvalidK, build_scenario, gen_fat_tree, gen_services

EXIT_OK, EXIT_INFEASIBLE, EXIT_INPUT = 0, 1, 2

ALGORITHMS = ("min-distance", "min-latency", "cluster", "ga", "brute-force")
SWEEP_COLUMNS = ("label", "param", "total_cost", "total_delay", "runtime_ms", "feasible")


class InputError(Exception):
    """Bad file or arguments; maps to exit status 2."""


# --------------------------------------------------------------------------
# argument parsing


def _global_flags(defaults: bool) -> argparse.ArgumentParser:
    # accepted before or after the subcommand; only the top level sets defaults
    p = argparse.ArgumentParser(add_help=False)
    kw: dict[str, Any] = {} if defaults else {"default": argparse.SUPPRESS}
    p.add_argument("--seed", type=int, help="seed for every randomized step (default 0)", **kw)
    p.add_argument("--output", type=Path, help="write the structured result here instead of stdout", **kw)
    p.add_argument("--format", choices=("csv", "json-lines"), help="structured output format (default csv)", **kw)
    return p


def _algo_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("cluster")
    g.add_argument("--clusters", type=int, default=1, help="cluster count k")
    g.add_argument("--interdomain-weight", type=float, default=10.0)
    g.add_argument("--foreign-cost-factor", type=float, default=1.0)
    g.add_argument("--local-domain", default=None, help="home domain (default: domain of the smallest host id)")
    g = p.add_argument_group("genetic algorithm")
    g.add_argument("--ga-pool", type=int, default=20)
    g.add_argument("--ga-generations", type=int, default=200)
    g.add_argument("--ga-crossover", type=float, default=0.8)
    g.add_argument("--ga-mutation", type=float, default=0.05)
    g.add_argument("--ga-objective", choices=("cost", "delay"), default="cost")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vnforch", description=__doc__.split("\n\n")[0], parents=[_global_flags(True)])
    parser.set_defaults(seed=0, output=None, format="csv")
    sub = parser.add_subparsers(dest="command", required=True)
    common = _global_flags(False)

    p = sub.add_parser("generate", parents=[common], help="write a fat-tree scenario")
    p.add_argument("--fat-tree-k", type=int, default=4)
    p.add_argument("--services", type=int, default=3)
    p.add_argument("--vnf-min", type=int, default=5)
    p.add_argument("--vnf-max", type=int, default=10)
    p.add_argument("--level", type=int, choices=(1, 2), default=1, help="host-graph abstraction level")
    p.add_argument("--infra-output", type=Path, default=None, help="also write the physical infrastructure")

    p = sub.add_parser("run", parents=[common], help="place a scenario with one algorithm")
    p.add_argument("scenario", type=Path)
    p.add_argument("--algo", choices=ALGORITHMS, default="cluster")
    p.add_argument("--objective", choices=("cost", "delay"), default="cost", help="brute-force objective")
    p.add_argument("--no-timing", action="store_true", help="leave runtime_ms out of the structured result")
    _algo_flags(p)

    p = sub.add_parser("sweep", parents=[common], help="cluster-count sweep plus GA benchmarks, as CSV")
    p.add_argument("scenario", type=Path)
    p.add_argument("--k-min", type=int, default=1)
    p.add_argument("--k-max", type=int, default=None, help="default: min(7, |V|, |H|)")
    p.add_argument("--no-ga", action="store_true", help="omit the two GA rows")
    p.add_argument("--no-timing", action="store_true", help="leave runtime_ms empty so output is reproducible")
    _algo_flags(p)

    p = sub.add_parser("validate", parents=[common], help="check a scenario, or a placement against it")
    p.add_argument("scenario", type=Path)
    p.add_argument("--placement", type=Path, default=None, help='JSON file {"assignment": {vnf: host}}')
    return parser


# --------------------------------------------------------------------------
# helpers


def _load(path: Path) -> Scenario:
    try:
        return load_scenario(path)
    except OSError as e:
        raise InputError(f"cannot read {path}: {e.strerror or e}") from e
    except ScenarioError as e:
        raise InputError(f"invalid scenario {path}: {e}") from e


def _cluster_params(args: argparse.Namespace, k: int | None = None) -> ClusterParams:
    try:
        return ClusterParams(
            k=args.clusters if k is None else k,
            interdomain_weight=args.interdomain_weight,
            foreign_cost_factor=args.foreign_cost_factor,
            local_domain=args.local_domain,
        )
    except ValueError as e:
        raise InputError(str(e)) from e


def _ga_config(args: argparse.Namespace, objective: str | None = None) -> GaConfig:
    try:
        return GaConfig(
            pool_size=args.ga_pool,
            generations=args.ga_generations,
            crossover_rate=args.ga_crossover,
            mutation_rate=args.ga_mutation,
            objective=objective or args.ga_objective,
            rng_seed=args.seed,
        )
    except ValueError as e:
        raise InputError(str(e)) from e


def _solver(args: argparse.Namespace, sc: Scenario) -> Callable[[], Any]:
    algo = args.algo
    if algo == "min-distance":
        return lambda: place_min_distance(sc)
    if algo == "min-latency":
        return lambda: place_min_latency(sc)
    if algo == "cluster":
        params = _cluster_params(args)
        return lambda: place_clustered(sc, params)
    if algo == "ga":
        cfg = _ga_config(args)
        return lambda: evolve(sc, cfg).result

    def brute():
        p = brute_force_place(sc, args.objective)
        if p is None:
            raise PlacementError("no assignment satisfies every constraint")
        return summarize(p, sc, "brute-force", objective=args.objective)

    return brute


def _fmt(x: float | None) -> str:
    return "" if x is None else f"{x:.6f}"


def _emit(rows: list[dict[str, Any]], fmt: str, out: Path | None, columns: tuple[str, ...] | None = None) -> None:
    buf = io.StringIO()
    if fmt == "csv":
        cols = columns or (tuple(rows[0]) if rows else ())
        w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n", extrasaction="ignore")
        w.writeheader()
        for r in rows:
            w.writerow({c: r.get(c, "") for c in cols})
    else:
        for r in rows:
            buf.write(json.dumps(r, sort_keys=False) + "\n")
    if out is None:
        sys.stdout.write(buf.getvalue())
    else:
        out.write_text(buf.getvalue())


# --------------------------------------------------------------------------
# subcommands


def cmd_generate(args: argparse.Namespace) -> int:
    try:
        infra = gen_fat_tree(args.fat_tree_k, rng_seed=args.seed)
        vnffg, services = gen_services(args.services, (args.vnf_min, args.vnf_max), rng_seed=args.seed + 1)
        sc = build_scenario(infra, vnffg, services, level=args.level)
    except (InvalidK, ValueError) as e:
        raise InputError(str(e)) from e
    if args.infra_output is not None:
        save_infra(infra, args.infra_output)
    text = dumps_scenario(sc)
    if args.output is None:
        sys.stdout.write(text)
    else:
        args.output.write_text(text)
    return EXIT_OK


def report_text(res, elapsed_ms: float) -> str:
    lines = [f"algorithm: {res.algorithm}", "placement:"]
    lines += [f"  {v} -> {h}" for v, h in sorted(res.placement.assignment.items())]
    lines.append("service delay (ms):")
    lines += [f"  {s}: {d:.3f}" for s, d in res.service_delays.items()]
    lines.append(f"total cost: {res.total_cost:.3f}")
    lines.append(f"total delay: {res.total_delay:.3f} ms")
    lines.append(f"max utilization: {res.max_utilization:.3f}")
    lines.append("feasible: yes")
    lines.append(f"wall time: {elapsed_ms:.1f} ms")
    return "\n".join(lines) + "\n"


RUN_COLUMNS = ("algorithm", "total_cost", "total_delay", "max_utilization", "runtime_ms", "feasible", "placement", "error")


def _run_record(args: argparse.Namespace, res, elapsed: float, error: str = "", placement=None) -> dict[str, Any]:
    """Structured result of ``run``; an infeasible outcome keeps the
    rejected placement (if any) and the reason."""
    if res is not None:
        placement = res.placement
    rec: dict[str, Any] = {
        "algorithm": res.algorithm if res is not None else args.algo,
        "total_cost": res.total_cost if res is not None else None,
        "total_delay": res.total_delay if res is not None else None,
        "max_utilization": res.max_utilization if res is not None else None,
        "runtime_ms": None if args.no_timing else round(elapsed, 3),
        "feasible": res is not None,
        "placement": dict(sorted(placement.assignment.items())) if placement is not None else None,
        "error": error,
    }
    if args.format == "json-lines" and res is not None:
        rec = res.to_dict() | {"runtime_ms": rec["runtime_ms"], "feasible": True, "error": ""}
    return rec


def _run_csv_row(rec: dict[str, Any]) -> dict[str, Any]:
    return {
        "algorithm": rec["algorithm"],
        "total_cost": _fmt(rec["total_cost"]),
        "total_delay": _fmt(rec["total_delay"]),
        "max_utilization": _fmt(rec["max_utilization"]),
        "runtime_ms": "" if rec["runtime_ms"] is None else f"{rec['runtime_ms']:.3f}",
        "feasible": "true" if rec["feasible"] else "false",
        "placement": ";".join(f"{v}={h}" for v, h in (rec["placement"] or {}).items()),
        "error": rec["error"],
    }


def cmd_run(args: argparse.Namespace) -> int:
    sc = _load(args.scenario)
    solve = _solver(args, sc)
    t0 = time.perf_counter()
    res, error, rejected = None, "", None
    try:
        res = solve()
    except InfeasiblePlacement as e:
        error, rejected = str(e), e.placement
        sys.stdout.write(f"algorithm: {args.algo}\nfeasible: no ({e})\n")
        sys.stdout.write(json.dumps(e.report.to_dict(), indent=2) + "\n")
    except PlacementError as e:
        error = str(e)
        sys.stdout.write(f"algorithm: {args.algo}\nfeasible: no ({e})\n")
    except (KTooLarge, SearchSpaceTooLarge) as e:
        raise InputError(str(e)) from e
    elapsed = (time.perf_counter() - t0) * 1e3
    if res is not None:
        sys.stdout.write(report_text(res, elapsed))
    if args.output is not None:
        rec = _run_record(args, res, elapsed, error, rejected)
        if args.format == "csv":
            _emit([_run_csv_row(rec)], "csv", args.output, RUN_COLUMNS)
        else:
            _emit([rec], "json-lines", args.output)
    return EXIT_OK if res is not None else EXIT_INFEASIBLE


def sweep_rows(sc: Scenario, args: argparse.Namespace) -> list[dict[str, Any]]:
    """One row per cluster count, then GA(cost) and GA(delay); rows ordered by
    (label, param)."""
    V, H = len(sc.vnffg.vnfs), len(sc.host_graph.hosts)
    k_max = min(7, V, H) if args.k_max is None else args.k_max
    if not 1 <= args.k_min <= k_max <= min(V, H):
        raise InputError(f"k range {args.k_min}..{k_max} outside [1, {min(V, H)}]")
    jobs: list[tuple[str, Any, Callable[[], Any]]] = []
    for k in range(args.k_min, k_max + 1):
        params = _cluster_params(args, k)
        jobs.append(("cluster", k, lambda p=params: place_clustered(sc, p)))
    if not args.no_ga:
        for obj in ("cost", "delay"):
            cfg = _ga_config(args, obj)
            jobs.append(("ga", obj, lambda c=cfg: evolve(sc, c).result))
    rows = []
    for label, param, solve in jobs:
        t0 = time.perf_counter()
        try:
            res = solve()
        except PlacementError:
            res = None
        ms = (time.perf_counter() - t0) * 1e3
        rows.append(
            {
                "label": label,
                "param": param,
                "total_cost": res.total_cost if res else None,
                "total_delay": res.total_delay if res else None,
                "runtime_ms": None if args.no_timing else ms,
                "feasible": res is not None,
            }
        )
    rows.sort(key=lambda r: (r["label"], str(r["param"]) if r["label"] == "ga" else f"{r['param']:06d}"))
    return rows


def cmd_sweep(args: argparse.Namespace) -> int:
    sc = _load(args.scenario)
    rows = sweep_rows(sc, args)
    if args.format == "csv":
        out = [
            {
                "label": r["label"],
                "param": r["param"],
                "total_cost": _fmt(r["total_cost"]),
                "total_delay": _fmt(r["total_delay"]),
                "runtime_ms": "" if r["runtime_ms"] is None else f"{r['runtime_ms']:.3f}",
                "feasible": "true" if r["feasible"] else "false",
            }
            for r in rows
        ]
        _emit(out, "csv", args.output, SWEEP_COLUMNS)
    else:
        _emit(rows, "json-lines", args.output)
    return EXIT_OK if all(r["feasible"] for r in rows) else EXIT_INFEASIBLE


def cmd_validate(args: argparse.Namespace) -> int:
    sc = _load(args.scenario)
    if args.placement is None:
        sys.stdout.write(
            f"valid: {len(sc.vnffg.vnfs)} VNFs, {len(sc.host_graph.hosts)} hosts, {len(sc.services)} services\n"
        )
        return EXIT_OK
    try:
        doc = json.loads(args.placement.read_text())
        p = Placement({str(v): str(h) for v, h in doc["assignment"].items()})
    except OSError as e:
        raise InputError(f"cannot read {args.placement}: {e.strerror or e}") from e
    except (ValueError, KeyError, TypeError, AttributeError) as e:
        raise InputError(f"malformed placement file {args.placement}: {e}") from e
    unknown = sorted(v for v in p.assignment if v not in sc.vnffg.ids) + sorted(
        h for h in p.assignment.values() if h not in sc.host_graph.ids
    )
    if unknown:
        raise InputError(f"placement names unknown ids: {unknown}")
    try:
        report = is_feasible(p, sc)
    except ValueError as e:
        raise InputError(str(e)) from e
    text = json.dumps(report.to_dict(), indent=2) + "\n"
    if args.output is None:
        sys.stdout.write(text)
    else:
        args.output.write_text(text)
    return EXIT_OK if report.ok else EXIT_INFEASIBLE


COMMANDS = {"generate": cmd_generate, "run": cmd_run, "sweep": cmd_sweep, "validate": cmd_validate}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:  # argparse exits 2 on bad usage, 0 on --help
        return int(e.code or 0)
    try:
        return COMMANDS[args.command](args)
    except InputError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
