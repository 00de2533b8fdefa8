"""Command-line interface: graph generation, landscape scans, single
optimization runs, and the two batch experiments.

Every command writes plain CSV/JSON files and is deterministic given its
flags and config; exit codes are 0 on success, 1 on runtime failure, 2 on
usage errors.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__, kernels
from ._util import derive_seed, fmt_float
from .bench import (
    ExperimentConfig,
    _write_csv,
    ratio_summary,
    read_config_file,
    run_fixed_budget_experiment,
    run_method,
    validate_method,
    write_experiment_outputs,
)
from .errors import ConfigError, GenerationError, ModqaoaError
from .graphs import connected_caveman, random_partition, read_edge_list, \
    write_edge_list
from .hamiltonian import cost_diagonal
from .localopt import (
    LOCAL_METHODS,
    StopRule,
    nelder_mead,
    model_trust_region,
    pattern_search,
)
from .multistart import MultistartConfig, multistart_minimize
from .reuse import ReuseConfig, reuse_experiment, reuse_summary, \
    write_reuse_outputs
from .simulator import default_bounds, landscape_grid, make_objective

log = logging.getLogger("modqaoa")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="modqaoa",
        description="Exact QAOA simulation and derivative-free optimization "
                    "for two-community modularity clustering.")
    parser.add_argument("--version", action="version",
                        version=f"modqaoa {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a graph and write it as an "
                                     "edge list")
    family = gen.add_mutually_exclusive_group(required=True)
    family.add_argument("--caveman", nargs=2, type=int,
                        metavar=("CLIQUES", "SIZE"),
                        help="ring of CLIQUES cliques of SIZE vertices")
    family.add_argument("--partition", nargs="+", type=int, metavar="SIZE",
                        help="random partition graph with the given "
                             "community sizes")
    gen.add_argument("--p-in", type=float, default=0.75,
                     help="intra-community edge probability")
    gen.add_argument("--p-out", type=float, default=0.1,
                     help="inter-community edge probability")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True, help="output edge-list path")

    land = sub.add_parser("landscape", help="depth-1 objective grid scan")
    land.add_argument("--graph", required=True, help="edge-list path")
    land.add_argument("--res", nargs=2, type=int, default=(200, 200),
                      metavar=("BETA", "GAMMA"), help="grid resolution")
    land.add_argument("--out", required=True, help="output CSV path")

    opt = sub.add_parser("optimize", help="one optimization run")
    opt.add_argument("--graph", required=True, help="edge-list path")
    opt.add_argument("--p", type=int, default=1, help="circuit depth")
    opt.add_argument("--method", default="model-tr")
    opt.add_argument("--budget", type=int, default=1000)
    opt.add_argument("--seed", type=int, default=0)
    opt.add_argument("--shots", type=int, default=0,
                     help="0 = exact expectation, else sampled")
    opt.add_argument("--warm-start", default=None,
                     help="JSON file of starting points to try first")
    opt.add_argument("--out", default=".",
                     help="directory for trace.csv and summary.json")

    bench = sub.add_parser("bench", help="fixed-budget method comparison "
                                         "over the benchmark suite")
    bench.add_argument("--config", default=None,
                       help="JSON config (or a previous manifest.json)")
    bench.add_argument("--out", default="bench-out")
    bench.add_argument("--workers", type=int, default=None,
                       help="worker processes (overrides config)")

    reuse_p = sub.add_parser("reuse", help="warm vs cold starts on "
                                           "edge-perturbed graphs")
    reuse_p.add_argument("--config", default=None,
                         help="JSON config (or a previous manifest.json)")
    reuse_p.add_argument("--out", default="reuse-out")
    reuse_p.add_argument("--workers", type=int, default=None)
    return parser


def cmd_gen(args) -> int:
    try:
        if args.caveman is not None:
            g = connected_caveman(args.caveman[0], args.caveman[1])
        else:
            g = random_partition(tuple(args.partition), args.p_in,
                                 args.p_out, seed=args.seed)
        write_edge_list(g, args.out)
    except GenerationError as exc:
        print(f"generation failed: {exc} (last seed tried: "
              f"{exc.last_seed})", file=sys.stderr)
        return 1
    except (ModqaoaError, ValueError, OSError) as exc:
        print(f"generation failed: {exc}", file=sys.stderr)
        return 1
    print(f"{g.label}: {g.n_vertices} vertices, {g.n_edges} edges "
          f"-> {args.out}")
    return 0


def _load_graph(path: str):
    try:
        return read_edge_list(path)
    except (OSError, ModqaoaError) as exc:
        print(f"cannot load graph {path}: {exc}", file=sys.stderr)
        return None


def cmd_landscape(args) -> int:
    g = _load_graph(args.graph)
    if g is None:
        return 1
    n_beta, n_gamma = args.res
    try:
        values = landscape_grid(cost_diagonal(g), n_beta, n_gamma)
    except (ModqaoaError, ValueError) as exc:
        print(f"landscape scan failed: {exc}", file=sys.stderr)
        return 1
    rows = []
    for i in range(n_beta):
        beta = (i + 0.5) * np.pi / n_beta
        for j in range(n_gamma):
            gamma = (j + 0.5) * 2.0 * np.pi / n_gamma
            rows.append((float(beta), float(gamma), float(values[i, j])))
    _write_csv(Path(args.out), ["beta", "gamma", "f"], rows)
    print(f"{g.label}: {len(rows)} grid points -> {args.out}")
    return 0


def _load_warm_points(path: str | None):
    if path is None:
        return ()
    raw = json.loads(Path(path).read_text())
    if isinstance(raw, dict):
        raw = raw["points"]
    return tuple(np.asarray(p, dtype=np.float64) for p in raw)


def cmd_optimize(args) -> int:
    try:
        validate_method(args.method)
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    g = _load_graph(args.graph)
    if g is None:
        return 1
    try:
        warm = _load_warm_points(args.warm_start)
        diag = cost_diagonal(g)
        f = make_objective(diag, shots=args.shots,
                           seed=derive_seed(args.seed, "shots"))
        bounds = default_bounds(args.p)
        stop = StopRule(max_evals=args.budget)
        owners = None
        if args.method == "nelder-mead" or args.method == "pattern" \
                or args.method == "model-tr":
            runner = {"nelder-mead": nelder_mead, "pattern": pattern_search,
                      "model-tr": model_trust_region}[args.method]
            if warm:
                x0 = bounds.clip(warm[0])
            else:
                x0 = bounds.sample(np.random.default_rng(args.seed))
            result = runner(f, x0, bounds, stop)
            history, status = result.history, result.status
        elif args.method.startswith("multistart:"):
            cfg = MultistartConfig(total_budget=args.budget,
                                   local_stop=stop, seed=args.seed,
                                   initial_points=warm)
            ms = multistart_minimize(f, bounds,
                                     args.method.split(":", 1)[1], cfg)
            history, status = ms.history, "budget-exhausted"
            owners = ms.eval_owners
        else:
            from .localopt import restarting
            result = restarting(args.method.split(":", 1)[1], f, bounds,
                                stop, total_budget=args.budget,
                                seed=args.seed, start_queue=warm)
            history, status = result.history, result.status
    except (ModqaoaError, ValueError, OSError, KeyError) as exc:
        print(f"optimization failed: {exc}", file=sys.stderr)
        return 1

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    p = args.p
    cols = ["eval_index"] + [f"beta_{i+1}" for i in range(p)] \
        + [f"gamma_{i+1}" for i in range(p)] + ["f"]
    rows = [[i + 1, *[float(c) for c in x], float(v)]
            for i, (x, v) in enumerate(zip(history.points, history.values))]
    if owners is not None:
        # multistart trace: which local run produced each evaluation
        # (blank for injected/sampled points)
        cols.append("run_id")
        for row, owner in zip(rows, owners):
            row.append("" if owner is None else owner)
    _write_csv(out / "trace.csv", cols, rows)

    best_x = history.best_point
    summary = {
        "graph": g.label,
        "n_vertices": g.n_vertices,
        "n_edges": g.n_edges,
        "p": p,
        "method": args.method,
        "budget": args.budget,
        "seed": args.seed,
        "shots": args.shots,
        "best_beta": [float(b) for b in best_x[:p]],
        "best_gamma": [float(c) for c in best_x[p:]],
        "best_f": history.best_value,
        "best_modularity": -history.best_value,
        "status": status,
        "evals": len(history),
    }
    (out / "summary.json").write_text(
        json.dumps(summary, indent=2) + "\n")
    print(f"{g.label} p={p} {args.method}: best f "
          f"{fmt_float(history.best_value)} (modularity "
          f"{fmt_float(-history.best_value)}) after {len(history)} "
          f"evaluations [{status}] -> {out}")
    return 0


def _load_config(path, config_cls, workers):
    if path is None:
        cfg = config_cls()
    else:
        cfg = read_config_file(path, config_cls)
    if workers is not None:
        if workers < 1:
            raise ConfigError("workers must be >= 1")
        cfg = dataclasses.replace(cfg, workers=workers)
    return cfg


def cmd_bench(args) -> int:
    try:
        config = _load_config(args.config, ExperimentConfig, args.workers)
    except (ConfigError, OSError, json.JSONDecodeError) as exc:
        print(f"bad config: {exc}", file=sys.stderr)
        return 2
    try:
        result = run_fixed_budget_experiment(config)
    except (ModqaoaError, RuntimeError) as exc:
        print(f"experiment failed: {exc}", file=sys.stderr)
        return 1
    paths = write_experiment_outputs(result, args.out)
    for key, err in sorted(result.failures.items()):
        log.warning("cell %s failed: %s", key, err)
    if result.failures:
        print(f"{len(result.failures)} of {len(result.cells)} cells "
              "failed; see log", file=sys.stderr)
    for p, method, n, q25, med, q75 in ratio_summary(result):
        print(f"p={p} {method}: median ratio {med:.4f} "
              f"[{q25:.4f}, {q75:.4f}] over {n} runs")
    print("wrote " + ", ".join(str(pa) for pa in paths))
    return 0


def cmd_reuse(args) -> int:
    try:
        config = _load_config(args.config, ReuseConfig, args.workers)
    except (ConfigError, OSError, json.JSONDecodeError) as exc:
        print(f"bad config: {exc}", file=sys.stderr)
        return 2
    try:
        result = reuse_experiment(config)
    except (ModqaoaError, RuntimeError) as exc:
        print(f"experiment failed: {exc}", file=sys.stderr)
        return 1
    paths = write_reuse_outputs(result, args.out)
    for reason in result.skipped:
        log.warning("%s", reason)
    for mode, method, warm, n, n_solved, med_evals, med_ratio in \
            reuse_summary(result):
        arm = "warm" if warm else "cold"
        ratio_txt = "n/a" if med_ratio is None else f"{med_ratio:.4f}"
        print(f"{mode} {method} [{arm}]: solved {n_solved}/{n}, median "
              f"evals-to-target {med_evals:g}, median ratio {ratio_txt}")
    print("wrote " + ", ".join(str(pa) for pa in paths))
    return 0


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    args = _build_parser().parse_args(argv)
    handler = {
        "gen": cmd_gen,
        "landscape": cmd_landscape,
        "optimize": cmd_optimize,
        "bench": cmd_bench,
        "reuse": cmd_reuse,
    }[args.command]
    return handler(args)


if __name__ == "__main__":
    sys.exit(main())
