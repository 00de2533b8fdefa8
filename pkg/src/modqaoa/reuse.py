"""Reuse of known optima when a benchmark graph loses an edge.

For each suite graph the engine first maps the optimizer landscape of the
unmodified graph exhaustively, then perturbs the graph by deleting edges
(random draws, the spectrally most disruptive edge, or both) and re-solves
each perturbed instance twice per method and seed: a warm arm that starts
from the stored optima of the base graph, and a cold arm that starts from
scratch.  Both arms share seeds and budget, so any difference in
evals-to-target is attributable to the reused starts.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from ._util import derive_seed, fmt_float
from .bench import (
    _map_cells,
    _write_csv,
    benchmark_suite,
    solved_after,
    validate_method,
    write_manifest,
)
from .errors import ConfigError
from .graphs import Graph, remove_edge, worst_case_edge
from .localopt import StopRule, restarting
from .multistart import harvest_local_optima
from .simulator import default_bounds, make_objective
from .hamiltonian import cost_diagonal

__all__ = [
    "ReuseConfig",
    "ReuseRecord",
    "ReuseResult",
    "exhaustive_optima",
    "reuse_experiment",
    "reuse_summary",
    "write_reuse_outputs",
]

log = logging.getLogger(__name__)

PERTURBATIONS = ("random", "worst-case", "both")


@dataclass(frozen=True)
class ReuseConfig:
    p_steps: int = 1
    perturbation: str = "both"
    n_random_edges: int = 5
    methods: tuple = ("restarting:model-tr", "multistart:model-tr")
    budget: int = 1000
    n_seeds: int = 10
    tau: float = 0.01
    exhaustive_budget: int = 100_000
    seed: int = 0
    shots: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.p_steps < 1:
            raise ConfigError("p_steps must be >= 1")
        if self.perturbation not in PERTURBATIONS:
            raise ConfigError(f"perturbation must be one of {PERTURBATIONS}")
        if self.n_random_edges < 1:
            raise ConfigError("n_random_edges must be >= 1")
        if not self.methods:
            raise ConfigError("methods must be non-empty")
        for m in self.methods:
            validate_method(m)
        if self.budget < 1 or self.exhaustive_budget < 1:
            raise ConfigError("budgets must be >= 1")
        if self.n_seeds < 1:
            raise ConfigError("n_seeds must be >= 1")
        if not 0.0 < self.tau < 1.0:
            raise ConfigError("tau must be in (0, 1)")
        if self.shots < 0:
            raise ConfigError("shots must be >= 0")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    @classmethod
    def from_dict(cls, raw: dict) -> "ReuseConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(raw) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        kwargs = dict(raw)
        if "methods" in kwargs:
            kwargs["methods"] = tuple(kwargs["methods"])
        return cls(**kwargs)

    def to_dict(self) -> dict:
        out = {f.name: getattr(self, f.name) for f in fields(self)}
        out["methods"] = list(self.methods)
        return out


@dataclass(frozen=True)
class ReuseRecord:
    problem: str
    p_steps: int
    edge: tuple
    mode: str            # which perturbation produced the edge
    method: str
    seed_index: int
    warm_start: bool
    evals_to_target: int | None
    final_value: float
    final_ratio: float | None


@dataclass
class ReuseResult:
    config: ReuseConfig
    optima: dict        # base graph label -> ((point, value), ...)
    records: list
    best_known: dict    # (label, mode, edge) -> lowest value any arm saw
    skipped: list       # human-readable reasons for skipped instances


def exhaustive_optima(graph: Graph, p_steps: int, budget: int = 100_000,
                      seed: int = 0, dedup_radius: float | None = None,
                      shots: int = 0):
    """Distinct local optima of a graph's landscape, best first.

    Restarts the model-based solver until the budget is spent and merges the
    converged minimizers, deduplicating at the solver's own position
    tolerance by default.
    """
    stop = StopRule()
    if dedup_radius is None:
        dedup_radius = stop.xtol_abs
    diag = cost_diagonal(graph)
    f = make_objective(diag, shots=shots, seed=derive_seed(seed, "shots"))
    result = restarting("model-tr", f, default_bounds(p_steps), stop,
                        total_budget=budget, seed=seed)
    return harvest_local_optima(result, dedup_radius)


def _perturbed_edges(g: Graph, config: ReuseConfig) -> list:
    """(mode, edge) deletions to run, in a deterministic order.

    Random draws are seeded per graph; the two modes are independent
    experiments, so an edge may legitimately appear under both tags.
    """
    out: list = []
    if config.perturbation in ("random", "both"):
        rng = np.random.default_rng(
            derive_seed(config.seed, "edges", g.label))
        k = min(config.n_random_edges, g.n_edges)
        for i in rng.choice(g.n_edges, size=k, replace=False):
            out.append(("random", g.edges[int(i)]))
    if config.perturbation in ("worst-case", "both"):
        out.append(("worst-case", worst_case_edge(g)))
    return out


def _exhaustive_cell(spec: dict) -> dict:
    try:
        g = Graph(n_vertices=spec["n_vertices"], edges=spec["edges"],
                  label=spec["label"])
        optima = exhaustive_optima(g, spec["p"], budget=spec["budget"],
                                   seed=spec["cell_seed"],
                                   shots=spec["shots"])
        return {"key": spec["key"],
                "values": [(list(map(float, pt)), float(v))
                           for pt, v in optima],
                "error": None}
    except Exception as exc:  # noqa: BLE001 - isolate per-problem failures
        return {"key": spec["key"], "values": None,
                "error": f"{type(exc).__name__}: {exc}"}


def reuse_experiment(config: ReuseConfig, graphs=None,
                     optima: dict | None = None) -> ReuseResult:
    """Run the warm-vs-cold edge-deletion comparison over the suite.

    ``optima`` may supply precomputed base-graph optima keyed by graph
    label; missing entries are computed exhaustively.  Instances whose
    perturbed graph has no edges are skipped and recorded in the result.
    """
    if graphs is None:
        graphs = benchmark_suite()
    optima = dict(optima or {})
    skipped: list = []

    # phase 1: exhaustive mapping of each base graph's optima
    todo = [g for g in graphs if g.label not in optima]
    specs = [{
        "key": g.label,
        "label": g.label,
        "n_vertices": g.n_vertices,
        "edges": g.edges,
        "p": config.p_steps,
        "budget": config.exhaustive_budget,
        "shots": config.shots,
        "cell_seed": derive_seed(config.seed, "exhaustive", g.label,
                                 config.p_steps),
    } for g in todo]
    if specs:
        for row in _map_cells_exhaustive(specs, config.workers):
            if row["error"] is not None:
                raise RuntimeError(
                    f"exhaustive mapping of {row['key']} failed: "
                    f"{row['error']}")
            optima[row["key"]] = tuple(
                (np.asarray(pt, dtype=np.float64), v)
                for pt, v in row["values"])

    # phase 2: warm and cold runs on every perturbed instance
    specs = []
    meta = []
    for g in graphs:
        warm_points = tuple(pt for pt, _ in optima[g.label])
        for mode, edge in _perturbed_edges(g, config):
            perturbed = remove_edge(g, edge)
            if perturbed.n_edges == 0:
                reason = (f"{g.label}: deleting edge {edge} leaves no "
                          "edges; modularity undefined, instance skipped")
                log.warning(reason)
                skipped.append(reason)
                continue
            for method in config.methods:
                for seed_idx in range(config.n_seeds):
                    # shared by both arms: only the start points differ
                    cell_seed = derive_seed(config.seed, g.label,
                                            config.p_steps, mode, edge,
                                            method, seed_idx)
                    for warm in (True, False):
                        key = (g.label, mode, edge, method, seed_idx, warm)
                        specs.append({
                            "key": key,
                            "n_vertices": perturbed.n_vertices,
                            "edges": perturbed.edges,
                            "p": config.p_steps,
                            "method": method,
                            "mode": "restart",
                            "budget": config.budget,
                            "shots": config.shots,
                            "cell_seed": cell_seed,
                            "warm_points": warm_points if warm else (),
                        })
                        meta.append(key)
    raw = {tuple(r["key"]): r for r in _map_cells(specs, config.workers)}

    best_known: dict = {}
    scratch_start: dict = {}
    for key in meta:
        row = raw[key]
        if row["error"] is not None:
            continue
        label, mode, edge, method, seed_idx, warm = key
        bkey = (label, mode, edge)
        low = min(row["values"])
        prior = best_known.get(bkey)
        if prior is None or low < prior:
            best_known[bkey] = low
        if not warm:
            scratch_start[(label, mode, edge, method, seed_idx)] = \
                row["values"][0]

    records = []
    for key in meta:
        row = raw[key]
        label, mode, edge, method, seed_idx, warm = key
        if row["error"] is not None:
            arm = "warm" if warm else "cold"
            reason = (f"{label} minus {edge} [{mode}, {method}, "
                      f"seed {seed_idx}, {arm}]: {row['error']}")
            log.warning(reason)
            skipped.append(reason)
            continue
        values = row["values"]
        best = best_known[(label, mode, edge)]
        # both arms of a seed pair share one baseline: the value at the
        # cold arm's (seed-determined) random start.  Measuring the warm
        # arm against its own start would hand it a near-zero gap and an
        # absurdly strict target, making the arms incomparable.
        baseline = scratch_start.get((label, mode, edge, method, seed_idx))
        final = min(values)
        ratio = final / best if best < 0.0 else None
        records.append(ReuseRecord(
            problem=label, p_steps=config.p_steps, edge=edge, mode=mode,
            method=method, seed_index=seed_idx, warm_start=warm,
            evals_to_target=solved_after(values, best, config.tau,
                                         x0_value=baseline),
            final_value=final, final_ratio=ratio))

    return ReuseResult(config=config, optima=optima, records=records,
                       best_known=best_known, skipped=skipped)


def _map_cells_exhaustive(specs: list, workers: int) -> list:
    if workers == 1:
        return [_exhaustive_cell(s) for s in specs]
    from concurrent.futures import ProcessPoolExecutor
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_exhaustive_cell, specs))


def reuse_summary(result: ReuseResult):
    """(mode, method, warm_start, n, n_solved, median_evals, median_ratio).

    Unsolved runs enter the evals median as +inf, so a majority-unsolved
    arm reports an infinite median rather than a flattering one.
    """
    groups: dict = {}
    for r in result.records:
        groups.setdefault((r.mode, r.method, r.warm_start), []).append(r)
    rows = []
    for key in sorted(groups, key=lambda k: (k[0], k[1], not k[2])):
        recs = groups[key]
        evals = [np.inf if r.evals_to_target is None else r.evals_to_target
                 for r in recs]
        ratios = [r.final_ratio for r in recs if r.final_ratio is not None]
        rows.append((key[0], key[1], key[2], len(recs),
                     sum(e != np.inf for e in evals),
                     float(np.median(evals)),
                     float(np.median(ratios)) if ratios else None))
    return rows


def write_reuse_outputs(result: ReuseResult, out_dir) -> list:
    """Write reuse.csv and manifest.json; empty cells mean undefined."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for r in result.records:
        rows.append((
            r.problem, r.p_steps, f"{r.edge[0]}-{r.edge[1]}", r.mode,
            r.method, r.seed_index, int(r.warm_start),
            "" if r.evals_to_target is None else r.evals_to_target,
            fmt_float(r.final_value),
            "" if r.final_ratio is None else fmt_float(r.final_ratio)))
    paths = [out / "reuse.csv", out / "manifest.json"]
    _write_csv(paths[0],
               ["problem", "p", "edge", "mode", "method", "seed",
                "warm_start", "evals_to_tau", "final_f", "final_ratio"],
               rows)
    write_manifest(paths[1], "reuse", result.config)
    return paths
