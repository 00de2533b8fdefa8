"""Fixed-budget benchmarking of optimizers on modularity landscapes.

Runs a grid of (problem, circuit depth, method, seed) cells, each a single
optimizer run under a shared evaluation budget, and aggregates the results
into evals-to-target data profiles and approximation ratios.  Cells are
independent, so they can be farmed out to worker processes; results are
keyed and assembled in a fixed order, which keeps the output byte-identical
for any worker count.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__, kernels
from ._util import derive_seed, fmt_float
from .errors import ConfigError, RatioUndefinedError
from .graphs import Graph, connected_caveman, random_partition, read_edge_list
from .hamiltonian import cost_diagonal
from .localopt import LOCAL_METHODS, StopRule, restarting
from .multistart import MultistartConfig, multistart_minimize
from .simulator import default_bounds, make_objective

__all__ = [
    "SUITE_FILES",
    "benchmark_suite",
    "generate_suite",
    "ProblemInstance",
    "suite_instances",
    "solved_after",
    "data_profile",
    "approximation_ratio",
    "ExperimentConfig",
    "CellRun",
    "ExperimentResult",
    "ratio_summary",
    "run_method",
    "run_fixed_budget_experiment",
    "write_experiment_outputs",
    "read_config_file",
]


SUITE_FILES = (
    "caveman-5-2.edges",
    "caveman-3-4.edges",
    "caveman-2-6.edges",
    "partition-5x5-s2.edges",
    "partition-6x5-s1.edges",
    "partition-6x6-s1.edges",
)

DEFAULT_METHODS = ("nelder-mead", "pattern", "model-tr", "multistart:model-tr")

MODES = ("restart", "zero-tol")


def benchmark_suite() -> list[Graph]:
    """The six frozen benchmark graphs, loaded from packaged edge lists."""
    data = resources.files("modqaoa") / "data"
    suite = []
    for name in SUITE_FILES:
        with resources.as_file(data / name) as path:
            suite.append(read_edge_list(path))
    return suite


def generate_suite() -> list[Graph]:
    """Rebuild the benchmark graphs from their generators.

    Must stay equal to :func:`benchmark_suite`; the packaged files exist so
    the suite cannot drift if a generator changes.
    """
    return [
        connected_caveman(5, 2),
        connected_caveman(3, 4),
        connected_caveman(2, 6),
        random_partition((5, 5), 0.75, 0.1, seed=2),
        random_partition((6, 5), 0.75, 0.1, seed=1),
        random_partition((6, 6), 0.75, 0.1, seed=1),
    ]


@dataclass
class ProblemInstance:
    """One benchmark problem: a graph at a fixed circuit depth.

    ``best_known_f`` is filled in after an experiment with the lowest value
    any method reached on this instance.
    """

    graph: Graph
    p_steps: int
    best_known_f: float | None = None

    @property
    def label(self) -> str:
        return f"{self.graph.label}/p{self.p_steps}"


def suite_instances(p_values=(1, 2, 4), graphs=None) -> list[ProblemInstance]:
    if graphs is None:
        graphs = benchmark_suite()
    return [ProblemInstance(g, p) for g in graphs for p in p_values]


# --------------------------------------------------------------------------
# Metrics
# --------------------------------------------------------------------------

def solved_after(values, best_f: float, tau: float, x0_value=None):
    """Evaluations needed to close a (1 - tau) fraction of the starting gap.

    ``values`` is the per-evaluation objective trace of one run.  The run
    counts as solved at the first (1-based) evaluation t with

        f(t) <= best_f + tau * (f(x0) - best_f)

    i.e. once the decrease from the starting value covers all but a
    tau-fraction of the gap to ``best_f``.  The starting value defaults to
    the first entry of the trace.  Returns None if the trace never reaches
    the target; ``best_f`` need not bound the trace from below.
    """
    vals = np.asarray(values, dtype=np.float64)
    if vals.size == 0:
        raise ValueError("empty evaluation trace")
    if not 0.0 < tau < 1.0:
        raise ValueError("tau must be in (0, 1)")
    f0 = float(vals[0]) if x0_value is None else float(x0_value)
    target = best_f + tau * (f0 - best_f)
    hits = np.nonzero(vals <= target)[0]
    if hits.size == 0:
        return None
    return int(hits[0]) + 1


def data_profile(t_by_method: dict, alphas) -> dict:
    """Fraction of cells solved within alpha evaluations, per method.

    ``t_by_method`` maps a method name to its list of solved-after counts
    (None for unsolved cells).  Unsolved cells stay in the denominator.
    """
    alphas = np.asarray(alphas, dtype=np.float64)
    out = {}
    for method, ts in t_by_method.items():
        n = len(ts)
        if n == 0:
            raise ValueError(f"no cells recorded for method '{method}'")
        solved = np.array([t for t in ts if t is not None], dtype=np.float64)
        if solved.size == 0:
            out[method] = np.zeros_like(alphas)
        else:
            out[method] = (solved[None, :] <= alphas[:, None]).sum(axis=1) / n
    return out


def approximation_ratio(found_f: float, best_f: float) -> float:
    """Quality of a found value relative to the best known one.

    Both values are negated modularities, so the best must be strictly
    negative for the ratio to mean anything; a split no better than the
    trivial all-one-side split has no defined ratio.
    """
    if not best_f < 0.0:
        raise RatioUndefinedError(
            f"best value {best_f!r} is not negative; ratio undefined")
    return float(found_f) / float(best_f)


# --------------------------------------------------------------------------
# Experiment configuration
# --------------------------------------------------------------------------

def validate_method(name: str) -> None:
    """Accept bare local methods plus restarting:/multistart: wrappers."""
    base = name
    for prefix in ("restarting:", "multistart:"):
        if name.startswith(prefix):
            base = name[len(prefix):]
            break
    if base not in LOCAL_METHODS:
        raise ConfigError(
            f"unknown method '{name}'; local methods are "
            f"{', '.join(LOCAL_METHODS)}, optionally prefixed with "
            f"'restarting:' or 'multistart:'")


@dataclass(frozen=True)
class ExperimentConfig:
    p_values: tuple = (1, 2, 4)
    methods: tuple = DEFAULT_METHODS
    budget: int = 1000
    n_seeds: int = 10
    tau: float = 0.01
    mode: str = "restart"
    seed: int = 0
    shots: int = 0
    workers: int = 1

    def __post_init__(self):
        if not self.p_values or any(int(p) < 1 for p in self.p_values):
            raise ConfigError("p_values must be positive integers")
        if not self.methods:
            raise ConfigError("methods must be non-empty")
        for m in self.methods:
            validate_method(m)
        if self.budget < 1:
            raise ConfigError("budget must be >= 1")
        if self.n_seeds < 1:
            raise ConfigError("n_seeds must be >= 1")
        if not 0.0 < self.tau < 1.0:
            raise ConfigError("tau must be in (0, 1)")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}")
        if self.shots < 0:
            raise ConfigError("shots must be >= 0")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(raw) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        kwargs = dict(raw)
        for key in ("p_values", "methods"):
            if key in kwargs:
                kwargs[key] = tuple(kwargs[key])
        return cls(**kwargs)

    def to_dict(self) -> dict:
        return {
            "p_values": list(self.p_values),
            "methods": list(self.methods),
            "budget": self.budget,
            "n_seeds": self.n_seeds,
            "tau": self.tau,
            "mode": self.mode,
            "seed": self.seed,
            "shots": self.shots,
            "workers": self.workers,
        }


def read_config_file(path, config_cls=ExperimentConfig):
    """Load a config from JSON; manifest files contribute their "config" key."""
    raw = json.loads(Path(path).read_text())
    if not isinstance(raw, dict):
        raise ConfigError("config file must hold a JSON object")
    if "config" in raw and "command" in raw:
        raw = raw["config"]
        raw.pop("workers", None)  # worker count is host-specific
    return config_cls.from_dict(raw)


# --------------------------------------------------------------------------
# Cell execution (top level so worker processes can pickle it)
# --------------------------------------------------------------------------

_DIAG_CACHE: dict = {}


def _cached_diag(n_vertices: int, edges: tuple):
    key = (n_vertices, edges)
    if key not in _DIAG_CACHE:
        g = Graph(n_vertices=n_vertices, edges=edges, label="cell")
        _DIAG_CACHE[key] = cost_diagonal(g)
    return _DIAG_CACHE[key]


def run_method(method: str, f, bounds, budget: int, mode: str, seed: int,
               warm_points=()):
    """Run one optimizer under an exact evaluation budget; returns its trace.

    ``mode`` selects the stop tolerances for restarting methods: "restart"
    keeps the standard tolerances so converged runs free budget for fresh
    starts, "zero-tol" zeroes them so a single run spends the whole budget.
    Multistart schedules its own local runs and always uses the standard
    tolerances.  ``warm_points`` are tried first (restarting) or injected
    into the history before sampling (multistart).
    """
    validate_method(method)
    warm = tuple(np.asarray(w, dtype=np.float64) for w in warm_points)
    if method.startswith("multistart:"):
        local = method.split(":", 1)[1]
        cfg = MultistartConfig(total_budget=budget,
                               local_stop=StopRule(max_evals=budget),
                               seed=seed, initial_points=warm)
        result = multistart_minimize(f, bounds, local_method=local,
                                     config=cfg)
        return result.history.values
    base = method.split(":", 1)[1] if method.startswith("restarting:") else method
    if mode == "zero-tol":
        stop = StopRule(ftol_abs=0.0, xtol_abs=0.0, max_evals=budget)
    else:
        stop = StopRule(max_evals=budget)
    result = restarting(base, f, bounds, stop, total_budget=budget,
                        seed=seed, start_queue=warm)
    return result.history.values


def _execute_cell(spec: dict) -> dict:
    """Run one experiment cell; failures come back as data, not exceptions."""
    try:
        edges = tuple(tuple(e) for e in spec["edges"])
        diag = _cached_diag(spec["n_vertices"], edges)
        f = make_objective(diag, shots=spec["shots"],
                           seed=derive_seed(spec["cell_seed"], "shots"))
        bounds = default_bounds(spec["p"])
        values = run_method(spec["method"], f, bounds, spec["budget"],
                            spec["mode"], spec["cell_seed"],
                            warm_points=spec.get("warm_points", ()))
        return {"key": spec["key"],
                "values": [float(v) for v in values],
                "error": None}
    except Exception as exc:  # noqa: BLE001 - cell isolation is the point
        return {"key": spec["key"], "values": None,
                "error": f"{type(exc).__name__}: {exc}"}


def _map_cells(specs: list[dict], workers: int) -> list[dict]:
    if workers == 1:
        return [_execute_cell(s) for s in specs]
    chunk = max(1, len(specs) // (workers * 4))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_execute_cell, specs, chunksize=chunk))


# --------------------------------------------------------------------------
# The experiment itself
# --------------------------------------------------------------------------

@dataclass
class CellRun:
    """Trace of one (problem, p, method, seed) cell; error text if it died."""

    values: list | None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    instances: list
    cells: dict          # (problem label, p, method, seed index) -> CellRun
    best_known: dict     # (problem label, p) -> lowest value any cell saw

    @property
    def failures(self) -> dict:
        return {k: c.error for k, c in self.cells.items() if not c.ok}

    def cell_keys(self):
        for inst in self.instances:
            for method in self.config.methods:
                for seed_idx in range(self.config.n_seeds):
                    yield (inst.graph.label, inst.p_steps, method, seed_idx)

    def solved_table(self, p: int) -> dict:
        """Per-method solved-after counts over (problem, seed) cells.

        Failed cells count as unsolved (None) so the denominator of the
        data profile stays the full cross product.
        """
        t_by_method: dict = {}
        for method in self.config.methods:
            ts = []
            for inst in self.instances:
                if inst.p_steps != p:
                    continue
                for seed_idx in range(self.config.n_seeds):
                    cell = self.cells[(inst.graph.label, p, method,
                                       seed_idx)]
                    if not cell.ok:
                        ts.append(None)
                        continue
                    best = self.best_known[(inst.graph.label, p)]
                    ts.append(solved_after(cell.values, best,
                                           self.config.tau))
            t_by_method[method] = ts
        return t_by_method

    def profile_rows(self):
        """(p, method, alpha, d) rows over alpha = 1..budget."""
        alphas = np.arange(1, self.config.budget + 1)
        for p in self.config.p_values:
            profile = data_profile(self.solved_table(p), alphas)
            for method in self.config.methods:
                for alpha, d in zip(alphas, profile[method]):
                    yield p, method, int(alpha), float(d)

    def ratio_rows(self):
        """(problem, p, method, seed, ratio) rows for successful cells."""
        for key in self.cell_keys():
            cell = self.cells[key]
            if not cell.ok:
                continue
            label, p, method, seed_idx = key
            ratio = approximation_ratio(min(cell.values),
                                        self.best_known[(label, p)])
            yield label, p, method, seed_idx, ratio


def ratio_summary(result: ExperimentResult):
    """(p, method, n, q25, median, q75) of approximation ratios per cell."""
    by_group: dict = {}
    for label, p, method, seed_idx, ratio in result.ratio_rows():
        by_group.setdefault((p, method), []).append(ratio)
    rows = []
    for p in result.config.p_values:
        for method in result.config.methods:
            ratios = by_group.get((p, method), [])
            if not ratios:
                continue
            q25, med, q75 = np.percentile(ratios, [25.0, 50.0, 75.0])
            rows.append((p, method, len(ratios), float(q25), float(med),
                         float(q75)))
    return rows


def run_fixed_budget_experiment(config: ExperimentConfig,
                                graphs=None) -> ExperimentResult:
    """Run every cell of the benchmark grid under ``config``.

    Per-cell seeds are derived from the experiment seed and the cell key, so
    results do not depend on execution order or worker count.
    """
    instances = suite_instances(config.p_values, graphs)
    specs = []
    for inst in instances:
        for method in config.methods:
            for seed_idx in range(config.n_seeds):
                key = (inst.graph.label, inst.p_steps, method, seed_idx)
                specs.append({
                    "key": key,
                    "n_vertices": inst.graph.n_vertices,
                    "edges": inst.graph.edges,
                    "p": inst.p_steps,
                    "method": method,
                    "mode": config.mode,
                    "budget": config.budget,
                    "shots": config.shots,
                    "cell_seed": derive_seed(config.seed, *key),
                })
    raw = _map_cells(specs, config.workers)
    cells = {tuple(r["key"]): CellRun(r["values"], r["error"]) for r in raw}

    best_known: dict = {}
    for key, cell in cells.items():
        if not cell.ok:
            continue
        label, p = key[0], key[1]
        low = min(cell.values)
        prior = best_known.get((label, p))
        if prior is None or low < prior:
            best_known[(label, p)] = low
    if not best_known:
        raise RuntimeError(
            "every cell failed; first error: "
            + next(iter(cells.values())).error)
    for inst in instances:
        inst.best_known_f = best_known.get((inst.graph.label, inst.p_steps))

    return ExperimentResult(config=config, instances=instances, cells=cells,
                            best_known=best_known)


# --------------------------------------------------------------------------
# Output files
# --------------------------------------------------------------------------

def _write_csv(path: Path, header: list[str], rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(
            fmt_float(v) if isinstance(v, float) else str(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def write_manifest(path: Path, command: str, config) -> None:
    manifest = {
        "command": command,
        "package_version": __version__,
        "kernel_backend": kernels.active_backend(),
        "config": config.to_dict(),
    }
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def write_experiment_outputs(result: ExperimentResult, out_dir) -> list[Path]:
    """Write runs.csv, profiles.csv, ratios.csv and manifest.json."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    runs_rows = []
    for key in result.cell_keys():
        cell = result.cells[key]
        if not cell.ok:
            continue
        label, p, method, seed_idx = key
        for i, v in enumerate(cell.values, start=1):
            runs_rows.append((label, p, method, seed_idx,
                              result.config.mode, i, float(v)))
    paths = [out / "runs.csv", out / "profiles.csv", out / "ratios.csv",
             out / "manifest.json"]
    _write_csv(paths[0],
               ["problem", "p", "method", "seed", "mode", "eval_index", "f"],
               runs_rows)
    _write_csv(paths[1], ["p", "method", "alpha", "d"], result.profile_rows())
    _write_csv(paths[2], ["problem", "p", "method", "seed", "ratio"],
               result.ratio_rows())
    write_manifest(paths[3], "bench", result.config)
    return paths
