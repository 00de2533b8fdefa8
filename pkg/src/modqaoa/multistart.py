"""Multistart global optimization with a shrinking critical radius.

The coordinator alternates two phases under one global evaluation budget:
draw a batch of uniform samples, then repeatedly launch a local run from
the best known point that passes the start rule, driving each run to
completion before picking the next.  The start rule accepts a point only
if no strictly better evaluation lies within the critical radius

    r_k = pi**-0.5 * (Gamma(1 + d/2) * volume * sigma * ln(kN) / (kN))**(1/d)

(k batches of N samples drawn so far) and the point is not within r_k of an
already-found local optimum.  A new batch is drawn only once no point
qualifies, so the radius shrinks as sampling proceeds: early cycles start
only clearly separated runs while late cycles may probe finer structure.

Local solvers are driven through their stepper generators (see localopt);
running them serially means the budget can cut short at most the one run
that is active when it expires.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BudgetError, EvaluationError, RadiusUndefinedError
from .localopt import (
    STATUS_BUDGET,
    Bounds,
    EvalHistory,
    RunResult,
    StopRule,
    get_stepper,
)

__all__ = [
    "MultistartConfig",
    "LocalRunRecord",
    "MultistartResult",
    "critical_radius",
    "should_start_run",
    "multistart_minimize",
    "harvest_local_optima",
]


@dataclass(frozen=True)
class MultistartConfig:
    total_budget: int = 1000
    sample_batch: int = 8
    sigma: float = 2.0
    local_stop: StopRule = field(default_factory=StopRule)
    seed: int = 0
    # points evaluated before the first batch (reuse of known optima);
    # they enter the history like any other point and may seed runs
    initial_points: tuple = ()

    def __post_init__(self):
        if self.total_budget < 1:
            raise BudgetError("total_budget must be >= 1")
        if self.sample_batch < 1:
            raise ValueError("sample_batch must be >= 1")
        if self.sigma <= 0:
            raise ValueError("sigma must be > 0")


@dataclass(frozen=True)
class LocalRunRecord:
    """One local run plus the launch-time facts needed to audit it."""

    run_id: int
    result: RunResult
    start_index: int
    start_point: np.ndarray
    start_value: float
    launched_at: int
    radius_at_launch: float

    @property
    def best_point(self) -> np.ndarray:
        if len(self.result.history) == 0:
            return self.start_point
        if self.start_value <= self.result.history.best_value:
            return self.start_point
        return self.result.history.best_point

    @property
    def best_value(self) -> float:
        if len(self.result.history) == 0:
            return self.start_value
        return min(self.start_value, self.result.history.best_value)


@dataclass(frozen=True)
class MultistartResult:
    history: EvalHistory
    runs: tuple[LocalRunRecord, ...]
    local_optima: tuple[tuple[np.ndarray, float], ...]
    n_sampled: int
    n_injected: int
    # one entry per history entry: the owning run's id, None for
    # injected/sampled points
    eval_owners: tuple = ()

    @property
    def best_point(self) -> np.ndarray:
        return self.history.best_point

    @property
    def best_value(self) -> float:
        return self.history.best_value


def critical_radius(n_points: int, d: int, volume: float,
                    sigma: float) -> float:
    """MLSL critical radius after ``n_points`` uniform samples."""
    if n_points < 2:
        raise RadiusUndefinedError(
            f"need at least 2 samples for a radius, got {n_points}")
    if d < 1 or volume <= 0 or sigma <= 0:
        raise ValueError("need d >= 1, volume > 0, sigma > 0")
    inner = (math.gamma(1.0 + d / 2.0) * volume * sigma
             * math.log(n_points) / n_points)
    return inner ** (1.0 / d) / math.sqrt(math.pi)


def should_start_run(point, value, history: EvalHistory, radius: float,
                     active_minima=(), known_optima=()) -> bool:
    """Start rule: reject if a strictly better point lies within ``radius``
    or the point sits within ``radius`` of a known or in-progress minimum."""
    x = np.asarray(point, dtype=np.float64)
    if len(history) > 0:
        pts = np.asarray(history.points)
        vals = np.asarray(history.values)
        dist = np.linalg.norm(pts - x, axis=1)
        if bool(np.any((dist <= radius) & (vals < value))):
            return False
    for taboo in list(active_minima) + list(known_optima):
        if float(np.linalg.norm(np.asarray(taboo) - x)) <= radius:
            return False
    return True


class _ActiveRun:
    def __init__(self, run_id, gen, pending, start_index, start_point,
                 start_value, launched_at, radius_at_launch):
        self.run_id = run_id
        self.gen = gen
        self.pending = pending
        self.history = EvalHistory()
        self.start_index = start_index
        self.start_point = start_point
        self.start_value = start_value
        self.launched_at = launched_at
        self.radius_at_launch = radius_at_launch

    def record(self, status: str) -> LocalRunRecord:
        result = RunResult(history=self.history, status=status,
                           evals_used=len(self.history))
        return LocalRunRecord(
            run_id=self.run_id, result=result, start_index=self.start_index,
            start_point=self.start_point, start_value=self.start_value,
            launched_at=self.launched_at,
            radius_at_launch=self.radius_at_launch)


def multistart_minimize(f, bounds: Bounds, local_method="model-tr",
                        config: MultistartConfig | None = None
                        ) -> MultistartResult:
    """Minimize ``f`` over ``bounds`` under one global evaluation budget."""
    config = config or MultistartConfig()
    stepper = get_stepper(local_method)
    rng = np.random.default_rng(config.seed)
    budget = config.total_budget
    d = bounds.d

    history = EvalHistory()
    # distance from each history point to its nearest strictly better
    # point; kept incrementally so the start rule costs O(n) per cycle
    pts = np.empty((budget, d))
    vals = np.empty(budget)
    nb_dist = np.empty(budget)
    finished: list[LocalRunRecord] = []
    optima: list[tuple[np.ndarray, float]] = []
    used_starts: set[int] = set()

    owners: list = []

    def evaluate(x: np.ndarray, sink: EvalHistory | None = None,
                 owner=None) -> float:
        if not bounds.contains(x):
            raise AssertionError(f"proposed point {x} is outside the box")
        try:
            fx = float(f(np.asarray(x, dtype=np.float64)))
        except Exception as exc:
            raise EvaluationError(f"objective failed at {x}: {exc}",
                                  history=history) from exc
        n = len(history)
        history.append(x, fx)
        owners.append(owner)
        if sink is not None:
            sink.append(x, fx)
        pts[n] = x
        vals[n] = fx
        if n == 0:
            nb_dist[0] = np.inf
        else:
            dist = np.linalg.norm(pts[:n] - x, axis=1)
            better = vals[:n] < fx
            nb_dist[n] = float(dist[better].min()) if np.any(better) else np.inf
            worse = vals[:n] > fx
            np.minimum(nb_dist[:n], np.where(worse, dist, np.inf),
                       out=nb_dist[:n])
        return fx

    n_injected = 0
    for q in config.initial_points:
        if len(history) >= budget:
            break
        evaluate(bounds.clip(np.asarray(q, dtype=np.float64)))
        n_injected += 1

    n_sampled = 0
    next_run_id = 0
    completed_costs: list[int] = []

    def finalize(run: _ActiveRun, status: str) -> None:
        rec = run.record(status)
        finished.append(rec)
        if status != STATUS_BUDGET:
            optima.append((rec.best_point, rec.best_value))
            completed_costs.append(len(rec.result.history))

    def next_start_index(radius: float) -> int | None:
        order = sorted(range(len(history)), key=lambda i: (vals[i], i))
        for idx in order:
            if idx in used_starts:
                continue
            if nb_dist[idx] <= radius:
                continue
            if any(float(np.linalg.norm(p - pts[idx])) <= radius
                   for p, _ in optima):
                continue
            return idx
        return None

    while len(history) < budget:
        # 1) sample a batch of uniform points
        n_new = min(config.sample_batch, budget - len(history))
        for _ in range(n_new):
            evaluate(bounds.sample(rng))
        n_sampled += n_new
        if n_sampled < 2:
            continue
        radius = critical_radius(n_sampled, d, bounds.volume, config.sigma)

        # 2) launch runs one at a time, best start first, and drive each
        # to completion before picking the next; the global budget can
        # then truncate at most one run's final polish
        while len(history) < budget:
            idx = next_start_index(radius)
            if idx is None:
                break
            # a fresh run that cannot finish within the remaining budget
            # contributes little; spend such a tail polishing the incumbent
            # best instead (it trivially satisfies the start rule)
            if completed_costs:
                remaining = budget - len(history)
                if remaining < float(np.median(completed_costs)):
                    best_idx = int(np.argmin(vals[:len(history)]))
                    if best_idx not in used_starts:
                        idx = best_idx
            x0 = pts[idx].copy()
            gen = stepper(x0, bounds, config.local_stop, f0=vals[idx])
            run = _ActiveRun(next_run_id, gen, None, idx, x0,
                             float(vals[idx]), launched_at=len(history),
                             radius_at_launch=radius)
            next_run_id += 1
            used_starts.add(idx)
            status = None
            try:
                run.pending = next(gen)
            except StopIteration as fin:
                status = fin.value
            while status is None and len(history) < budget:
                fx = evaluate(run.pending, sink=run.history,
                              owner=run.run_id)
                if len(run.history) >= config.local_stop.max_evals:
                    run.gen.close()
                    status = STATUS_BUDGET
                    break
                try:
                    run.pending = run.gen.send(fx)
                except StopIteration as fin:
                    status = fin.value
            if status is None:
                run.gen.close()
                status = STATUS_BUDGET
            finalize(run, status)

    assert n_sampled + n_injected + sum(
        len(r.result.history) for r in finished) == len(history)
    assert len(owners) == len(history)
    return MultistartResult(
        history=history, runs=tuple(finished), local_optima=tuple(optima),
        n_sampled=n_sampled, n_injected=n_injected,
        eval_owners=tuple(owners))


def _converged_minimizers(result) -> list[tuple[np.ndarray, float]]:
    if isinstance(result, MultistartResult):
        return list(result.local_optima)
    if isinstance(result, RunResult) and result.runs:
        return [(r.history.best_point, r.history.best_value)
                for r in result.runs
                if r.status != STATUS_BUDGET and len(r.history) > 0]
    raise TypeError("expected a MultistartResult or a restarting RunResult")


def harvest_local_optima(result, dedup_radius: float
                         ) -> tuple[tuple[np.ndarray, float], ...]:
    """Distinct converged minimizers, best first.

    Minimizers within ``dedup_radius`` of an already-kept (better) one are
    merged away.  Accepts a multistart result or a restarting result.
    """
    if dedup_radius < 0:
        raise ValueError("dedup_radius must be >= 0")
    cands = _converged_minimizers(result)
    cands.sort(key=lambda pv: (pv[1], tuple(pv[0])))
    kept: list[tuple[np.ndarray, float]] = []
    for point, value in cands:
        if all(float(np.linalg.norm(point - k)) > dedup_radius
               for k, _ in kept):
            kept.append((point, value))
    return tuple(kept)
