"""Bounded derivative-free local solvers with a resumable stepping core.

Three dissimilar methods are provided: a Nelder-Mead simplex, a compass
(pattern) search, and an interpolation-based quadratic model trust-region
method.  Each is written as a generator that *yields* the next point to
evaluate and receives the objective value via ``send``; a small driver loop
turns that into the plain call-a-function interface, and the multistart
coordinator drives many generators round-robin, one evaluation at a time.

All solvers respect the evaluation budget exactly, only ever propose points
inside the bounding box (candidates are projected onto it, and polls that
project onto the current iterate are skipped), and are deterministic.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BudgetError, EvaluationError

__all__ = [
    "Bounds",
    "StopRule",
    "EvalHistory",
    "RunResult",
    "STATUS_FTOL",
    "STATUS_XTOL",
    "STATUS_BUDGET",
    "LOCAL_METHODS",
    "get_stepper",
    "nelder_mead",
    "pattern_search",
    "model_trust_region",
    "restarting",
]

STATUS_FTOL = "converged-by-ftol"
STATUS_XTOL = "converged-by-xtol"
STATUS_BUDGET = "budget-exhausted"

# Candidates closer than this to an already-evaluated point are treated as
# duplicates by the trust-region method and replaced by a geometry step.
_DUPLICATE_TOL = 1e-12


@dataclass(frozen=True)
class Bounds:
    """Axis-aligned box with strictly ordered bounds."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.atleast_1d(np.asarray(self.lower, dtype=np.float64))
        upper = np.atleast_1d(np.asarray(self.upper, dtype=np.float64))
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        if lower.shape != upper.shape or lower.ndim != 1:
            raise ValueError("lower and upper must be 1-D of equal length")
        if not np.all(lower < upper):
            raise ValueError("need lower < upper in every dimension")

    @property
    def d(self) -> int:
        return self.lower.shape[0]

    @property
    def widths(self) -> np.ndarray:
        return self.upper - self.lower

    @property
    def volume(self) -> float:
        return float(np.prod(self.widths))

    def clip(self, x: np.ndarray) -> np.ndarray:
        return np.minimum(np.maximum(x, self.lower), self.upper)

    def contains(self, x: np.ndarray) -> bool:
        return bool(np.all(x >= self.lower) and np.all(x <= self.upper))

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return self.lower + rng.random(self.d) * self.widths


@dataclass(frozen=True)
class StopRule:
    """Absolute convergence tolerances plus the evaluation budget."""

    ftol_abs: float = 1e-3
    xtol_abs: float = 1e-2
    max_evals: int = 1000

    def __post_init__(self):
        if self.ftol_abs < 0 or self.xtol_abs < 0:
            raise ValueError("tolerances must be >= 0")
        if self.max_evals < 1:
            raise ValueError("max_evals must be >= 1")


class EvalHistory:
    """Ordered record of every objective evaluation of a run."""

    def __init__(self):
        self.points: list[np.ndarray] = []
        self.values: list[float] = []

    def append(self, x: np.ndarray, fx: float) -> None:
        self.points.append(np.array(x, dtype=np.float64))
        self.values.append(float(fx))

    def extend(self, other: "EvalHistory") -> None:
        self.points.extend(other.points)
        self.values.extend(other.values)

    def __len__(self) -> int:
        return len(self.values)

    @property
    def best_index(self) -> int:
        if not self.values:
            raise ValueError("empty history has no best entry")
        return int(np.argmin(self.values))

    @property
    def best_value(self) -> float:
        return self.values[self.best_index]

    @property
    def best_point(self) -> np.ndarray:
        return self.points[self.best_index]

    def running_best(self) -> np.ndarray:
        return np.minimum.accumulate(np.asarray(self.values))


@dataclass(frozen=True)
class RunResult:
    """Outcome of a solver run; ``runs`` holds per-restart sub-results."""

    history: EvalHistory
    status: str
    evals_used: int
    runs: tuple["RunResult", ...] | None = None

    @property
    def best_point(self) -> np.ndarray:
        return self.history.best_point

    @property
    def best_value(self) -> float:
        return self.history.best_value

    def to_json(self) -> str:
        return json.dumps({
            "points": [[float(c) for c in x] for x in self.history.points],
            "values": [float(v) for v in self.history.values],
            "status": self.status,
            "evals_used": self.evals_used,
        })


# --------------------------------------------------------------------------
# Stepper drivers
# --------------------------------------------------------------------------

def drive(gen, f, bounds: Bounds, max_evals: int,
          sink: EvalHistory | None = None) -> RunResult:
    """Run a stepper generator against ``f`` under an exact budget.

    Every yielded point is checked to lie inside the box before ``f`` is
    called.  A failing callback raises EvaluationError carrying the partial
    history.  ``sink``, when given, receives every evaluation as well (used
    by the restart wrapper to build its concatenated history).
    """
    history = EvalHistory()
    status = None
    try:
        x = next(gen)
        while True:
            if len(history) >= max_evals:
                gen.close()
                status = STATUS_BUDGET
                break
            if not bounds.contains(x):
                raise AssertionError(f"solver proposed out-of-box point {x}")
            try:
                fx = float(f(np.asarray(x, dtype=np.float64)))
            except Exception as exc:
                err = EvaluationError(f"objective failed at {x}: {exc}",
                                      history=history)
                raise err from exc
            history.append(x, fx)
            if sink is not None:
                sink.append(x, fx)
            x = gen.send(fx)
    except StopIteration as fin:
        status = fin.value if fin.value is not None else STATUS_BUDGET
    return RunResult(history=history, status=status, evals_used=len(history))


# --------------------------------------------------------------------------
# Nelder-Mead simplex (reflect 1, expand 2, contract 0.5, shrink 0.5),
# candidates projected onto the box.
# --------------------------------------------------------------------------

def _initial_simplex(x0: np.ndarray, bounds: Bounds) -> list[np.ndarray]:
    verts = [x0.copy()]
    step = 0.1 * bounds.widths
    for i in range(bounds.d):
        v = x0.copy()
        if v[i] + step[i] <= bounds.upper[i]:
            v[i] += step[i]
        else:
            v[i] -= step[i]
        verts.append(bounds.clip(v))
    return verts

def _nelder_mead_steps(x0, bounds: Bounds, stop: StopRule, f0=None):
    verts = _initial_simplex(x0, bounds)
    vals = []
    for i, v in enumerate(verts):
        if i == 0 and f0 is not None:
            vals.append(float(f0))
        else:
            vals.append((yield v))
    while True:
        order = np.argsort(np.asarray(vals), kind="stable")
        verts = [verts[i] for i in order]
        vals = [vals[i] for i in order]
        spread = vals[-1] - vals[0]
        diameter = max(
            float(np.linalg.norm(verts[i] - verts[j]))
            for i in range(len(verts)) for j in range(i + 1, len(verts)))
        if spread < stop.ftol_abs:
            return STATUS_FTOL
        if diameter < stop.xtol_abs:
            return STATUS_XTOL

        centroid = np.mean(verts[:-1], axis=0)
        worst = verts[-1]
        xr = bounds.clip(centroid + (centroid - worst))
        fr = yield xr
        if fr < vals[0]:
            xe = bounds.clip(centroid + 2.0 * (centroid - worst))
            fe = yield xe
            if fe < fr:
                verts[-1], vals[-1] = xe, fe
            else:
                verts[-1], vals[-1] = xr, fr
        elif fr < vals[-2]:
            verts[-1], vals[-1] = xr, fr
        else:
            if fr < vals[-1]:
                xc = bounds.clip(centroid + 0.5 * (xr - centroid))
                fc = yield xc
                accepted = fc <= fr
            else:
                xc = bounds.clip(centroid - 0.5 * (centroid - worst))
                fc = yield xc
                accepted = fc < vals[-1]
            if accepted:
                verts[-1], vals[-1] = xc, fc
            else:
                for i in range(1, len(verts)):
                    verts[i] = bounds.clip(verts[0] + 0.5 * (verts[i] - verts[0]))
                    vals[i] = yield verts[i]


# --------------------------------------------------------------------------
# Compass (pattern) search: poll +/- step along each axis in order, accept
# the first improvement, halve every step after a fully failed poll.
# --------------------------------------------------------------------------

def _pattern_search_steps(x0, bounds: Bounds, stop: StopRule, f0=None):
    x = x0.copy()
    fx = float(f0) if f0 is not None else (yield x)
    step = 0.25 * bounds.widths
    while True:
        if float(np.max(step)) < stop.xtol_abs:
            return STATUS_XTOL
        improved = False
        for i in range(bounds.d):
            for sign in (+1.0, -1.0):
                cand = x.copy()
                cand[i] += sign * step[i]
                cand = bounds.clip(cand)
                if np.array_equal(cand, x):
                    continue
                fc = yield cand
                if fc < fx:
                    x, fx = cand, fc
                    improved = True
                    break
            if improved:
                break
        if not improved:
            step = 0.5 * step


# --------------------------------------------------------------------------
# Quadratic model trust region: 2d+1 interpolation points, least-change
# (minimum Frobenius norm) Hessian updates, infinity-norm trust region
# intersected with the box, eta1 = 0.1, eta2 = 0.7.  Two radii: steps use
# ``delta``, which never drops below the current resolution ``rho``.  A
# resolution counts as exhausted when the model predicts less than a fixed
# fraction of rho^2 (the natural decrease scale at that spacing) or the
# step collapses below rho/2; then ``rho`` halves, floored at xtol_abs,
# and the interpolation set is resampled around the incumbent, with
# curvature carried over through the least-change refit.  ftol_abs is
# judged only once the resolution floor is exhausted, so a loose value
# tolerance cannot abandon gains that a finer grid would still realize.
# --------------------------------------------------------------------------

def _fit_model(points: list[np.ndarray], values: list[float],
               center: np.ndarray, h_prev: np.ndarray):
    """Interpolate ``values`` with the quadratic closest to ``h_prev``.

    Minimizes ||H - h_prev||_F subject to the interpolation conditions via
    the KKT system; the update has the form H = h_prev + sum_j lam_j s_j s_j^T.
    Returns (c, g, H) for q(x) = c + g.(x - center) + 0.5 (x-center).H.(x-center).
    """
    m = len(points)
    d = center.shape[0]
    s = np.array([p - center for p in points])
    resid = np.array([
        values[j] - 0.5 * float(s[j] @ h_prev @ s[j]) for j in range(m)])
    a = 0.5 * (s @ s.T) ** 2
    kkt = np.zeros((m + 1 + d, m + 1 + d))
    kkt[:m, :m] = a
    kkt[:m, m] = 1.0
    kkt[:m, m + 1:] = s
    kkt[m, :m] = 1.0
    kkt[m + 1:, :m] = s.T
    rhs = np.concatenate([resid, np.zeros(1 + d)])
    try:
        sol = np.linalg.solve(kkt, rhs)
    except np.linalg.LinAlgError:
        sol = np.linalg.lstsq(kkt, rhs, rcond=None)[0]
    lam = sol[:m]
    c = sol[m]
    g = sol[m + 1:]
    h = h_prev + (s.T * lam) @ s
    return c, g, h


def _box_qp(g: np.ndarray, h: np.ndarray, lo: np.ndarray, hi: np.ndarray,
            sweeps: int = 30) -> np.ndarray:
    """Cyclic coordinate descent on q(t) = g.t + 0.5 t.H.t over [lo, hi].

    Starts from t = 0 (must be feasible), never increases q, deterministic.
    Exact per-coordinate minimization; an indefinite diagonal entry sends the
    coordinate to its better interval endpoint.
    """
    t = np.zeros_like(g)
    for _ in range(sweeps):
        shift = 0.0
        for i in range(g.shape[0]):
            gi = g[i] + float(h[i] @ t)
            hii = h[i, i]
            tlo = lo[i] - t[i]
            thi = hi[i] - t[i]
            if hii > 0.0:
                move = min(max(-gi / hii, tlo), thi)
            else:
                qlo = gi * tlo + 0.5 * hii * tlo * tlo
                qhi = gi * thi + 0.5 * hii * thi * thi
                move = tlo if qlo <= qhi else thi
            if move != 0.0:
                t[i] += move
                shift = max(shift, abs(move))
        if shift < 1e-14:
            break
    return t


def _model_tr_steps(x0, bounds: Bounds, stop: StopRule, f0=None):
    d = bounds.d
    rho = 0.1 * float(np.min(bounds.widths))
    delta = rho
    delta_max = float(np.min(bounds.widths))

    def offsets_for(base, i, spread):
        if (base[i] + spread <= bounds.upper[i]
                and base[i] - spread >= bounds.lower[i]):
            return (spread, -spread)
        if base[i] + spread > bounds.upper[i]:
            return (-spread, -2.0 * spread)
        return (spread, 2.0 * spread)

    points = [x0.copy()]
    values = []
    if f0 is not None:
        values.append(float(f0))
    else:
        values.append((yield points[0]))
    for i in range(d):
        for off in offsets_for(x0, i, delta):
            v = x0.copy()
            v[i] += off
            v = bounds.clip(v)
            fv = yield v
            points.append(v)
            values.append(fv)

    best = int(np.argmin(values))
    center = points[best]
    fcenter = values[best]
    c, g, h = _fit_model(points, values, center, np.zeros((d, d)))
    geometry_axis = 0
    stage_steps = 0

    while True:
        if rho < stop.xtol_abs:
            return STATUS_XTOL
        lo = np.maximum(bounds.lower - center, -delta)
        hi = np.minimum(bounds.upper - center, delta)
        step = _box_qp(g, h, lo, hi)
        pred = -(float(g @ step) + 0.5 * float(step @ h @ step))
        stall = max(1e-2 * rho * rho, 1e-12)
        if pred < stall or float(np.linalg.norm(step)) < 0.5 * rho:
            if stage_steps == 0 and pred < 1e-12:
                # a freshly sampled set predicts nothing at all, so finer
                # resolutions cannot recover anything either
                return STATUS_FTOL
            if rho <= stop.xtol_abs:
                return STATUS_FTOL if pred < stop.ftol_abs else STATUS_XTOL
            # drop to a finer resolution (never below the tolerance floor)
            # and resample around the incumbent; curvature carries over
            # through the least-change refit
            rho = max(0.5 * rho, stop.xtol_abs)
            delta = rho
            points = [center.copy()]
            values = [fcenter]
            for i in range(d):
                for off in offsets_for(center, i, delta):
                    v = center.copy()
                    v[i] += off
                    v = bounds.clip(v)
                    fv = yield v
                    points.append(v)
                    values.append(fv)
            best = int(np.argmin(values))
            if best != 0:
                shift = points[best] - center
                c = c + float(g @ shift) + 0.5 * float(shift @ h @ shift)
                g = g + h @ shift
                center = points[best]
            fcenter = values[best]
            c, g, h = _fit_model(points, values, center, h)
            stage_steps = 0
            continue
        cand = bounds.clip(center + step)
        if min(float(np.linalg.norm(cand - p)) for p in points) < _DUPLICATE_TOL:
            # model proposes a point we already hold: take a geometry step
            # along a cycling axis to refresh the interpolation set instead
            cand = None
            for k in range(2 * d):
                axis = (geometry_axis + k // 2) % d
                sign = 1.0 if k % 2 == 0 else -1.0
                trial = center.copy()
                trial[axis] += sign * delta
                trial = bounds.clip(trial)
                if min(float(np.linalg.norm(trial - p))
                       for p in points) >= _DUPLICATE_TOL:
                    cand = trial
                    break
            if cand is None:
                cand = bounds.clip(center + delta)
            geometry_axis = (geometry_axis + 1) % d
            pred = None
        fcand = yield cand
        stage_steps += 1

        # replace the point farthest from the center, never the best one
        dists = [float(np.linalg.norm(p - center)) for p in points]
        dists[int(np.argmin(values))] = -1.0
        drop = int(np.argmax(dists))
        points[drop] = cand
        values[drop] = fcand

        if pred is not None:
            ratio = (fcenter - fcand) / pred
            if ratio >= 0.7:
                delta = min(2.0 * delta, delta_max)
            elif ratio < 0.1:
                delta = max(0.5 * delta, rho)

        new_best = int(np.argmin(values))
        new_center = points[new_best]
        if not np.array_equal(new_center, center):
            shift = new_center - center
            c = c + float(g @ shift) + 0.5 * float(shift @ h @ shift)
            g = g + h @ shift
            center = new_center
        fcenter = values[new_best]
        c, g, h = _fit_model(points, values, center, h)


_STEPPERS = {
    "nelder-mead": _nelder_mead_steps,
    "pattern": _pattern_search_steps,
    "model-tr": _model_tr_steps,
}

LOCAL_METHODS = tuple(sorted(_STEPPERS))


def get_stepper(method):
    """Resolve a method name (or pass through a stepper factory)."""
    if callable(method):
        return method
    try:
        return _STEPPERS[method]
    except KeyError:
        raise ValueError(
            f"unknown local method {method!r}; "
            f"choose from {LOCAL_METHODS}") from None


def _validate_start(x0, bounds: Bounds) -> np.ndarray:
    x0 = np.asarray(x0, dtype=np.float64)
    if x0.shape != (bounds.d,):
        raise ValueError(f"x0 must have shape ({bounds.d},), got {x0.shape}")
    if not bounds.contains(x0):
        raise ValueError(f"x0 {x0} lies outside the bounds")
    return x0


def nelder_mead(f, x0, bounds: Bounds, stop: StopRule) -> RunResult:
    """Bounded Nelder-Mead from ``x0``; see the module docstring."""
    x0 = _validate_start(x0, bounds)
    return drive(_nelder_mead_steps(x0, bounds, stop), f, bounds,
                 stop.max_evals)


def pattern_search(f, x0, bounds: Bounds, stop: StopRule) -> RunResult:
    """Bounded compass search from ``x0``."""
    x0 = _validate_start(x0, bounds)
    return drive(_pattern_search_steps(x0, bounds, stop), f, bounds,
                 stop.max_evals)


def model_trust_region(f, x0, bounds: Bounds, stop: StopRule) -> RunResult:
    """Bounded quadratic-model trust-region search from ``x0``."""
    x0 = _validate_start(x0, bounds)
    need = 2 * bounds.d + 1
    if stop.max_evals < need:
        raise BudgetError(
            f"budget {stop.max_evals} cannot fill the initial "
            f"interpolation set of {need} points")
    return drive(_model_tr_steps(x0, bounds, stop), f, bounds,
                 stop.max_evals)


def restarting(method, f, bounds: Bounds, stop: StopRule, total_budget: int,
               seed: int, start_queue=()) -> RunResult:
    """Restart a local method from fresh uniform starts until budget runs out.

    Each run uses ``stop`` (capped by the remaining budget); on convergence a
    new run starts.  ``start_queue`` optionally supplies the first starting
    points (best first); once drained, starts are drawn uniformly at random
    from the box using ``seed``.  With zero tolerances a run only ends at the
    budget, so no restart ever happens.
    """
    if total_budget < 1:
        raise BudgetError("total_budget must be >= 1")
    stepper = get_stepper(method)
    rng = np.random.default_rng(seed)
    queue = [np.asarray(q, dtype=np.float64) for q in start_queue]
    history = EvalHistory()
    runs = []
    while len(history) < total_budget:
        x0 = bounds.clip(queue.pop(0)) if queue else bounds.sample(rng)
        remaining = total_budget - len(history)
        cap = min(stop.max_evals, remaining)
        try:
            run = drive(stepper(x0, bounds, stop), f, bounds, cap,
                        sink=history)
        except EvaluationError as err:
            raise EvaluationError(str(err), history=history) from err
        runs.append(run)
    return RunResult(history=history, status=STATUS_BUDGET,
                     evals_used=len(history), runs=tuple(runs))
