"""Benchmark engine: target metrics, config plumbing, the experiment grid
and its CSV outputs."""

import json

import numpy as np
import pytest

from modqaoa.bench import (
    CellRun,
    ExperimentConfig,
    approximation_ratio,
    benchmark_suite,
    data_profile,
    ratio_summary,
    read_config_file,
    run_fixed_budget_experiment,
    run_method,
    solved_after,
    suite_instances,
    validate_method,
    write_experiment_outputs,
    write_manifest,
    _execute_cell,
)
from modqaoa.errors import ConfigError, RatioUndefinedError
from modqaoa.graphs import connected_caveman
from modqaoa.localopt import StopRule, restarting
from modqaoa.simulator import default_bounds


def rescan_oracle(values, best_f, tau, x0_value=None):
    """Independent re-implementation of the solved-at metric."""
    f0 = values[0] if x0_value is None else x0_value
    target = best_f + tau * (f0 - best_f)
    for i, v in enumerate(values):
        if v <= target:
            return i + 1
    return None


class TestSolvedAfter:
    def test_textbook_example(self):
        # Gap from 0 down to -1; tau = 0.01 puts the target at -0.99.
        values = [0.0, -0.5, -0.985, -0.992, -1.0]
        assert solved_after(values, best_f=-1.0, tau=0.01) == 4

    def test_first_evaluation_can_already_solve(self):
        assert solved_after([-1.0, -0.2], best_f=-1.0, tau=0.01) == 1

    def test_never_reaching_the_target(self):
        assert solved_after([0.0, -0.5, -0.9], best_f=-1.0, tau=0.01) is None

    def test_explicit_baseline_overrides_the_first_entry(self):
        # A warm trace starting at -0.9 sets itself a much stricter target
        # (-0.999) than the one measured from the cold baseline 0 (-0.99).
        values = [-0.9, -0.992, -0.9999]
        assert solved_after(values, -1.0, 0.01, x0_value=0.0) == 2
        assert solved_after(values, -1.0, 0.01) == 3

    def test_trace_may_dip_below_best(self):
        assert solved_after([0.0, -1.2], best_f=-1.0, tau=0.01) == 2

    def test_empty_trace_is_an_error(self):
        with pytest.raises(ValueError):
            solved_after([], best_f=-1.0, tau=0.01)

    @pytest.mark.parametrize("tau", [0.0, 1.0, -0.5, 2.0])
    def test_tau_must_be_a_proper_fraction(self, tau):
        with pytest.raises(ValueError):
            solved_after([0.0], best_f=-1.0, tau=tau)

    def test_matches_rescan_oracle_on_random_traces(self, rng):
        for _ in range(200):
            n = int(rng.integers(1, 40))
            values = list(np.cumsum(rng.normal(-0.05, 1.0, size=n)))
            best = float(min(values) - rng.uniform(0.0, 0.5))
            tau = float(rng.uniform(0.01, 0.5))
            assert solved_after(values, best, tau) == rescan_oracle(
                values, best, tau)
            x0 = float(values[0] + rng.uniform(0.0, 1.0))
            assert solved_after(values, best, tau, x0_value=x0) == \
                rescan_oracle(values, best, tau, x0_value=x0)


class TestDataProfile:
    def test_step_shape_by_hand(self):
        prof = data_profile({"m": [3, None, 5]}, alphas=[1, 2, 3, 4, 5, 6])
        got = prof["m"].tolist()
        assert got == [0.0, 0.0, 1 / 3, 1 / 3, 2 / 3, 2 / 3]

    def test_unsolved_cells_stay_in_the_denominator(self):
        prof = data_profile({"m": [1, None, None, None]}, alphas=[10])
        assert prof["m"].tolist() == [0.25]

    def test_all_unsolved_gives_zeros(self):
        prof = data_profile({"m": [None, None]}, alphas=[1, 5])
        assert prof["m"].tolist() == [0.0, 0.0]

    def test_bounded_and_nondecreasing(self, rng):
        ts = [int(t) if t < 50 else None
              for t in rng.integers(1, 80, size=30)]
        prof = data_profile({"m": ts}, alphas=np.arange(1, 100))
        d = prof["m"]
        assert np.all(d >= 0.0) and np.all(d <= 1.0)
        assert np.all(np.diff(d) >= 0.0)

    def test_empty_method_is_an_error(self):
        with pytest.raises(ValueError):
            data_profile({"m": []}, alphas=[1])


class TestApproximationRatio:
    def test_exact_match_is_one(self):
        assert approximation_ratio(-0.4, -0.4) == 1.0

    def test_zero_found_is_zero(self):
        assert approximation_ratio(0.0, -0.4) == 0.0

    def test_fractions(self):
        assert approximation_ratio(-0.2, -0.4) == 0.5
        assert approximation_ratio(0.05, -0.1) == -0.5

    @pytest.mark.parametrize("best", [0.0, 0.3])
    def test_nonnegative_best_is_undefined(self, best):
        with pytest.raises(RatioUndefinedError):
            approximation_ratio(-0.1, best)


class TestValidateMethod:
    @pytest.mark.parametrize("name", [
        "nelder-mead", "pattern", "model-tr",
        "restarting:pattern", "multistart:model-tr",
    ])
    def test_accepts(self, name):
        validate_method(name)

    @pytest.mark.parametrize("name", [
        "bfgs", "multistart:bfgs", "restarting:", "multistart:multistart:",
    ])
    def test_rejects(self, name):
        with pytest.raises(ConfigError):
            validate_method(name)


class TestExperimentConfig:
    def test_defaults(self):
        cfg = ExperimentConfig()
        assert cfg.p_values == (1, 2, 4)
        assert cfg.methods == ("nelder-mead", "pattern", "model-tr",
                               "multistart:model-tr")
        assert cfg.budget == 1000
        assert cfg.n_seeds == 10
        assert cfg.tau == 0.01
        assert cfg.mode == "restart"
        assert cfg.shots == 0

    @pytest.mark.parametrize("kwargs", [
        {"p_values": ()},
        {"p_values": (0,)},
        {"methods": ()},
        {"methods": ("bfgs",)},
        {"budget": 0},
        {"n_seeds": 0},
        {"tau": 0.0},
        {"tau": 1.0},
        {"mode": "adaptive"},
        {"shots": -1},
        {"workers": 0},
    ])
    def test_field_validation(self, kwargs):
        with pytest.raises(ConfigError):
            ExperimentConfig(**kwargs)

    def test_dict_round_trip(self):
        cfg = ExperimentConfig(p_values=(1, 2), budget=50, n_seeds=2,
                               mode="zero-tol", shots=16)
        assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg

    def test_from_dict_coerces_lists(self):
        cfg = ExperimentConfig.from_dict(
            {"p_values": [1, 2], "methods": ["pattern"]})
        assert cfg.p_values == (1, 2)
        assert cfg.methods == ("pattern",)

    def test_from_dict_rejects_unknown_keys(self):
        with pytest.raises(ConfigError, match="unknown config keys"):
            ExperimentConfig.from_dict({"budgett": 5})


class TestReadConfigFile:
    def test_plain_config(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"budget": 77, "n_seeds": 2}))
        cfg = read_config_file(path)
        assert cfg.budget == 77
        assert cfg.n_seeds == 2

    def test_manifest_round_trip_drops_workers(self, tmp_path):
        cfg = ExperimentConfig(budget=33, n_seeds=2, workers=8)
        path = tmp_path / "manifest.json"
        write_manifest(path, "bench", cfg)
        back = read_config_file(path)
        assert back.budget == 33
        assert back.workers == 1

    def test_rejects_non_object_json(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text("[1, 2, 3]")
        with pytest.raises(ConfigError):
            read_config_file(path)

    def test_unknown_key_is_a_config_error(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"frobnicate": 1}))
        with pytest.raises(ConfigError):
            read_config_file(path)


def quadratic_counter():
    calls = {"n": 0}

    def f(x):
        calls["n"] += 1
        return float((x ** 2).sum())

    return f, calls


class TestRunMethod:
    @pytest.mark.parametrize("method", [
        "nelder-mead", "restarting:pattern", "model-tr",
        "multistart:model-tr",
    ])
    def test_budget_is_exact(self, method):
        f, calls = quadratic_counter()
        values = run_method(method, f, default_bounds(1), budget=47,
                            mode="restart", seed=0)
        assert calls["n"] == 47
        assert len(values) == 47

    def test_restart_mode_reproduces_default_tolerances(self):
        f = lambda x: float(np.sin(3 * x[0]) + np.cos(2 * x[1]))
        bounds = default_bounds(1)
        got = run_method("nelder-mead", f, bounds, budget=80, mode="restart",
                         seed=4)
        ref = restarting("nelder-mead", f, bounds, StopRule(max_evals=80),
                         total_budget=80, seed=4)
        assert got == ref.history.values

    def test_zero_tol_mode_reproduces_zero_tolerances(self):
        f = lambda x: float(np.sin(3 * x[0]) + np.cos(2 * x[1]))
        bounds = default_bounds(1)
        got = run_method("nelder-mead", f, bounds, budget=80, mode="zero-tol",
                         seed=4)
        ref = restarting(
            "nelder-mead", f, bounds,
            StopRule(ftol_abs=0.0, xtol_abs=0.0, max_evals=80),
            total_budget=80, seed=4)
        assert got == ref.history.values
        restart_values = run_method("nelder-mead", f, bounds, budget=80,
                                    mode="restart", seed=4)
        assert got != restart_values

    def test_multistart_ignores_mode(self):
        f = lambda x: float(np.sin(3 * x[0]) + np.cos(2 * x[1]))
        a = run_method("multistart:model-tr", f, default_bounds(1),
                       budget=60, mode="restart", seed=1)
        b = run_method("multistart:model-tr", f, default_bounds(1),
                       budget=60, mode="zero-tol", seed=1)
        assert a == b

    def test_warm_points_lead_the_restarting_queue(self):
        seen = []
        f = lambda x: seen.append(x.copy()) or float((x ** 2).sum())
        warm = np.array([0.5, 1.0])
        run_method("restarting:pattern", f, default_bounds(1), budget=10,
                   mode="restart", seed=0, warm_points=(warm,))
        assert np.array_equal(seen[0], warm)

    def test_warm_points_are_injected_into_multistart(self):
        seen = []
        f = lambda x: seen.append(x.copy()) or float((x ** 2).sum())
        warm = np.array([0.5, 1.0])
        run_method("multistart:model-tr", f, default_bounds(1), budget=20,
                   mode="restart", seed=0, warm_points=(warm,))
        assert np.array_equal(seen[0], warm)

    def test_unknown_method_raises(self):
        with pytest.raises(ConfigError):
            run_method("bfgs", lambda x: 0.0, default_bounds(1), 10,
                       "restart", 0)


class TestExecuteCell:
    def _spec(self, **over):
        g = connected_caveman(2, 3)
        spec = {
            "key": (g.label, 1, "nelder-mead", 0),
            "n_vertices": g.n_vertices,
            "edges": g.edges,
            "p": 1,
            "method": "nelder-mead",
            "mode": "restart",
            "budget": 12,
            "shots": 0,
            "cell_seed": 99,
        }
        spec.update(over)
        return spec

    def test_success_carries_the_trace(self):
        out = _execute_cell(self._spec())
        assert out["error"] is None
        assert len(out["values"]) == 12
        assert out["key"] == ("caveman-2-3", 1, "nelder-mead", 0)

    def test_failure_is_data_not_an_exception(self):
        out = _execute_cell(self._spec(method="bfgs"))
        assert out["values"] is None
        assert out["error"].startswith("ConfigError")


@pytest.fixture(scope="module")
def small_result():
    cfg = ExperimentConfig(p_values=(1,),
                           methods=("nelder-mead", "multistart:model-tr"),
                           budget=60, n_seeds=3)
    graphs = [connected_caveman(2, 3)]
    return run_fixed_budget_experiment(cfg, graphs=graphs)


class TestFixedBudgetExperiment:
    def test_grid_shape_and_budget(self, small_result):
        res = small_result
        assert len(res.cells) == 1 * 1 * 2 * 3
        for key in res.cell_keys():
            cell = res.cells[key]
            assert cell.ok
            assert len(cell.values) == 60

    def test_best_known_is_the_global_minimum_seen(self, small_result):
        res = small_result
        lows = [min(c.values) for c in res.cells.values()]
        assert res.best_known[("caveman-2-3", 1)] == min(lows)
        assert res.instances[0].best_known_f == min(lows)

    def test_ratios_never_exceed_one(self, small_result):
        for _, _, _, _, ratio in small_result.ratio_rows():
            assert ratio <= 1.0 + 1e-12

    def test_some_cell_achieves_ratio_one(self, small_result):
        ratios = [r for *_, r in small_result.ratio_rows()]
        assert max(ratios) == 1.0

    def test_solved_table_covers_every_cell(self, small_result):
        table = small_result.solved_table(1)
        assert set(table) == {"nelder-mead", "multistart:model-tr"}
        for ts in table.values():
            assert len(ts) == 3
            for t in ts:
                assert t is None or 1 <= t <= 60

    def test_profile_final_value_matches_solved_fraction(self, small_result):
        res = small_result
        table = res.solved_table(1)
        rows = list(res.profile_rows())
        for method, ts in table.items():
            want = sum(t is not None for t in ts) / len(ts)
            final = [d for p, m, a, d in rows if m == method and a == 60]
            assert final == [want]

    def test_ratio_summary_shape(self, small_result):
        rows = ratio_summary(small_result)
        assert len(rows) == 2
        for p, method, n, q25, med, q75 in rows:
            assert p == 1 and n == 3
            assert q25 <= med <= q75

    def test_deterministic_across_runs_and_workers(self, small_result):
        cfg = ExperimentConfig(p_values=(1,),
                               methods=("nelder-mead", "multistart:model-tr"),
                               budget=60, n_seeds=3, workers=2)
        again = run_fixed_budget_experiment(
            cfg, graphs=[connected_caveman(2, 3)])
        for key in small_result.cell_keys():
            assert again.cells[key].values == small_result.cells[key].values

    def test_cell_seeds_differ_across_the_grid(self, small_result):
        # No two cells may share a trace; identical seeds would show up as
        # identical first samples.
        firsts = [tuple([c.values[0]]) for c in small_result.cells.values()]
        assert len(set(firsts)) == len(firsts)

    def test_sampled_objective_changes_the_traces(self):
        cfg = ExperimentConfig(p_values=(1,), methods=("pattern",),
                               budget=25, n_seeds=1, shots=128)
        g = connected_caveman(2, 3)
        noisy = run_fixed_budget_experiment(cfg, graphs=[g])
        exact = run_fixed_budget_experiment(
            ExperimentConfig(p_values=(1,), methods=("pattern",),
                             budget=25, n_seeds=1), graphs=[g])
        key = (g.label, 1, "pattern", 0)
        assert noisy.cells[key].values != exact.cells[key].values
        again = run_fixed_budget_experiment(cfg, graphs=[g])
        assert noisy.cells[key].values == again.cells[key].values

    def test_failed_cells_count_as_unsolved(self, small_result):
        res = small_result
        broken_key = ("caveman-2-3", 1, "nelder-mead", 1)
        saved = res.cells[broken_key]
        res.cells[broken_key] = CellRun(values=None, error="Boom: synthetic")
        try:
            assert res.failures == {broken_key: "Boom: synthetic"}
            table = res.solved_table(1)
            assert table["nelder-mead"].count(None) >= 1
            assert len(table["nelder-mead"]) == 3
            labels = [k for k, *_ in res.ratio_rows()]
            assert len(labels) == 5
        finally:
            res.cells[broken_key] = saved


class TestSuiteInstances:
    def test_default_cross_product(self):
        instances = suite_instances()
        assert len(instances) == 18
        assert instances[0].label == "caveman-5-2/p1"
        assert {i.p_steps for i in instances} == {1, 2, 4}

    def test_custom_graphs(self):
        g = connected_caveman(2, 3)
        instances = suite_instances(p_values=(2,), graphs=[g])
        assert len(instances) == 1
        assert instances[0].label == "caveman-2-3/p2"

    def test_suite_matches_packaged_labels(self):
        labels = [g.label for g in benchmark_suite()]
        assert len(labels) == 6


class TestExperimentOutputs:
    def test_files_schema_and_determinism(self, small_result, tmp_path):
        out1 = tmp_path / "a"
        out2 = tmp_path / "b"
        paths1 = write_experiment_outputs(small_result, out1)
        paths2 = write_experiment_outputs(small_result, out2)
        names = [p.name for p in paths1]
        assert names == ["runs.csv", "profiles.csv", "ratios.csv",
                         "manifest.json"]
        for p1, p2 in zip(paths1, paths2):
            assert p1.read_bytes() == p2.read_bytes()

        runs = (out1 / "runs.csv").read_text().splitlines()
        assert runs[0] == "problem,p,method,seed,mode,eval_index,f"
        assert len(runs) == 1 + 6 * 60

        profiles = (out1 / "profiles.csv").read_text().splitlines()
        assert profiles[0] == "p,method,alpha,d"
        assert len(profiles) == 1 + 2 * 60

        ratios = (out1 / "ratios.csv").read_text().splitlines()
        assert ratios[0] == "problem,p,method,seed,ratio"
        assert len(ratios) == 1 + 6

    def test_floats_round_trip_exactly(self, small_result, tmp_path):
        write_experiment_outputs(small_result, tmp_path)
        lines = (tmp_path / "runs.csv").read_text().splitlines()[1:]
        cell = small_result.cells[("caveman-2-3", 1, "nelder-mead", 0)]
        first = lines[0].split(",")
        assert first[:6] == ["caveman-2-3", "1", "nelder-mead", "0",
                             "restart", "1"]
        assert float(first[6]) == cell.values[0]

    def test_manifest_contents(self, small_result, tmp_path):
        write_experiment_outputs(small_result, tmp_path)
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest["command"] == "bench"
        assert manifest["kernel_backend"] in ("compiled", "python")
        assert ExperimentConfig.from_dict(
            dict(manifest["config"], workers=1)) == small_result.config
