import json
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

import smoothgraph
from smoothgraph.exceptions import ExperimentConfigError, ValidationError
from smoothgraph.experiment import (METRICS, MODELS, ExperimentSpec, baseline_gaussian, baseline_threshold_fmeasure,
                                    parse_grid, prepare_trial, quantile_thresholds, records_frame, results_table,
                                    run_experiment, select_best, threshold_fmeasure_curve)
from smoothgraph.generators import GraphModelSpec
from smoothgraph.graph_core import edge_count, pairwise_distances
from smoothgraph.metrics import connectivity, edges_per_node
from smoothgraph.solvers import SolverConfig, gaussian_kernel, learn_l2_degree, scale_to_unit_alpha
from smoothgraph.types import ExecutorKind, GraphKind, SelectionRule

DEMOS = Path(smoothgraph.__file__).parent / "demos"


@pytest.fixture
def tiny_spec():
    """Two trials on a 12-node random graph with two grid points per model"""
    return ExperimentSpec(
        graph=GraphModelSpec(kind="erdos_renyi", m=12, p=0.3),
        m=12,
        n=40,
        trials=2,
        master_seed=3,
        log_beta_grid=[0.1, 1.0],
        l2_alpha_grid=[0.01, 1.0],
        sigma_grid=[0.3, 1.0],
        threshold_levels=[0.5, 0.8, 0.95],
        solver=SolverConfig(tol=1e-3, max_iter=5000, track_objective=False),
    )


@pytest.fixture
def distances(rng):
    return pairwise_distances(rng.uniform(size=(10, 3)))


class TestParseGrid:
    def test_list(self):
        assert parse_grid([1, 2.5], "grid") == [1.0, 2.5]

    def test_logspace_uses_values(self):
        assert np.allclose(parse_grid({"logspace": [0.01, 100, 5]}, "grid"), [0.01, 0.1, 1, 10, 100])

    def test_linspace(self):
        assert np.allclose(parse_grid({"linspace": [0, 1, 3]}, "grid"), [0, 0.5, 1])

    @pytest.mark.parametrize("value", [
        {"geomspace": [1, 2, 3]},
        {"logspace": [0, 1, 3]},
        {"linspace": [0, 1]},
        {"linspace": [0, 1, 0]},
        ["a"],
        "1,2,3",
    ])
    def test_invalid(self, value):
        with pytest.raises(ExperimentConfigError):
            parse_grid(value, "grid")


class TestExperimentSpec:
    def test_defaults(self):
        spec = ExperimentSpec()
        assert spec.l2_s == 100.0
        assert len(spec.log_beta_grid) == 21
        assert len(spec.sigma_grid) == 25
        assert spec.selection is SelectionRule.MEAN
        assert spec.cell_name == "rgg_tikhonov"

    def test_graph_follows_node_count(self):
        spec = ExperimentSpec(m=30, graph={"kind": "barabasi_albert"})
        assert spec.graph.m == 30
        assert spec.graph.kind is GraphKind.BARABASI_ALBERT
        assert ExperimentSpec(m=30).graph.m == 30

    def test_dict_round_trip(self, tiny_spec):
        assert ExperimentSpec.from_dict(json.loads(json.dumps(tiny_spec.to_dict()))) == tiny_spec

    @pytest.mark.parametrize("changes", [
        {"trials": 0},
        {"m": 1},
        {"noise_ratio": -0.1},
        {"models": ["knn"]},
        {"models": []},
        {"sigma_grid": []},
        {"l2_alpha_grid": [0.0]},
        {"log_beta_grid": [-1.0]},
        {"threshold_levels": [1.5]},
        {"selection": "median"},
        {"filter": {"kind": "wavelet"}},
        {"solver": {"tol": -1}},
        {"rel_threshold": 1.0},
        {"l2_s": 0.0},
    ])
    def test_invalid(self, changes):
        with pytest.raises(ExperimentConfigError):
            ExperimentSpec(**changes)

    def test_unknown_keys(self):
        with pytest.raises(ExperimentConfigError):
            ExperimentSpec.from_dict({"m": 10, "grid": [1]})

    def test_config_errors_are_validation_errors(self):
        with pytest.raises(ValidationError):
            ExperimentSpec(trials=0)

    @pytest.mark.parametrize("path", sorted(DEMOS.glob("*.json")), ids=lambda p: p.stem)
    def test_demo_configs_load(self, path):
        spec = ExperimentSpec.from_json(path)
        assert spec.cell_name == path.stem
        assert spec.m == 100
        assert len(spec.log_beta_grid) == 21

    def test_from_json(self, tmp_path):
        path = tmp_path / "cell.json"
        path.write_text(json.dumps({"name": "demo", "m": 20, "trials": 2, "graph": {"kind": "erdos_renyi"},
                                    "sigma_grid": {"logspace": [0.1, 1, 3]}}), encoding="utf-8")
        spec = ExperimentSpec.from_json(path)
        assert spec.cell_name == "demo"
        assert spec.sigma_grid == pytest.approx([0.1, np.sqrt(0.1), 1.0])


class TestPrepareTrial:
    def test_deterministic(self, tiny_spec):
        first, again = prepare_trial(tiny_spec, 1), prepare_trial(tiny_spec, 1)
        assert np.array_equal(first.graph.weights, again.graph.weights)
        assert np.array_equal(first.z, again.z)
        assert not np.array_equal(first.z, prepare_trial(tiny_spec, 0).z)

    def test_unit_mean_distances(self, tiny_spec):
        data = prepare_trial(tiny_spec, 0)
        assert data.z.shape == (edge_count(12),)
        assert data.z.mean() == pytest.approx(1.0)

    def test_raw_distances(self, tiny_spec):
        tiny_spec.normalize_distances = False
        assert prepare_trial(tiny_spec, 0).z.mean() != pytest.approx(1.0)


class TestBaselines:
    def test_single_sigma_reproduces_kernel(self, distances, small_graph):
        w_true = np.concatenate([small_graph, np.ones(edge_count(10) - small_graph.size)])
        best = baseline_gaussian(distances, [0.7], w_true)
        assert set(best) == set(METRICS)
        assert best["edge_l2"].param == 0.7
        assert best["edge_l2"].report.edge_l1 == best["edge_l1"].value

    def test_model_match_recovers_truth(self, distances):
        w_true = gaussian_kernel(distances, 0.5)
        best = baseline_gaussian(distances, [0.1, 0.5, 2.0], w_true)
        assert best["edge_l2"].param == 0.5
        assert best["edge_l2"].value == pytest.approx(0.0, abs=1e-12)
        assert best["degree_l1"].value == pytest.approx(0.0, abs=1e-12)

    def test_zero_threshold_gives_density_floor(self, distances, rng):
        w_true = (rng.uniform(size=edge_count(10)) < 0.3).astype(float)
        edges = np.count_nonzero(w_true)
        curve = threshold_fmeasure_curve(distances, 0.5, [0.0, 2.0], w_true)
        assert curve[0] == pytest.approx(2 * edges / (edges + edge_count(10)))
        assert curve[1] == 0.0

    def test_exact_threshold_recovery(self, distances):
        weights = gaussian_kernel(distances, 0.5)
        tau = np.median(weights)
        w_true = (weights >= tau).astype(float)
        assert baseline_threshold_fmeasure(distances, 0.5, [0.1, tau, 0.99], w_true) == 1.0

    def test_quantile_thresholds(self, distances):
        weights = gaussian_kernel(distances, 0.5)
        thresholds = quantile_thresholds(distances, 0.5, [0.0, 0.5, 1.0])
        assert thresholds[0] == weights.min()
        assert thresholds[1] == pytest.approx(np.median(weights))
        assert thresholds[2] == weights.max()

    def test_empty_grids(self, distances):
        with pytest.raises(ValidationError):
            baseline_gaussian(distances, [], np.ones(edge_count(10)))
        with pytest.raises(ValidationError):
            baseline_threshold_fmeasure(distances, 0.5, [], np.ones(edge_count(10)))


class TestSelectBest:
    VALUES = np.array([[0.2, 0.5, 0.4],
                       [0.3, 0.1, 0.6]])

    def test_mean_rule(self):
        index, chosen = select_best(self.VALUES, "edge_l2")
        assert index.tolist() == [0, 0]
        assert chosen.tolist() == [0.2, 0.3]
        index, chosen = select_best(self.VALUES, "f_measure")
        assert index.tolist() == [2, 2]

    def test_per_trial_rule(self):
        index, chosen = select_best(self.VALUES, "edge_l2", SelectionRule.PER_TRIAL)
        assert index.tolist() == [0, 1]
        assert chosen.tolist() == [0.2, 0.1]

    def test_missing_values_are_skipped(self):
        values = np.array([[np.nan, 0.5], [0.1, 0.6]])
        index, _ = select_best(values, "edge_l1")
        assert index.tolist() == [1, 1]
        index, _ = select_best(values, "edge_l1", SelectionRule.PER_TRIAL)
        assert index.tolist() == [1, 0]


class TestRunExperiment:
    def test_degenerate_protocol(self, tiny_spec):
        tiny_spec.trials = 1
        tiny_spec.log_beta_grid = [1.0]
        tiny_spec.l2_alpha_grid = [0.1]
        tiny_spec.sigma_grid = [0.5]
        tiny_spec.threshold_levels = [0.9]
        records = run_experiment(tiny_spec, executor="serial")
        assert len(records) == len(MODELS) * len(METRICS)
        assert [record.model for record in records[::len(METRICS)]] == list(MODELS)
        assert all(len(record.trial_values) == 1 for record in records)
        assert {record.param for record in records if record.model == "log"} == {1.0}

    def test_records(self, tiny_spec):
        records = run_experiment(tiny_spec, executor="serial")
        by_key = {(record.model, record.metric): record for record in records}
        assert 0 <= by_key[("log", "f_measure")].value <= 1
        assert by_key[("gaussian", "f_measure")].param in tiny_spec.threshold_levels
        assert by_key[("gaussian", "edge_l2")].param in tiny_spec.sigma_grid
        assert by_key[("l2", "degree_l1")].param in tiny_spec.l2_alpha_grid
        for record in records:
            assert record.value == pytest.approx(np.mean(record.trial_values))

    def test_serial_and_threads_agree(self, tiny_spec):
        serial = records_frame(run_experiment(tiny_spec, executor=ExecutorKind.SERIAL))
        threaded = records_frame(run_experiment(tiny_spec, max_workers=4, executor=ExecutorKind.THREAD))
        pd.testing.assert_frame_equal(serial, threaded)

    def test_same_seed_same_records(self, tiny_spec):
        first = run_experiment(tiny_spec, executor="serial")
        second = run_experiment(tiny_spec, executor="serial")
        assert [r.to_dict() for r in first] == [r.to_dict() for r in second]

    def test_per_trial_selection(self, tiny_spec):
        tiny_spec.selection = SelectionRule.PER_TRIAL
        mean_spec = ExperimentSpec.from_dict({**tiny_spec.to_dict(), "selection": "mean"})
        per_trial = {(r.model, r.metric): r.value for r in run_experiment(tiny_spec, executor="serial")}
        mean = {(r.model, r.metric): r.value for r in run_experiment(mean_spec, executor="serial")}
        for (model, metric), value in per_trial.items():
            if metric == "f_measure":
                assert value >= mean[(model, metric)] - 1e-12
            else:
                assert value <= mean[(model, metric)] + 1e-12

    def test_threshold_column_is_best_quantile_level(self, tiny_spec):
        tiny_spec.selection = SelectionRule.PER_TRIAL
        records = run_experiment(tiny_spec, executor="serial")
        record = next(r for r in records if r.model == "gaussian" and r.metric == "f_measure")
        for trial, value in enumerate(record.trial_values):
            data = prepare_trial(tiny_spec, trial)
            sigma = np.sqrt(np.median(data.z))
            thresholds = quantile_thresholds(data.z, sigma, tiny_spec.threshold_levels)
            assert value == pytest.approx(baseline_threshold_fmeasure(data.z, sigma, thresholds, data.graph.weights))

    def test_outputs(self, tiny_spec, tmp_path):
        tiny_spec.name = "tiny"
        run_experiment(tiny_spec, out_dir=tmp_path, executor="serial")
        cell = tmp_path / "tiny"
        assert (cell / "config.json").exists()
        assert (cell / "trials" / "trial_000_truth.edges").exists()
        assert (cell / "trials" / "trial_001_truth.edges").exists()
        records = pd.read_csv(cell / "records.csv")
        assert list(records.columns) == ["graph", "signal", "model", "metric", "param", "value"]
        assert len(records) == 15
        table = pd.read_csv(cell / "table.csv", index_col=0)
        assert list(table.index) == list(METRICS)
        assert list(table.columns) == list(MODELS)
        summary = json.loads((cell / "summary.json").read_text(encoding="utf-8"))
        assert summary["cell"] == "tiny"
        assert set(summary["nonconverged"]) == {"log", "l2", "gaussian", "threshold"}
        assert len(summary["records"]) == 15
        echoed = ExperimentSpec.from_json(cell / "config.json")
        assert echoed == tiny_spec

    def test_results_table_subset_of_models(self, tiny_spec):
        tiny_spec.models = ["log"]
        table = results_table(run_experiment(tiny_spec, executor="serial"))
        assert table.shape == (5, 1)
        assert list(table.columns) == ["log"]

    @pytest.mark.slow
    @pytest.mark.parametrize("demo", ["rgg_tikhonov", "nonuniform_heat", "barabasi_albert_generative",
                                      "er_tikhonov_n100"])
    def test_log_model_beats_kernel_on_every_metric(self, demo):
        base = ExperimentSpec.from_json(DEMOS / f"{demo}.json").to_dict()
        table = results_table(run_experiment(ExperimentSpec.from_dict({**base, "n": 1000, "trials": 10})))
        assert table.loc["f_measure", "log"] > table.loc["f_measure", "gaussian"]
        for metric in ("edge_l1", "edge_l2", "degree_l1", "degree_l2"):
            assert table.loc[metric, "log"] < table.loc[metric, "gaussian"]

    @pytest.mark.slow
    @pytest.mark.parametrize("demo", ["er_tikhonov_n100", "barabasi_albert_generative"])
    def test_fewer_signals_degrade_every_model(self, demo):
        base = ExperimentSpec.from_json(DEMOS / f"{demo}.json").to_dict()
        many = results_table(run_experiment(ExperimentSpec.from_dict({**base, "n": 1000, "trials": 10})))
        few = results_table(run_experiment(ExperimentSpec.from_dict({**base, "n": 100, "trials": 10})))
        for model in MODELS:
            assert few.loc["f_measure", model] < many.loc["f_measure", model]


class TestConnectivity:
    @pytest.mark.slow
    def test_log_model_without_l2_term_never_isolates_nodes(self):
        spec = ExperimentSpec(graph={"kind": "rgg"}, filter={"kind": "tikhonov"}, trials=20)
        isolated = [connectivity(scale_to_unit_alpha(prepare_trial(spec, trial).z, 0.0, spec.solver).w)[1]
                    for trial in range(spec.trials)]
        assert isolated == [0] * 20

    @pytest.mark.slow
    def test_matched_density_on_nonuniform_graph(self):
        """At about two edges per node the l2 model leaves nodes isolated and the log model does not"""
        spec = ExperimentSpec.from_json(DEMOS / "nonuniform_heat.json")
        z = prepare_trial(spec, 0).z

        def closest_to_two(solutions):
            return min(solutions, key=lambda w: abs(edges_per_node(w) - 2.0))

        log_w = closest_to_two([scale_to_unit_alpha(z, beta, spec.solver).w for beta in spec.log_beta_grid])
        l2_w = closest_to_two([learn_l2_degree(z, alpha, spec.l2_s, spec.solver).w for alpha in spec.l2_alpha_grid])
        assert connectivity(log_w)[1] == 0
        assert connectivity(l2_w)[1] > 0
