import logging
import math

import numpy as np
import pytest
from scipy import optimize

from smoothgraph.exceptions import NonFiniteIterateError, SolverConfigError, ValidationError
from smoothgraph.experiment import ExperimentSpec, prepare_trial
from smoothgraph.graph_core import degree_adjoint, degree_map, edge_count, pairwise_distances
from smoothgraph.solvers import (SolverConfig, coupling_norm, default_step_size, gaussian_kernel, learn,
                                 learn_l2_degree, learn_log_degree, lipschitz_constant, normalize_scale,
                                 objective_value, prox_conjugate_log_barrier, prox_log_barrier,
                                 prox_weighted_l1_nonneg, scale_to_unit_alpha, smooth_gradient)
from smoothgraph.toolkits import make_rng
from smoothgraph.types import ModelKind

TIGHT = SolverConfig(tol=1e-9, max_iter=200_000, track_objective=False)


def _seeds(count: int, fast: int = 5):
    """The first ``fast`` seeds run by default, the rest only with the slow marker."""
    return [seed if seed < fast else pytest.param(seed, marks=pytest.mark.slow) for seed in range(count)]


def _distances(seed: int, m: int = 20) -> np.ndarray:
    z = pairwise_distances(make_rng(seed).uniform(size=(m, 2)))
    return z / z.mean()


@pytest.fixture
def small_distances(rng):
    """Distances of 20 random points in the plane, scaled to unit mean"""
    z = pairwise_distances(rng.uniform(size=(20, 2)))
    return z / z.mean()


class TestSolverConfig:
    def test_defaults(self):
        config = SolverConfig()
        assert config.tol == 1e-4
        assert config.max_iter == 100_000
        assert config.gamma is None

    @pytest.mark.parametrize("changes", [
        {"alpha": -1.0},
        {"beta": -0.1},
        {"s": 0.0},
        {"gamma": 0.0},
        {"tol": 0.0},
        {"max_iter": 0},
        {"sigma": -1.0},
        {"k": 0},
    ])
    def test_invalid(self, changes):
        with pytest.raises(SolverConfigError):
            SolverConfig(**changes)

    def test_replace_validates(self):
        assert SolverConfig().replace(beta=3.0).beta == 3.0
        with pytest.raises(SolverConfigError):
            SolverConfig().replace(tol=-1.0)

    def test_from_dict(self):
        assert SolverConfig.from_dict({"alpha": 2.0}).alpha == 2.0
        with pytest.raises(SolverConfigError):
            SolverConfig.from_dict({"stepsize": 0.1})

    def test_config_errors_are_value_errors(self):
        with pytest.raises(ValueError):
            SolverConfig(alpha=-1.0)


class TestProximalOperators:
    def test_weighted_l1_examples(self):
        assert prox_weighted_l1_nonneg(5.0, 1.0, 1.0) == 3.0
        assert prox_weighted_l1_nonneg(1.0, 1.0, 1.0) == 0.0
        y = np.array([-1.0, 0.5, 2.0])
        assert np.array_equal(prox_weighted_l1_nonneg(y, np.zeros(3), 0.3), [0.0, 0.5, 2.0])

    def test_conjugate_log_barrier_examples(self):
        assert prox_conjugate_log_barrier(0.0, 1.0, 1.0) == pytest.approx(-1.0)
        assert prox_conjugate_log_barrier(3.0, 1.0, 1.0) == pytest.approx((3 - np.sqrt(13)) / 2)
        assert prox_conjugate_log_barrier(3.0, 1.0, 1.0) == pytest.approx(-0.30278, abs=1e-5)

    def test_conjugate_log_barrier_small_weight_limit(self):
        """Approaches min(ybar, 0) as alpha * gamma vanishes"""
        ybar = np.array([-2.0, -0.5, 0.5, 2.0])
        assert np.allclose(prox_conjugate_log_barrier(ybar, 1e-14, 1.0), np.minimum(ybar, 0.0), atol=1e-10)

    @pytest.mark.parametrize("alpha, gamma", [(1.0, 1.0), (2.0, 0.5), (0.3, 0.07)])
    def test_moreau_identity(self, alpha, gamma, rng):
        ybar = rng.standard_normal(7) * 3
        conjugate = prox_conjugate_log_barrier(ybar, alpha, gamma)
        direct = prox_log_barrier(ybar / gamma, alpha, 1.0 / gamma)
        assert np.allclose(conjugate + gamma * direct, ybar, rtol=0, atol=1e-12)

    def test_log_barrier_prox_is_positive(self, rng):
        assert np.all(prox_log_barrier(rng.standard_normal(50) * 10, 1.0, 0.01) > 0)

    def test_weighted_l1_prox_is_nonexpansive(self, rng):
        z = rng.uniform(size=5)
        for gamma in (0.05, 0.5, 3.0):
            for _ in range(20):
                a, b = rng.standard_normal(5) * 4, rng.standard_normal(5) * 4
                gap = prox_weighted_l1_nonneg(a, z, gamma) - prox_weighted_l1_nonneg(b, z, gamma)
                assert np.linalg.norm(gap) <= np.linalg.norm(a - b) + 1e-12

    def test_conjugate_prox_is_nonexpansive(self, rng):
        for _ in range(20):
            a, b = rng.standard_normal(5) * 4, rng.standard_normal(5) * 4
            gap = prox_conjugate_log_barrier(a, 1.5, 0.2) - prox_conjugate_log_barrier(b, 1.5, 0.2)
            assert np.linalg.norm(gap) <= np.linalg.norm(a - b) + 1e-12


class TestSmoothPart:
    def test_log_gradient(self):
        w = np.array([1.0, 2.0, 0.0])
        assert np.array_equal(smooth_gradient("log", w, beta=1.5), 3.0 * w)

    def test_l2_gradient_matches_finite_differences(self, rng):
        w = rng.uniform(size=edge_count(6))

        def f(v):
            degrees = degree_map(v)
            return 0.7 * (2 * v @ v + degrees @ degrees)

        error = optimize.check_grad(f, lambda v: smooth_gradient("l2", v, alpha=0.7), w)
        assert error <= 1e-5 * np.linalg.norm(smooth_gradient("l2", w, alpha=0.7))

    def test_l2_lipschitz_constant_bounds_gradient(self, rng):
        m = 7
        zeta = lipschitz_constant("l2", m, alpha=1.3)
        for _ in range(10):
            a, b = rng.standard_normal(edge_count(m)), rng.standard_normal(edge_count(m))
            change = np.linalg.norm(smooth_gradient("l2", a, alpha=1.3) - smooth_gradient("l2", b, alpha=1.3))
            assert change <= zeta * np.linalg.norm(a - b) * (1 + 1e-12)

    def test_lipschitz_constants(self):
        assert lipschitz_constant("log", 10, beta=2.0) == 4.0
        assert lipschitz_constant("l2", 10, alpha=1.0) == 40.0

    def test_gaussian_has_no_smooth_part(self):
        with pytest.raises(ValidationError):
            smooth_gradient("gaussian", np.ones(3))

    def test_coupling_norms(self):
        assert coupling_norm("log", 5) == pytest.approx(np.sqrt(8))
        assert coupling_norm("l2", 5) == pytest.approx(2 * np.sqrt(10))
        assert coupling_norm("l2", 5) == pytest.approx(np.linalg.norm(2 * np.ones(10)))

    def test_default_step_size(self):
        assert default_step_size("log", 2, beta=1.0) == pytest.approx(0.99 / (2 + np.sqrt(2)))
        assert default_step_size("log", 2, beta=1.0, lipschitz=0.0) == pytest.approx(0.99 / np.sqrt(2))


class TestObjective:
    def test_log_examples(self):
        assert objective_value("log", [1.0], [1.0], alpha=1.0, beta=1.0) == pytest.approx(3.0)
        assert objective_value("log", [0.0, 0.0, 0.0], [1.0, 1.0, 1.0]) == math.inf

    def test_negative_weights(self):
        assert objective_value("l2", [-1.0, 1.0, 1.0], [1.0, 1.0, 1.0]) == math.inf

    def test_l2_without_degree_penalty(self, rng):
        w, z = rng.uniform(size=6), rng.uniform(size=6)
        assert objective_value("l2", z, w, alpha=0.0) == pytest.approx(2 * w @ z)

    def test_l1_absorbed_into_distances(self, rng):
        """Adding gamma * ||w||_1 equals shifting z by gamma / 2"""
        w, z = rng.uniform(size=10), rng.uniform(size=10)
        base = objective_value("log", z, w, alpha=1.0, beta=0.5)
        shifted = objective_value("log", z + 0.4 / 2, w, alpha=1.0, beta=0.5)
        assert shifted == pytest.approx(base + 0.4 * w.sum(), rel=1e-12)

    def test_gaussian_needs_sigma(self):
        with pytest.raises(SolverConfigError):
            objective_value("gaussian", [1.0], [0.5])

    def test_knn_has_no_objective(self):
        with pytest.raises(ValidationError):
            objective_value("knn", [1.0], [1.0])


class TestLogDegree:
    @pytest.mark.parametrize("alpha, beta", [(1.0, 1.0), (4.0, 1.0), (1.0, 4.0)])
    def test_single_edge(self, alpha, beta):
        """With z = 0 the optimum is sqrt(alpha / beta)"""
        result = learn_log_degree(np.zeros(1), alpha, beta, TIGHT)
        assert result.converged
        assert result.w[0] == pytest.approx(np.sqrt(alpha / beta), rel=1e-6)

    @pytest.mark.parametrize("m", [3, 4, 5, 6])
    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_matches_quasi_newton_oracle(self, m, seed):
        rng = make_rng(seed)
        z = rng.uniform(0.0, 1.0, edge_count(m))
        result = learn_log_degree(z, 1.0, 1.0, TIGHT)

        def f(w):
            return objective_value("log", z, w, alpha=1.0, beta=1.0)

        def grad(w):
            return 2 * z - degree_adjoint(1 / degree_map(w)) + 2 * w

        # A tiny positive lower bound keeps every degree positive during the line search.
        oracle = optimize.minimize(f, np.ones(z.size), jac=grad, method="L-BFGS-B",
                                   bounds=[(1e-12, None)] * z.size,
                                   options={"gtol": 1e-12, "ftol": 1e-15, "maxiter": 10_000}).x
        assert result.converged
        assert np.linalg.norm(result.w - oracle) <= 1e-3 * np.linalg.norm(oracle)
        assert f(result.w) <= f(oracle) + 1e-3 * abs(f(oracle))

    def test_degrees_stay_positive_without_l2_term(self, small_distances):
        result = scale_to_unit_alpha(small_distances, 0.0, TIGHT.replace(tol=1e-6))
        assert result.degrees.min() > 0
        assert np.all(result.w >= 0)

    @pytest.mark.parametrize("seed", _seeds(50))
    def test_alpha_scaling(self, seed):
        """The solution for (alpha, beta) is alpha times the solution for (1, alpha * beta)"""
        rng = make_rng(seed, 1)
        alpha, beta = rng.uniform(0.5, 4.0), rng.uniform(0.25, 2.0)
        z = _distances(seed)
        full = learn_log_degree(z, alpha, beta, TIGHT).w
        unit = scale_to_unit_alpha(z, alpha * beta, TIGHT).w
        assert np.linalg.norm(full - alpha * unit) <= 1e-4 * np.linalg.norm(full)

    def test_general_rescaling(self, small_distances):
        """F(z, alpha, beta) = c F(z, alpha / c, beta c) for c = 3"""
        full = learn_log_degree(small_distances, 1.0, 1.0, TIGHT).w
        scaled = learn_log_degree(small_distances, 1.0 / 3, 3.0, TIGHT).w
        assert np.linalg.norm(full - 3 * scaled) <= 1e-4 * np.linalg.norm(full)

    def test_result_fields(self, small_distances):
        result = learn_log_degree(small_distances, config=SolverConfig(tol=1e-5))
        assert result.model is ModelKind.LOG_DEGREE
        assert result.d.shape == (20,)
        assert result.c is None
        assert len(result.rel_change_trace) == result.iterations
        assert len(result.objective_trace) == result.iterations
        assert result.objective_trace[-1] == result.final_objective
        assert np.allclose(result.degrees, degree_map(result.w))
        assert result.gamma == pytest.approx(default_step_size("log", 20, beta=1.0))

    def test_larger_beta_gives_denser_graph(self, small_distances):
        sparse = scale_to_unit_alpha(small_distances, 0.01, TIGHT.replace(tol=1e-6)).w
        dense = scale_to_unit_alpha(small_distances, 100.0, TIGHT.replace(tol=1e-6)).w
        assert np.count_nonzero(dense > 1e-4 * dense.max()) > np.count_nonzero(sparse > 1e-4 * sparse.max())

    def test_nonconvergence_is_flagged(self, small_distances, caplog):
        with caplog.at_level(logging.WARNING, logger="smoothgraph.solvers"):
            result = learn_log_degree(small_distances, config=SolverConfig(max_iter=3))
        assert not result.converged
        assert result.iterations == 3
        assert "did not converge" in caplog.text

    def test_large_step_warns(self, caplog):
        with caplog.at_level(logging.WARNING, logger="smoothgraph.solvers"):
            learn_log_degree(np.ones(1), config=SolverConfig(gamma=10.0, max_iter=2))
        assert "Step size" in caplog.text

    def test_non_finite_iterate(self):
        with pytest.raises(NonFiniteIterateError) as info:
            learn_log_degree(np.ones(3), config=SolverConfig(max_iter=5), w0=np.full(3, np.inf))
        assert info.value.iteration == 1
        assert info.value.variable == "w"

    def test_invalid_inputs(self):
        with pytest.raises(SolverConfigError):
            learn_log_degree(np.ones(3), alpha=0.0)
        with pytest.raises(ValidationError):
            learn_log_degree(np.array([1.0, -1.0, 1.0]))
        with pytest.raises(ValidationError):
            learn_log_degree(np.ones(4))

    @pytest.mark.slow
    def test_thousand_nodes(self):
        data = prepare_trial(ExperimentSpec(graph={"kind": "rgg"}, m=1000, trials=1), 0)
        result = scale_to_unit_alpha(data.z, 1.0, SolverConfig(track_objective=False))
        assert result.converged
        assert result.w.size == edge_count(1000)
        assert np.all(np.isfinite(result.w)) and np.all(result.w >= 0)
        assert result.degrees.min() > 0


class TestL2Degree:
    @pytest.mark.parametrize("m", [3, 4, 5, 6])
    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_matches_constrained_oracle(self, m, seed):
        rng = make_rng(seed)
        size = edge_count(m)
        z = rng.uniform(size=size)
        result = learn_l2_degree(z, 1.0, 1.0, TIGHT)

        def f(w):
            return objective_value("l2", z, w, alpha=1.0)

        oracle = optimize.minimize(
            f,
            np.full(size, 1 / (2 * size)),
            jac=lambda w: 2 * z + smooth_gradient("l2", w, alpha=1.0),
            method="SLSQP",
            bounds=[(0, None)] * size,
            constraints=[{"type": "eq", "fun": lambda w: 2 * w.sum() - 1.0, "jac": lambda w: 2 * np.ones(size)}],
            options={"ftol": 1e-15, "maxiter": 1000},
        ).x
        assert result.converged
        assert np.linalg.norm(result.w - oracle) <= 1e-3 * np.linalg.norm(oracle)
        assert f(result.w) <= f(oracle) + 1e-3 * abs(f(oracle))

    def test_total_weight(self, small_distances):
        result = learn_l2_degree(small_distances, 0.5, 20.0, TIGHT)
        assert 2 * result.w.sum() == pytest.approx(20.0, rel=1e-5)
        assert np.all(result.w >= 0)

    def test_without_degree_penalty_picks_closest_pair(self):
        z = np.array([0.5, 0.1, 0.9])
        result = learn_l2_degree(z, 0.0, 1.0, TIGHT)
        assert np.allclose(result.w, [0.0, 0.5, 0.0], atol=1e-3)

    def test_shift_invariance(self, small_distances):
        base = learn_l2_degree(small_distances, 0.3, 20.0, TIGHT).w
        shifted = learn_l2_degree(small_distances + 2.5, 0.3, 20.0, TIGHT).w
        assert np.linalg.norm(base - shifted) <= 1e-5 * np.linalg.norm(base)

    @pytest.mark.parametrize("seed", _seeds(25))
    def test_scale_rescaling(self, seed):
        """H(z, alpha, s) = s H(z, alpha s, 1)"""
        rng = make_rng(seed, 1)
        alpha, s = rng.uniform(0.01, 0.1), rng.uniform(5.0, 40.0)
        z = _distances(seed)
        full = learn_l2_degree(z, alpha, s, TIGHT).w
        unit = learn_l2_degree(z, alpha * s, 1.0, TIGHT).w
        assert np.linalg.norm(full - s * unit) <= 1e-4 * np.linalg.norm(full)

    def test_result_fields(self, small_distances):
        result = learn_l2_degree(small_distances, 1.0, 20.0)
        assert result.model is ModelKind.L2_DEGREE
        assert result.d is None
        assert isinstance(result.c, float)
        assert result.gamma == pytest.approx(0.99 / (80 + 2 * np.sqrt(190)))

    def test_invalid_scale(self):
        with pytest.raises(SolverConfigError):
            learn_l2_degree(np.ones(3), s=0.0)


class TestGaussianKernel:
    def test_examples(self):
        assert gaussian_kernel(np.array([0.0]), 1.0)[0] == 1.0
        assert gaussian_kernel(np.array([2 * 0.3 ** 2]), 0.3)[0] == pytest.approx(np.exp(-1), rel=1e-12)

    def test_minimizes_entropy_objective(self, rng):
        z = rng.uniform(size=10)
        w = gaussian_kernel(z, 0.5)
        best = objective_value("gaussian", z, w, sigma=0.5)
        for _ in range(20):
            perturbed = np.maximum(w + rng.normal(scale=0.05, size=10), 0.0)
            assert objective_value("gaussian", z, perturbed, sigma=0.5) >= best

    def test_invalid_sigma(self):
        with pytest.raises(SolverConfigError):
            gaussian_kernel(np.ones(3), 0.0)


class TestLearn:
    def test_dispatch(self, small_distances):
        config = SolverConfig(tol=1e-3, sigma=0.5, k=3, s=20.0)
        assert learn(small_distances, config, "log").model is ModelKind.LOG_DEGREE
        assert learn(small_distances, config, "l2").model is ModelKind.L2_DEGREE
        gaussian = learn(small_distances, config, "gaussian")
        assert np.allclose(gaussian.w, gaussian_kernel(small_distances, 0.5))
        assert np.isfinite(gaussian.final_objective)

    def test_knn_weighting(self, small_distances):
        binary = learn(small_distances, SolverConfig(k=3), "knn").w
        weighted = learn(small_distances, SolverConfig(k=3, sigma=0.5), "knn").w
        assert set(np.unique(binary)) <= {0.0, 1.0}
        assert np.array_equal(binary > 0, weighted > 0)

    def test_missing_parameters(self, small_distances):
        with pytest.raises(SolverConfigError):
            learn(small_distances, SolverConfig(), "gaussian")
        with pytest.raises(SolverConfigError):
            learn(small_distances, SolverConfig(), "knn")

    def test_summary(self, small_distances):
        summary = learn(small_distances, SolverConfig(sigma=1.0), "gaussian").summary()
        assert summary["model"] == "gaussian"
        assert summary["iterations"] == 0


class TestNormalizeScale:
    def test_norms(self):
        assert np.allclose(normalize_scale([1.0, 3.0]), [0.25, 0.75])
        assert np.allclose(normalize_scale([3.0, 4.0], norm=2), [0.6, 0.8])

    def test_zero_vector(self):
        assert np.array_equal(normalize_scale(np.zeros(3)), np.zeros(3))

    def test_invalid_norm(self):
        with pytest.raises(ValidationError):
            normalize_scale([1.0], norm=3)
