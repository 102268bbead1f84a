import numpy as np
import pytest

from rqumf.geometry import ModelKind, SyntheticConfig, fit_minimal, generate_pentagon
from rqumf.pipeline import (
    BaselineConfig,
    DecomposeConfig,
    assign_labels,
    count_selected,
    fit_derqumf,
    fit_qumf_baseline,
    fit_rqumf,
)
from rqumf.preference import ConsensusConfig, build_preference
from rqumf.qubo import QuboParams, build_coverage_qubo, energy
from rqumf.solvers import SaConfig, solve_exhaustive, solve_sa

from conftest import random_coverage_instance


def exhaustive_solver(problem, config):
    return solve_exhaustive(problem)


def sa_solver(problem, config):
    return solve_sa(problem, config)


class TestFitOneShot:
    def test_identity_preference_selects_every_model(self):
        # each model covers exactly one point; with lambda1 < 1 selecting all
        # three is optimal and the energy is -3 + 3 * lambda1
        params = QuboParams(0.4, 2.0)
        result = fit_rqumf(np.eye(3, dtype=np.uint8), params, exhaustive_solver)
        assert result.selected == (0, 1, 2)
        assert result.labels.tolist() == [1, 2, 3]
        assert result.penalty == 0.0
        assert result.energy == pytest.approx(-3 + 3 * 0.4)

    def test_single_shared_model(self):
        params = QuboParams(0.5, 2.0)
        result = fit_rqumf(np.ones((3, 1), dtype=np.uint8), params, exhaustive_solver)
        assert result.selected == (0,)
        assert result.labels.tolist() == [1, 1, 1]
        assert result.energy == pytest.approx(-2.5)

    def test_empty_column_never_selected(self, rng):
        for _ in range(5):
            p, params = random_coverage_instance(rng, max_vars=12, lambda2_min=1.1)
            p[:, 0] = 0
            result = fit_rqumf(p, params, exhaustive_solver, dedup=False)
            assert 0 not in result.selected

    def test_energy_and_penalty_recomputable(self, rng):
        for _ in range(10):
            p, params = random_coverage_instance(rng, max_vars=14)
            result = fit_rqumf(p, params, exhaustive_solver)
            z = np.zeros(p.shape[1])
            z[list(result.selected)] = 1.0
            w = np.concatenate([result.y, z])
            problem = build_coverage_qubo(p, params)
            assert energy(problem, w) == pytest.approx(result.energy, abs=1e-9)
            viol = p.astype(float) @ z - result.y
            assert result.penalty == pytest.approx(float(viol @ viol), abs=1e-9)

    def test_labels_only_on_covered_points(self, rng):
        for _ in range(10):
            p, params = random_coverage_instance(rng, max_vars=14)
            result = fit_rqumf(p, params, exhaustive_solver)
            for i, label in enumerate(result.labels):
                if label:
                    assert p[i, result.selected[label - 1]] == 1

    def test_pareto_efficiency_with_dominant_penalty(self, rng):
        # with lambda2 > 1 + lambda1 * m the optimum has zero violation and no
        # feasible selection covers more with as few models
        from conftest import all_assignments

        for _ in range(5):
            n, m = 5, 4
            p = (rng.random((n, m)) < 0.45).astype(np.uint8)
            params = QuboParams(0.8, 1.0 + 0.8 * m + 1.0)
            result = fit_rqumf(p, params, exhaustive_solver, dedup=False)
            assert result.penalty == 0.0
            covered = int(result.y.sum())
            k = len(result.selected)
            for z_bits in all_assignments(m):
                c = p.astype(int) @ z_bits
                if np.all(c <= 1):  # feasible disjoint selection
                    alt_cov, alt_k = int((c == 1).sum()), int(z_bits.sum())
                    assert not (alt_cov > covered and alt_k <= k) or (
                        -alt_cov + params.lambda1 * alt_k >= result.energy - 1e-9)


class TestDecomposed:
    def test_single_block_equals_one_shot(self, rng):
        p, params = random_coverage_instance(rng, max_vars=16)
        config = SaConfig(num_samples=20, sweeps_per_sample=100, seed=5)
        decomp = DecomposeConfig(subproblem_size=max(2, p.shape[1]), partition_seed=1)
        one = fit_rqumf(p, params, sa_solver, config)
        de = fit_derqumf(p, params, decomp, sa_solver, config)
        assert de.selected == one.selected
        assert de.labels.tolist() == one.labels.tolist()
        assert de.energy == one.energy
        assert de.penalty == one.penalty
        np.testing.assert_array_equal(de.y, one.y)

    def test_survivor_counts_decrease(self, rng):
        cfg = SyntheticConfig(total_points=20, outlier_fraction=0.2, seed=6)
        points, gt_models = generate_pentagon(cfg)
        from rqumf.geometry import sample_hypotheses

        models = gt_models + sample_hypotheses(points, ModelKind.LINE2D, 45, seed=2)
        matrix = build_preference(points, models, ConsensusConfig(epsilon=0.03))
        decomp = DecomposeConfig(subproblem_size=10, partition_seed=3)
        result = fit_derqumf(matrix, QuboParams(2.0, 1.1), decomp, sa_solver,
                             SaConfig(num_samples=30, sweeps_per_sample=200, seed=9))
        survivors = result.diagnostics["survivors_per_round"]
        assert survivors, "expected at least one decomposition round"
        cols = [matrix.m] + survivors
        assert all(b < a for a, b in zip(cols, cols[1:])) or result.diagnostics["rounds"] >= 1
        assert len(result.selected) <= 10

    def test_empty_survivors_returns_all_outliers(self):
        # no column is worth selecting when lambda1 exceeds any coverage gain
        p = np.zeros((6, 8), dtype=np.uint8)
        p[0, :] = 1  # every model covers only point 0
        params = QuboParams(3.0, 1.5)
        decomp = DecomposeConfig(subproblem_size=3, partition_seed=0)
        result = fit_derqumf(p, params, decomp, exhaustive_solver)
        assert result.selected == ()
        assert result.labels.tolist() == [0] * 6
        assert result.penalty == 0.0

    def test_decomposed_matches_quality_of_one_shot_on_synthetic(self):
        cfg = SyntheticConfig(total_points=24, outlier_fraction=0.25, seed=12)
        points, gt_models = generate_pentagon(cfg)
        from rqumf.geometry import sample_hypotheses

        models = gt_models + sample_hypotheses(points, ModelKind.LINE2D, 55, seed=4)
        matrix = build_preference(points, models, ConsensusConfig(epsilon=0.03))
        params = QuboParams(2.5, 1.1)
        sa_cfg = SaConfig(seed=8)
        decomp = DecomposeConfig(subproblem_size=15, partition_seed=2)
        one = fit_rqumf(matrix, params, sa_solver, sa_cfg, points=points, models=models)
        de = fit_derqumf(matrix, params, decomp, sa_solver, sa_cfg, points=points, models=models)
        assert de.energy <= one.energy + 1e-9 or de.energy == pytest.approx(one.energy, abs=2.0)


class TestAssignLabels:
    def test_no_selection_all_outliers(self):
        labels = assign_labels(np.eye(3, dtype=np.uint8), [])
        assert labels.tolist() == [0, 0, 0]

    def test_disjoint_selection_matches_coverage(self):
        p = np.array([[1, 0], [1, 0], [0, 1]], dtype=np.uint8)
        labels = assign_labels(p, [0, 1])
        assert labels.tolist() == [1, 1, 2]

    def test_overlap_resolved_by_smaller_residual(self):
        # point at the intersection zone of two lines, slightly closer to the
        # second one
        from rqumf.geometry import PointSet

        line_a = fit_minimal(ModelKind.LINE2D, [[0.0, 0.0], [1.0, 0.0]])  # y=0
        line_b = fit_minimal(ModelKind.LINE2D, [[0.0, 0.1], [1.0, 0.1]])  # y=0.1
        points = PointSet(coords=[[0.5, 0.06], [2.0, 0.0], [2.0, 0.1]])
        matrix = build_preference(points, [line_a, line_b], ConsensusConfig(epsilon=0.2))
        labels = assign_labels(matrix, [0, 1], points=points, models=[line_a, line_b])
        assert labels.tolist() == [2, 1, 2]

    def test_overlap_fallback_prefers_larger_consensus(self):
        p = np.array([[1, 1], [0, 1], [0, 1]], dtype=np.uint8)
        labels = assign_labels(p, [0, 1])
        assert labels[0] == 2  # column 1 has the larger consensus

    def test_permuting_unselected_columns_is_irrelevant(self, rng):
        p = (rng.random((8, 6)) < 0.4).astype(np.uint8)
        base = assign_labels(p, [1, 4])
        q = p.copy()
        q[:, [0, 2]] = q[:, [2, 0]]  # swap two unselected columns
        np.testing.assert_array_equal(assign_labels(q, [1, 4]), base)

    def test_selected_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            assign_labels(np.eye(2, dtype=np.uint8), [5])


class TestBaseline:
    def test_exact_cover_selected_when_available(self):
        # three disjoint models cover everything; baseline takes them all
        p = np.zeros((6, 4), dtype=np.uint8)
        p[0:2, 0] = 1
        p[2:4, 1] = 1
        p[4:6, 2] = 1
        p[0, 3] = 1  # redundant overlap column
        result = fit_qumf_baseline(p, BaselineConfig(lam=0.5), exhaustive_solver)
        assert result.selected == (0, 1, 2)
        assert result.method == "QuMF"
        assert result.y.tolist() == [1] * 6
        # objective value: lam * 3 + zero violation
        assert result.energy == pytest.approx(1.5)

    def test_forced_coverage_selects_outlier_absorbers(self):
        # one isolated point is only coverable by a tiny column; set cover
        # pays for it, the robust objective would not
        p = np.zeros((5, 2), dtype=np.uint8)
        p[0:4, 0] = 1
        p[4, 1] = 1
        base = fit_qumf_baseline(p, BaselineConfig(lam=0.5), exhaustive_solver)
        assert base.selected == (0, 1)
        robust = fit_rqumf(p, QuboParams(1.5, 1.2), exhaustive_solver)
        assert robust.selected == (0,)

    def test_top_k_truncation(self):
        p = np.zeros((7, 3), dtype=np.uint8)
        p[0:4, 0] = 1
        p[4:6, 1] = 1
        p[6, 2] = 1
        result = fit_qumf_baseline(p, BaselineConfig(lam=0.3, top_k=2), exhaustive_solver)
        assert result.method == "QuMFPostK"
        assert count_selected(result) == 2
        assert result.selected == (0, 1)  # largest consensus survives
        assert result.labels.tolist() == [1, 1, 1, 1, 2, 2, 0]
        assert result.y.tolist() == [1, 1, 1, 1, 1, 1, 0]

    def test_top_k_noop_keeps_labels(self, rng):
        p = (rng.random((10, 5)) < 0.45).astype(np.uint8)
        plain = fit_qumf_baseline(p, BaselineConfig(lam=0.4), exhaustive_solver)
        k = len(plain.selected)
        if k:
            post = fit_qumf_baseline(p, BaselineConfig(lam=0.4, top_k=k), exhaustive_solver)
            assert post.selected == plain.selected
            assert post.labels.tolist() == plain.labels.tolist()

    def test_count_selected(self):
        p = np.eye(4, dtype=np.uint8)
        result = fit_rqumf(p, QuboParams(0.2, 2.0), exhaustive_solver)
        assert count_selected(result) == 4


class TestConfigs:
    def test_decompose_validation(self):
        with pytest.raises(ValueError):
            DecomposeConfig(subproblem_size=1)

    def test_baseline_validation(self):
        with pytest.raises(ValueError):
            BaselineConfig(lam=-1.0)
        with pytest.raises(ValueError):
            BaselineConfig(top_k=0)

    def test_fitresult_label_range_validated(self):
        from rqumf.pipeline import FitResult

        with pytest.raises(ValueError):
            FitResult(method="RQuMF", selected=(0,), labels=np.array([2]),
                      energy=0.0, penalty=0.0, y=np.array([1]))
