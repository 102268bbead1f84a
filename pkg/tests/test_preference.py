import numpy as np
import pytest

from rqumf.geometry import ModelHypothesis, ModelKind, PointSet, SyntheticConfig, generate_pentagon
from rqumf.preference import (
    ConsensusConfig,
    ParseError,
    PreferenceMatrix,
    build_preference,
    column_stats,
    load_preference,
    prune_empty_columns,
    row_stats,
    save_preference,
)


def line(a, b, c):
    p = np.array([a, b, c], dtype=float)
    p[:2] /= np.linalg.norm(p[:2])
    return ModelHypothesis(ModelKind.LINE2D, p)


class TestBuildPreference:
    def test_point_on_model_is_member(self):
        points = PointSet(coords=[[3.0, 0.0]])
        matrix = build_preference(points, [line(0, 1, 0)], ConsensusConfig(epsilon=0.1))
        assert matrix.data[0, 0] == 1

    def test_threshold_is_strict(self):
        points = PointSet(coords=[[0.0, 0.1]])
        matrix = build_preference(points, [line(0, 1, 0)], ConsensusConfig(epsilon=0.1))
        assert matrix.data[0, 0] == 0

    def test_gt_columns_cover_most_inliers(self):
        # Gaussian tail: P(|N(0, 0.01)| < 0.03) ~ 0.997, so over seeds each
        # injected column covers at least 80% of its structure
        for seed in range(5):
            cfg = SyntheticConfig(total_points=30, outlier_fraction=1 / 6, noise_sigma=0.01, seed=seed)
            points, models = generate_pentagon(cfg)
            matrix = build_preference(points, models, ConsensusConfig(epsilon=0.03))
            for k in range(5):
                members = matrix.data[points.gt_labels == k + 1, k]
                assert members.mean() >= 0.8

    def test_column_permutation_equivariance(self, rng):
        cfg = SyntheticConfig(total_points=20, seed=8)
        points, models = generate_pentagon(cfg)
        matrix = build_preference(points, models, ConsensusConfig(epsilon=0.05))
        perm = rng.permutation(len(models))
        permuted = build_preference(points, [models[i] for i in perm], ConsensusConfig(epsilon=0.05))
        np.testing.assert_array_equal(permuted.data, matrix.data[:, perm])

    def test_monotone_in_epsilon(self):
        cfg = SyntheticConfig(total_points=25, seed=3)
        points, models = generate_pentagon(cfg)
        small = build_preference(points, models, ConsensusConfig(epsilon=0.01))
        large = build_preference(points, models, ConsensusConfig(epsilon=0.08))
        assert np.all(small.data <= large.data)

    def test_empty_model_list_rejected(self):
        with pytest.raises(ValueError):
            build_preference(PointSet(coords=[[0.0, 0.0]]), [], ConsensusConfig(epsilon=0.1))

    def test_dimension_mismatch_rejected(self):
        points = PointSet(coords=[[0.0, 0.0, 0.0]])
        with pytest.raises(ValueError):
            build_preference(points, [line(0, 1, 0)], ConsensusConfig(epsilon=0.1))

    def test_epsilon_validation(self):
        with pytest.raises(ValueError):
            ConsensusConfig(epsilon=0.0)


class TestStats:
    def test_all_zero(self):
        m = PreferenceMatrix(data=np.zeros((2, 2), dtype=np.uint8))
        assert column_stats(m).tolist() == [0, 0]
        assert row_stats(m).tolist() == [0, 0]

    def test_identity(self):
        m = PreferenceMatrix(data=np.eye(3, dtype=np.uint8))
        assert column_stats(m).tolist() == [1, 1, 1]
        assert row_stats(m).tolist() == [1, 1, 1]

    def test_double_counting_identity(self, rng):
        data = (rng.random((8, 5)) < 0.4).astype(np.uint8)
        m = PreferenceMatrix(data=data)
        assert column_stats(m).sum() == row_stats(m).sum() == data.sum()

    def test_prune_empty_columns(self):
        data = np.array([[1, 0, 1], [0, 0, 1]], dtype=np.uint8)
        m = PreferenceMatrix(data=data, column_ids=(10, 11, 12))
        pruned, kept = prune_empty_columns(m)
        assert kept.tolist() == [0, 2]
        assert pruned.column_ids == (10, 12)
        np.testing.assert_array_equal(pruned.data, data[:, [0, 2]])


class TestRoundTrip:
    def test_save_load_identity(self, rng, tmp_path):
        data = (rng.random((3, 4)) < 0.5).astype(np.uint8)
        m = PreferenceMatrix(data=data)
        path = tmp_path / "pref.csv"
        save_preference(m, path, epsilon=0.03)
        loaded = load_preference(path)
        np.testing.assert_array_equal(loaded.data, m.data)
        assert loaded.column_ids == m.column_ids

    def test_sidecar_carries_ids(self, tmp_path):
        m = PreferenceMatrix(data=np.eye(2, dtype=np.uint8), column_ids=(7, 9))
        path = tmp_path / "pref.csv"
        save_preference(m, path)
        assert load_preference(path).column_ids == (7, 9)

    def test_non_binary_entry_rejected_with_location(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("0,1\n0,2\n")
        with pytest.raises(ParseError, match="2"):
            load_preference(path)

    def test_ragged_rows_rejected(self, tmp_path):
        path = tmp_path / "ragged.csv"
        path.write_text("0,1\n0\n")
        with pytest.raises(ParseError, match="ragged"):
            load_preference(path)

    def test_empty_file_rejected(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("")
        with pytest.raises(ParseError):
            load_preference(path)


class TestValidation:
    def test_entries_must_be_binary(self):
        with pytest.raises(ValueError):
            PreferenceMatrix(data=np.array([[2]], dtype=np.uint8))

    def test_ids_must_be_distinct(self):
        with pytest.raises(ValueError):
            PreferenceMatrix(data=np.eye(2, dtype=np.uint8), column_ids=(1, 1))
