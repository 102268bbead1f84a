import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rqumf.metrics import aggregate, misclassification


def brute_force_emis(gt, est):
    """Oracle: try every one-to-one map of nonzero est labels to nonzero gt
    labels (0 pinned to 0) and take the best."""
    from itertools import permutations

    gt = np.asarray(gt)
    est = np.asarray(est)
    gvals = sorted(set(gt.tolist()) - {0})
    evals = sorted(set(est.tolist()) - {0})
    size = max(len(gvals), len(evals))
    gpad = gvals + [None] * (size - len(gvals))
    best_correct = -1
    for perm in permutations(gpad):
        mapping = {e: g for e, g in zip(evals, perm)}
        mapping[0] = 0
        correct = sum(1 for g, e in zip(gt, est) if mapping.get(e) == g)
        best_correct = max(best_correct, correct)
    return 100.0 * (len(gt) - best_correct) / len(gt)


class TestMisclassification:
    def test_identical_labelings(self):
        gt = [1, 1, 2, 2, 0]
        assert misclassification(gt, gt).e_mis == 0.0

    def test_label_permutation_absorbed(self):
        gt = [1, 1, 2, 2, 3, 0]
        est = [3, 3, 1, 1, 2, 0]
        assert misclassification(gt, est).e_mis == 0.0

    def test_hand_case_twenty_percent(self):
        report = misclassification([1, 1, 2, 2, 0], [1, 1, 1, 2, 0])
        assert report.e_mis == pytest.approx(20.0)
        assert report.mapping[1] == 1
        assert report.mapping[2] == 2

    def test_matches_brute_force_oracle(self, rng):
        for _ in range(50):
            n = int(rng.integers(4, 12))
            gt = rng.integers(0, 4, size=n)
            est = rng.integers(0, 4, size=n)
            assert misclassification(gt, est).e_mis == pytest.approx(brute_force_emis(gt, est))

    def test_one_flipped_point_raises_by_quantum(self, rng):
        n = 12
        gt = np.asarray([1 + i % 3 for i in range(n)])
        est = gt.copy()
        est = np.append(est, [9])
        gt = np.append(gt, [1])
        # 13 points, one wrong: the extra label 9 cannot map to anything free
        report = misclassification(gt, est)
        assert report.e_mis == pytest.approx(100.0 / 13)

    def test_optimal_mapping_never_worse_than_identity(self, rng):
        for _ in range(30):
            n = int(rng.integers(5, 15))
            gt = rng.integers(0, 5, size=n)
            est = rng.integers(0, 5, size=n)
            identity_correct = int(np.sum(gt == est))
            identity_emis = 100.0 * (n - identity_correct) / n
            assert misclassification(gt, est).e_mis <= identity_emis + 1e-12

    def test_outlier_label_pinned_by_default(self):
        # est swaps outliers and structure; pinned mode cannot absorb that
        gt = [0, 0, 1, 1]
        est = [1, 1, 0, 0]
        assert misclassification(gt, est).e_mis == pytest.approx(100.0)
        assert misclassification(gt, est, pin_outlier=False).e_mis == pytest.approx(0.0)

    def test_multi_label_ground_truth(self):
        gt = [1, 1, 2, 2]
        gt_multi = [{1}, {1, 2}, {2}, {2}]
        est = [1, 2, 2, 2]  # point 1 sits on both structures
        assert misclassification(gt, est).e_mis == pytest.approx(25.0)
        assert misclassification(gt, est, gt_multi=gt_multi).e_mis == pytest.approx(0.0)

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            misclassification([1, 2], [1])

    def test_negative_labels_rejected(self):
        with pytest.raises(ValueError):
            misclassification([1, -1], [1, 1])


@settings(max_examples=50, deadline=None)
@given(st.integers(min_value=0, max_value=2**31 - 1))
def test_bijection_invariance_property(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 20))
    gt = rng.integers(0, 5, size=n)
    est = rng.integers(0, 5, size=n)
    base = misclassification(gt, est).e_mis
    perm = rng.permutation(np.arange(1, 10))
    relabel = np.concatenate([[0], perm])
    assert misclassification(gt, relabel[est]).e_mis == pytest.approx(base)
    assert misclassification(relabel[gt], est).e_mis == pytest.approx(base)


class TestAggregate:
    def test_single_run(self):
        stats = aggregate([7.5])
        assert stats.mean == stats.median == 7.5
        assert math.isnan(stats.std)

    def test_two_runs(self):
        stats = aggregate([0.0, 10.0])
        assert stats.mean == 5.0
        assert stats.median == 5.0

    def test_carries_counts_and_seeds(self):
        stats = aggregate([1.0, 2.0], selected_counts=[5, 6], seeds=[10, 11])
        assert stats.selected_counts == (5, 6)
        assert stats.seeds == (10, 11)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            aggregate([])
