"""Misclassification error under the best label correspondence, plus run
aggregation."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

__all__ = ["EvalReport", "RunStats", "misclassification", "aggregate"]


@dataclass(frozen=True)
class EvalReport:
    """Percent of points whose estimated label disagrees with ground truth
    under the agreement-maximising one-to-one label map."""

    e_mis: float
    mapping: dict[int, int]
    confusion: np.ndarray
    gt_values: tuple[int, ...]
    est_values: tuple[int, ...]
    n_points: int

    def to_json(self) -> dict:
        return {
            "e_mis": self.e_mis,
            "mapping": {str(k): v for k, v in sorted(self.mapping.items())},
            "confusion": self.confusion.tolist(),
            "gt_values": list(self.gt_values),
            "est_values": list(self.est_values),
            "n_points": self.n_points,
        }


@dataclass(frozen=True)
class RunStats:
    e_mis: tuple[float, ...]
    mean: float
    median: float
    std: float
    selected_counts: tuple[int, ...] | None = None
    seeds: tuple[int, ...] | None = None


def _agreement(gt, est, gt_values, est_values, gt_multi):
    a = np.zeros((len(est_values), len(gt_values)), dtype=np.int64)
    gt_pos = {g: i for i, g in enumerate(gt_values)}
    est_pos = {e: i for i, e in enumerate(est_values)}
    if gt_multi is None:
        for g, e in zip(gt, est):
            if g in gt_pos and e in est_pos:
                a[est_pos[e], gt_pos[g]] += 1
    else:
        for labels, e in zip(gt_multi, est):
            if e not in est_pos:
                continue
            for g in labels:
                if g in gt_pos:
                    a[est_pos[e], gt_pos[g]] += 1
    return a


def misclassification(gt_labels, est_labels, *, pin_outlier: bool = True,
                      gt_multi=None) -> EvalReport:
    """Misclassification error with the outlier label 0 pinned to 0.

    The map from estimated to ground-truth labels is one-to-one and chosen to
    maximise agreement (rectangular assignment, unmatched labels count all
    their points as wrong).  With ``pin_outlier=False`` the 0 label joins the
    matching like any other.  ``gt_multi`` optionally gives per-point label
    sets; a point is then correct when its mapped label is in the set.
    """
    gt = np.asarray(gt_labels, dtype=int)
    est = np.asarray(est_labels, dtype=int)
    if gt.shape != est.shape or gt.ndim != 1:
        raise ValueError(f"label vectors must be 1-D and equal length, got {gt.shape} vs {est.shape}")
    if gt.min(initial=0) < 0 or est.min(initial=0) < 0:
        raise ValueError("labels must be non-negative")
    if gt_multi is not None and len(gt_multi) != gt.shape[0]:
        raise ValueError("gt_multi length must equal point count")
    n = gt.shape[0]
    if n == 0:
        raise ValueError("empty labelings")

    if gt_multi is None:
        gt_pool = set(np.unique(gt).tolist())
    else:
        gt_pool = set()
        for labels in gt_multi:
            gt_pool.update(int(v) for v in labels)
    est_pool = set(np.unique(est).tolist())
    if pin_outlier:
        gt_values = tuple(sorted(v for v in gt_pool if v != 0))
        est_values = tuple(sorted(v for v in est_pool if v != 0))
    else:
        gt_values = tuple(sorted(gt_pool))
        est_values = tuple(sorted(est_pool))

    a = _agreement(gt, est, gt_values, est_values, gt_multi)
    size = max(len(est_values), len(gt_values), 1)
    big = np.int64(size) * size * size * size + 1
    cost = np.zeros((size, size), dtype=np.int64)
    cost[: a.shape[0], : a.shape[1]] = -a * big
    for i in range(size):
        for j in range(size):
            cost[i, j] += i * size + j  # deterministic tie-break toward low indices
    rows, cols = linear_sum_assignment(cost)

    mapping: dict[int, int] = {}
    correct = 0
    for r, c in zip(rows, cols):
        if r < len(est_values) and c < len(gt_values) and a[r, c] > 0:
            mapping[est_values[r]] = gt_values[c]
            correct += int(a[r, c])
    if pin_outlier:
        mapping[0] = 0
        if gt_multi is None:
            correct += int(np.sum((gt == 0) & (est == 0)))
        else:
            correct += sum(1 for labels, e in zip(gt_multi, est) if e == 0 and 0 in labels)

    e_mis = 100.0 * (n - correct) / n
    return EvalReport(e_mis=e_mis, mapping=mapping, confusion=a,
                      gt_values=gt_values, est_values=est_values, n_points=n)


def aggregate(e_mis_values, selected_counts=None, seeds=None) -> RunStats:
    values = tuple(float(v) for v in e_mis_values)
    if not values:
        raise ValueError("no runs to aggregate")
    arr = np.asarray(values)
    std = float(np.std(arr, ddof=1)) if len(values) > 1 else math.nan
    return RunStats(
        e_mis=values,
        mean=float(arr.mean()),
        median=float(np.median(arr)),
        std=std,
        selected_counts=tuple(int(c) for c in selected_counts) if selected_counts is not None else None,
        seeds=tuple(int(s) for s in seeds) if seeds is not None else None,
    )
