"""End-to-end fitting: one-shot coverage fit, the decomposed variant, label
assignment, and the non-robust set-cover baseline with top-k post-processing.

All fitters share one contract: they receive a preference matrix plus a
solver callable ``(QuboProblem, solver_config) -> SampleSet`` and return a
:class:`FitResult` whose energy and penalty are recomputed against the full
input matrix, so results from different strategies are directly comparable.
"""

from __future__ import annotations

import dataclasses
import time
from dataclasses import dataclass, field

import numpy as np

from ._parallel import parallel_map
from .preference import PreferenceMatrix
from .qubo import LinearConstraint, QuboParams, build_coverage_qubo, fold_constraints
from .solvers import best
from .solvers._common import mix_seed

__all__ = [
    "FitResult",
    "DecomposeConfig",
    "BaselineConfig",
    "fit_rqumf",
    "fit_derqumf",
    "fit_qumf_baseline",
    "assign_labels",
    "count_selected",
]


@dataclass(frozen=True)
class FitResult:
    """Outcome of one fit.

    ``selected`` holds column indices of the input preference matrix;
    ``labels[i]`` is the 1-based position of point i's model within
    ``selected`` (0 = uncovered/outlier).  ``penalty`` is the squared
    coverage violation ``||P z - y||^2`` at the returned solution.
    """

    method: str
    selected: tuple[int, ...]
    labels: np.ndarray
    energy: float
    penalty: float
    y: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=int)
        y = np.asarray(self.y, dtype=np.uint8)
        k = len(self.selected)
        if labels.min(initial=0) < 0 or labels.max(initial=0) > k:
            raise ValueError("labels must lie in {0} .. |selected|")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "selected", tuple(int(j) for j in self.selected))

    def to_json(self, *, include_timing: bool = True) -> dict:
        diag = dict(self.diagnostics)
        if not include_timing:
            diag.pop("wall_time", None)
        return {
            "method": self.method,
            "selected": list(self.selected),
            "labels": self.labels.tolist(),
            "energy": self.energy,
            "penalty": self.penalty,
            "y": self.y.tolist(),
            "diagnostics": diag,
        }


@dataclass(frozen=True)
class DecomposeConfig:
    """Iterative column decomposition into subproblems of at most
    ``subproblem_size`` hypotheses each."""

    subproblem_size: int = 40
    partition_seed: int = 0
    shuffle_each_round: bool = True

    def __post_init__(self):
        if self.subproblem_size < 2:
            raise ValueError("subproblem_size must be >= 2")


@dataclass(frozen=True)
class BaselineConfig:
    """Set-cover baseline weights; ``top_k`` enables post-processing that
    keeps only the k largest-consensus selected models."""

    lam: float = 0.5
    top_k: int | None = None

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lam must be >= 0")
        if self.top_k is not None and self.top_k < 1:
            raise ValueError("top_k must be >= 1")


def _as_matrix(preference) -> PreferenceMatrix:
    if isinstance(preference, PreferenceMatrix):
        return preference
    return PreferenceMatrix(data=np.asarray(preference))


def _dedup_columns(data: np.ndarray) -> np.ndarray:
    """Positions of the first occurrence of each distinct column, ascending."""
    seen: dict[bytes, int] = {}
    for j in range(data.shape[1]):
        key = data[:, j].tobytes()
        if key not in seen:
            seen[key] = j
    return np.array(sorted(seen.values()), dtype=int)


def _sub_config(solver_config, *parts):
    """Derive a per-subproblem config with an independent seed."""
    if solver_config is None or not dataclasses.is_dataclass(solver_config):
        return solver_config
    if not any(f.name == "seed" for f in dataclasses.fields(solver_config)):
        return solver_config
    return dataclasses.replace(solver_config, seed=mix_seed(solver_config.seed, *parts))


def _solve_selection(data: np.ndarray, params: QuboParams, solver, solver_config,
                     dedup: bool) -> tuple[np.ndarray, np.ndarray, dict]:
    """Solve one coverage subproblem; returns (selected positions, y, stats)."""
    n, m = data.shape
    kept = _dedup_columns(data) if dedup else np.arange(m)
    problem = build_coverage_qubo(data[:, kept], params)
    sample_set = solver(problem, solver_config)
    w, e = best(sample_set)
    y = w[:n]
    z = w[n:]
    stats = {
        "solver": sample_set.solver_name,
        "variables": problem.d,
        "dedup_collapsed": int(m - kept.size),
        "best_energy": e,
    }
    return kept[np.nonzero(z)[0]], y, stats


def _coverage_energy(data: np.ndarray, params: QuboParams, selected, y) -> tuple[float, float]:
    z = np.zeros(data.shape[1])
    z[list(selected)] = 1.0
    violation = data.astype(float) @ z - y.astype(float)
    penalty = float(violation @ violation)
    energy = -float(y.sum()) + params.lambda1 * len(selected) + params.lambda2 * penalty
    return energy, penalty


def assign_labels(preference, selected, points=None, models=None) -> np.ndarray:
    """Per-point labels from a model selection.

    A point covered by exactly one selected model gets that model's 1-based
    position in ``selected``; with several covering models the smallest
    residual wins (requires ``points`` and ``models``), falling back to the
    largest consensus set; uncovered points get 0.  Ties break toward the
    earliest selected model.
    """
    matrix = _as_matrix(preference)
    selected = [int(j) for j in selected]
    if any(j < 0 or j >= matrix.m for j in selected):
        raise ValueError("selected indices outside preference columns")
    labels = np.zeros(matrix.n, dtype=int)
    if not selected:
        return labels
    sub = matrix.data[:, selected].astype(bool)
    counts = sub.sum(axis=1)

    single = counts == 1
    labels[single] = np.argmax(sub[single], axis=1) + 1

    multi_idx = np.nonzero(counts > 1)[0]
    if multi_idx.size:
        if points is not None and models is not None:
            params = np.stack([models[j].params for j in selected])
            dim = points.dimension
            res = np.abs(points.coords[multi_idx] @ params[:, :dim].T + params[:, dim][None, :])
            res = np.where(sub[multi_idx], res, np.inf)
            labels[multi_idx] = np.argmin(res, axis=1) + 1
        else:
            sizes = matrix.data[:, selected].sum(axis=0).astype(float)
            score = np.where(sub[multi_idx], sizes[None, :], -np.inf)
            labels[multi_idx] = np.argmax(score, axis=1) + 1
    return labels


def fit_rqumf(preference, params: QuboParams, solver, solver_config=None, *,
              points=None, models=None, dedup: bool = True) -> FitResult:
    """One-shot robust coverage fit over the full hypothesis pool."""
    matrix = _as_matrix(preference)
    start = time.perf_counter()
    selected, y, stats = _solve_selection(matrix.data, params, solver, solver_config, dedup)
    selected = tuple(int(j) for j in selected)
    labels = assign_labels(matrix, selected, points, models)
    energy, penalty = _coverage_energy(matrix.data, params, selected, y)
    stats["wall_time"] = time.perf_counter() - start
    return FitResult(method="RQuMF", selected=selected, labels=labels,
                     energy=energy, penalty=penalty, y=y, diagnostics=stats)


def fit_derqumf(preference, params: QuboParams, decompose: DecomposeConfig,
                solver, solver_config=None, *, points=None, models=None,
                dedup: bool = True) -> FitResult:
    """Decomposed coverage fit.

    While more than ``subproblem_size`` columns remain, the columns are
    partitioned into blocks of at most that size (reshuffled every round),
    each block is solved independently carrying all point variables, and only
    selected columns survive.  One final full solve runs on the survivors.
    A round that eliminates nothing forces the final solve immediately, so
    termination does not depend on progress.
    """
    matrix = _as_matrix(preference)
    start = time.perf_counter()
    s = decompose.subproblem_size
    cols = np.arange(matrix.m)
    survivors_hist: list[int] = []
    round_idx = 0
    subproblems = 0
    while cols.size > s:
        round_idx += 1
        order = cols.copy()
        if decompose.shuffle_each_round:
            rng = np.random.default_rng(mix_seed(decompose.partition_seed, "round", round_idx))
            order = order[rng.permutation(order.size)]
        blocks = [order[b:b + s] for b in range(0, order.size, s)]
        subproblems += len(blocks)

        def solve_block(indexed):
            b, block = indexed
            local, _, _ = _solve_selection(
                matrix.data[:, block], params, solver,
                _sub_config(solver_config, "round", round_idx, "block", b), dedup)
            return [int(block[i]) for i in local]

        kept: list[int] = []
        for survivors in parallel_map(solve_block, list(enumerate(blocks))):
            kept.extend(survivors)
        survivors_hist.append(len(kept))
        if not kept:
            labels = np.zeros(matrix.n, dtype=int)
            y = np.zeros(matrix.n, dtype=np.uint8)
            diag = {"rounds": round_idx, "survivors_per_round": survivors_hist,
                    "subproblems": subproblems, "wall_time": time.perf_counter() - start}
            return FitResult(method="DeRQuMF", selected=(), labels=labels,
                             energy=0.0, penalty=0.0, y=y, diagnostics=diag)
        new_cols = np.array(sorted(kept), dtype=int)
        stalled = new_cols.size == cols.size
        cols = new_cols
        if stalled:
            break

    local, y, stats = _solve_selection(matrix.data[:, cols], params, solver, solver_config, dedup)
    selected = tuple(int(cols[i]) for i in local)
    labels = assign_labels(matrix, selected, points, models)
    energy, penalty = _coverage_energy(matrix.data, params, selected, y)
    diag = {
        "rounds": round_idx,
        "survivors_per_round": survivors_hist,
        "subproblems": subproblems,
        "final_columns": int(cols.size),
        **stats,
        "wall_time": time.perf_counter() - start,
    }
    return FitResult(method="DeRQuMF", selected=selected, labels=labels,
                     energy=energy, penalty=penalty, y=y, diagnostics=diag)


def fit_qumf_baseline(preference, config: BaselineConfig, solver, solver_config=None, *,
                      points=None, models=None, dedup: bool = True) -> FitResult:
    """Non-robust set-cover baseline: every point must be explained.

    Minimises ``lam * sum(z) + ||P z - 1||^2`` over model flags alone.  With
    ``top_k`` set, only the k largest-consensus selected models are kept and
    points they do not cover are relabelled as outliers.
    """
    matrix = _as_matrix(preference)
    start = time.perf_counter()
    n, m = matrix.n, matrix.m
    kept = _dedup_columns(matrix.data) if dedup else np.arange(m)
    data = matrix.data[:, kept].astype(float)
    problem = fold_constraints(
        np.zeros((kept.size, kept.size)),
        config.lam * np.ones(kept.size),
        [LinearConstraint(a=data, b=np.ones(n), weight=1.0)],
    )
    sample_set = solver(problem, solver_config)
    z, solver_energy = best(sample_set)
    selected = tuple(int(kept[i]) for i in np.nonzero(z)[0])
    method = "QuMF"
    post_dropped = 0
    if config.top_k is not None and len(selected) > config.top_k:
        sizes = matrix.data[:, selected].sum(axis=0)
        order = sorted(range(len(selected)), key=lambda i: (-int(sizes[i]), selected[i]))
        keep_pos = sorted(order[: config.top_k])
        post_dropped = len(selected) - config.top_k
        selected = tuple(selected[i] for i in keep_pos)
        method = "QuMFPostK"
    elif config.top_k is not None:
        method = "QuMFPostK"

    coverage = matrix.data[:, list(selected)].sum(axis=1) if selected else np.zeros(n, dtype=int)
    y = (coverage >= 1).astype(np.uint8)
    labels = assign_labels(matrix, selected, points, models)
    z_full = np.zeros(m)
    z_full[list(selected)] = 1.0
    violation = matrix.data.astype(float) @ z_full - y.astype(float)
    penalty = float(violation @ violation)
    energy = config.lam * len(selected) + float(
        (matrix.data.astype(float) @ z_full - 1.0) @ (matrix.data.astype(float) @ z_full - 1.0))
    diag = {
        "solver": sample_set.solver_name,
        "variables": problem.d,
        "dedup_collapsed": int(m - kept.size),
        "solver_energy": solver_energy,
        "post_dropped": post_dropped,
        "wall_time": time.perf_counter() - start,
    }
    return FitResult(method=method, selected=selected, labels=labels,
                     energy=energy, penalty=penalty, y=y, diagnostics=diag)


def count_selected(result: FitResult) -> int:
    return len(result.selected)
