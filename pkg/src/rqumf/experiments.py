"""Reproducible experiment harness: scenario grids, per-run seeding, and
aggregation into benchmark tables.

Each run derives every random stream (data, hypothesis sampling, solver
chains, partition shuffles) from one base seed plus structural tags, so a
cell rerun with the same configuration is bit-identical regardless of
execution order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .geometry import (
    DegenerateSample,
    ModelKind,
    PointSet,
    SyntheticConfig,
    fit_least_squares,
    generate_pentagon,
    residuals,
    sample_hypotheses,
)
from .metrics import aggregate, misclassification
from .pipeline import (
    BaselineConfig,
    DecomposeConfig,
    FitResult,
    fit_derqumf,
    fit_qumf_baseline,
    fit_rqumf,
)
from .preference import ConsensusConfig, PreferenceMatrix, build_preference
from .qubo import QuboParams
from .solvers import SaConfig, solve_exhaustive, solve_sa
from .solvers._common import mix_seed

__all__ = [
    "DEFAULT_PARAMS",
    "DEFAULT_BASELINE_LAMBDA",
    "ExperimentConfig",
    "RunRecord",
    "make_pentagon_instance",
    "multi_label_ground_truth",
    "run_fit",
    "run_cell",
    "summarize_cell",
    "METHODS",
    "SCENARIOS",
    "SOLVERS",
]

# Coverage weights for the synthetic line benchmark.  The tuner (objective =
# mean misclassification over a seeded battery of 17%- and 33%-outlier
# instances, lambda2 restricted to > 1 so coverage flags stay meaningful)
# finds a flat optimum over lambda1 in (2, 3) x lambda2 in (1, 2.5]; we pin
# the low-lambda2 edge, which is least sensitive to structures sharing
# corner points.
DEFAULT_PARAMS = QuboParams(lambda1=2.5, lambda2=1.1)

# Set-cover baseline weight: cheap enough that covering an outlier pair beats
# leaving both uncovered, so the baseline exhibits its over-selection.
DEFAULT_BASELINE_LAMBDA = 0.5

METHODS = ("RQuMF", "DeRQuMF", "QuMF", "QuMFPostK")
SCENARIOS = ("PentagonSweepOutliers", "PentagonSweepModels", "PlaneFit3D", "IngestedPreference")
SOLVERS = ("SA", "Exhaustive")


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: str = "PentagonSweepModels"
    methods: tuple[str, ...] = ("RQuMF", "DeRQuMF")
    solver: str = "SA"
    repeats: int = 20
    seed: int = 0
    total_points: int = 30
    outlier_fraction: float = 1.0 / 6.0
    noise_sigma: float = 0.01
    n_structures: int = 5
    radius: float = 10.0
    epsilon: float | None = None  # None derives 3 * noise_sigma
    num_models: int = 40
    models_per_point: float = 6.0
    inject_gt: bool = True
    params: QuboParams = field(default_factory=lambda: DEFAULT_PARAMS)
    sa: SaConfig = field(default_factory=SaConfig)
    decompose: DecomposeConfig = field(default_factory=DecomposeConfig)
    baseline: BaselineConfig = field(default_factory=lambda: BaselineConfig(lam=DEFAULT_BASELINE_LAMBDA))
    model_grid: tuple[int, ...] = (20, 50, 100, 500, 1000)
    outlier_grid: tuple[float, ...] = (0.0, 1.0 / 6.0, 1.0 / 3.0, 0.5)
    dedup: bool = True

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.scenario!r}")
        for m in self.methods:
            if m not in METHODS:
                raise ValueError(f"unknown method {m!r}")
        if self.solver not in SOLVERS:
            raise ValueError(f"unknown solver {self.solver!r}")
        if self.repeats < 1:
            raise ValueError("repeats must be >= 1")

    def resolved_epsilon(self) -> float:
        return 3.0 * self.noise_sigma if self.epsilon is None else self.epsilon


@dataclass(frozen=True)
class RunRecord:
    scenario: str
    setting: float
    method: str
    run: int
    seed: int
    e_mis: float
    selected_count: int
    energy: float
    penalty: float
    wall_time: float = 0.0


def make_pentagon_instance(
    *,
    total_points: int,
    outlier_fraction: float,
    noise_sigma: float,
    n_structures: int,
    num_models: int,
    seed: int,
    epsilon: float,
    inject_gt: bool = True,
    radius: float = 10.0,
):
    """One synthetic problem: points, hypothesis pool, preference matrix.

    With ``inject_gt`` the pool starts with per-structure least-squares refits
    (the true generating model when a refit is degenerate), followed by
    ``num_models - n_structures`` random hypotheses.
    """
    data_cfg = SyntheticConfig(
        total_points=total_points,
        outlier_fraction=outlier_fraction,
        noise_sigma=noise_sigma,
        n_structures=n_structures,
        radius=radius,
        seed=mix_seed(seed, "data"),
    )
    points, gt_models = generate_pentagon(data_cfg)
    pool: list = []
    if inject_gt:
        for k, true_model in enumerate(gt_models):
            group = points.coords[points.gt_labels == k + 1]
            try:
                pool.append(fit_least_squares(ModelKind.LINE2D, group))
            except (DegenerateSample, ValueError):
                pool.append(true_model)
    n_random = num_models - len(pool)
    if n_random < 0:
        raise ValueError(f"num_models={num_models} smaller than injected pool {len(pool)}")
    if n_random:
        pool.extend(sample_hypotheses(points, ModelKind.LINE2D, n_random, seed=mix_seed(seed, "hyp")))
    matrix = build_preference(points, pool, ConsensusConfig(epsilon=epsilon))
    return points, gt_models, pool, matrix


def multi_label_ground_truth(points: PointSet, gt_models, epsilon: float) -> list[set[int]]:
    """Per-point admissible label sets: the generating structure plus every
    structure whose true model also passes within the inlier threshold.
    Outliers keep {0}."""
    sets: list[set[int]] = []
    res = np.stack([residuals(m, points) for m in gt_models], axis=1)
    for i, label in enumerate(points.gt_labels):
        if label == 0:
            sets.append({0})
        else:
            near = set((np.nonzero(res[i] < epsilon)[0] + 1).tolist())
            near.add(int(label))
            sets.append(near)
    return sets


def _solver_callable(name: str):
    if name == "SA":
        return lambda problem, config: solve_sa(problem, config)
    if name == "Exhaustive":
        return lambda problem, config: solve_exhaustive(problem)
    raise ValueError(f"unknown solver {name!r}")


def run_fit(matrix: PreferenceMatrix, method: str, config: ExperimentConfig,
            sa_seed: int, *, points=None, models=None, true_k: int | None = None) -> FitResult:
    solver = _solver_callable(config.solver)
    solver_config = replace(config.sa, seed=sa_seed) if config.solver == "SA" else None
    common = dict(points=points, models=models, dedup=config.dedup)
    if method == "RQuMF":
        return fit_rqumf(matrix, config.params, solver, solver_config, **common)
    if method == "DeRQuMF":
        decomp = replace(config.decompose, partition_seed=mix_seed(sa_seed, "partition"))
        return fit_derqumf(matrix, config.params, decomp, solver, solver_config, **common)
    if method == "QuMF":
        base = replace(config.baseline, top_k=None)
        return fit_qumf_baseline(matrix, base, solver, solver_config, **common)
    if method == "QuMFPostK":
        k = true_k if config.baseline.top_k is None else config.baseline.top_k
        base = replace(config.baseline, top_k=k)
        return fit_qumf_baseline(matrix, base, solver, solver_config, **common)
    raise ValueError(f"unknown method {method!r}")


def run_cell(config: ExperimentConfig, *, setting: float, method: str,
             num_models: int | None = None, outlier_fraction: float | None = None,
             ) -> list[RunRecord]:
    """Run ``repeats`` independent instances of one (setting, method) cell."""
    records = []
    m = config.num_models if num_models is None else num_models
    frac = config.outlier_fraction if outlier_fraction is None else outlier_fraction
    epsilon = config.resolved_epsilon()
    for run in range(config.repeats):
        run_seed = mix_seed(config.seed, config.scenario, setting, run)
        points, gt_models, pool, matrix = make_pentagon_instance(
            total_points=config.total_points,
            outlier_fraction=frac,
            noise_sigma=config.noise_sigma,
            n_structures=config.n_structures,
            num_models=m,
            seed=run_seed,
            epsilon=epsilon,
            inject_gt=config.inject_gt,
            radius=config.radius,
        )
        result = run_fit(matrix, method, config, mix_seed(run_seed, "solver", method),
                         points=points, models=pool, true_k=config.n_structures)
        gt_sets = multi_label_ground_truth(points, gt_models, epsilon)
        report = misclassification(points.gt_labels, result.labels, gt_multi=gt_sets)
        records.append(RunRecord(
            scenario=config.scenario,
            setting=setting,
            method=method,
            run=run,
            seed=run_seed,
            e_mis=report.e_mis,
            selected_count=len(result.selected),
            energy=result.energy,
            penalty=result.penalty,
            wall_time=result.diagnostics.get("wall_time", 0.0),
        ))
    return records


def summarize_cell(records: list[RunRecord]) -> dict:
    stats = aggregate(
        [r.e_mis for r in records],
        selected_counts=[r.selected_count for r in records],
        seeds=[r.seed for r in records],
    )
    return {
        "scenario": records[0].scenario,
        "setting": records[0].setting,
        "method": records[0].method,
        "repeats": len(records),
        "mean_emis": stats.mean,
        "median_emis": stats.median,
        "std_emis": stats.std if not math.isnan(stats.std) else None,
        "mean_selected": float(np.mean(stats.selected_counts)),
    }
