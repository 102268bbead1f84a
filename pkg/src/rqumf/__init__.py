"""Outlier-robust multi-model fitting via a maximum-coverage QUBO.

Points and sampled model hypotheses define a binary preference matrix; model
selection is posed as a quadratic binary optimisation that rewards covering
points, charges for each selected model, and softly enforces that claimed
points are covered by exactly one selected model.  Sampling the QUBO with
simulated annealing (or any adapter backend) yields the models, the covered
points, and outliers as the uncovered remainder.
"""

from .geometry import (
    DegenerateSample,
    ModelHypothesis,
    ModelKind,
    PointSet,
    SamplingFailed,
    SyntheticConfig,
    fit_least_squares,
    fit_minimal,
    generate_pentagon,
    residual,
    residuals,
    sample_hypotheses,
)
from .metrics import EvalReport, RunStats, aggregate, misclassification
from .pipeline import (
    BaselineConfig,
    DecomposeConfig,
    FitResult,
    assign_labels,
    count_selected,
    fit_derqumf,
    fit_qumf_baseline,
    fit_rqumf,
)
from .preference import (
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
from .qubo import (
    LinearConstraint,
    QuboParams,
    QuboProblem,
    build_coverage_qubo,
    energy,
    fold_constraints,
    load_qubo_json,
    penalty_residual,
    save_qubo_json,
)
from .solvers import (
    ExternalSolverConfig,
    SaConfig,
    SampleSet,
    TooLarge,
    active_backend,
    available_backends,
    best,
    solve_exhaustive,
    solve_external,
    solve_sa,
)
from .tuning import TrialRecord, TuneConfig, TuneSpace, random_search, tune

__version__ = "0.1.0"
