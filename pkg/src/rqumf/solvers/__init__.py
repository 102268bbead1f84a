from .core import (
    EXHAUSTIVE_MAX_VARS,
    ExternalSolverConfig,
    SaConfig,
    Sample,
    SampleSet,
    TooLarge,
    active_backend,
    available_backends,
    best,
    sample_set_from_json,
    sample_set_to_json,
    solve_exhaustive,
    solve_external,
    solve_sa,
)

__all__ = [
    "EXHAUSTIVE_MAX_VARS",
    "ExternalSolverConfig",
    "SaConfig",
    "Sample",
    "SampleSet",
    "TooLarge",
    "active_backend",
    "available_backends",
    "best",
    "sample_set_from_json",
    "sample_set_to_json",
    "solve_exhaustive",
    "solve_external",
    "solve_sa",
]
