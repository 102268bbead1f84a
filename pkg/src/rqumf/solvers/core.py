"""QUBO samplers: simulated annealing, an exhaustive oracle, and an adapter
seam for external backends.

Solvers are pure functions of (problem, config).  The annealer runs
``num_samples`` independent Metropolis chains whose seeds derive from the
config seed alone, so results do not depend on execution order or thread
count.  The exhaustive oracle enumerates every assignment and is the ground
truth the annealer is validated against.
"""

from __future__ import annotations

import json
import os
import subprocess
import tempfile
import time
from dataclasses import dataclass

import numpy as np

from ..qubo import QuboProblem, energy
from . import _common, _fallback

__all__ = [
    "SaConfig",
    "Sample",
    "SampleSet",
    "TooLarge",
    "solve_sa",
    "solve_exhaustive",
    "best",
    "ExternalSolverConfig",
    "solve_external",
    "available_backends",
    "active_backend",
    "sample_set_to_json",
    "sample_set_from_json",
]

EXHAUSTIVE_MAX_VARS = 25


class TooLarge(ValueError):
    """Raised when a problem exceeds the exhaustive enumeration cap."""


def _load_backends():
    backends = {"python": _fallback}
    if os.environ.get("RQUMF_PURE_PYTHON", "") not in ("", "0"):
        return backends, "python"
    try:
        from . import _kernels

        backends["cython"] = _kernels
        return backends, "cython"
    except ImportError:
        return backends, "python"


_BACKENDS, _DEFAULT_BACKEND = _load_backends()


def available_backends() -> tuple[str, ...]:
    return tuple(sorted(_BACKENDS))


def active_backend() -> str:
    return _DEFAULT_BACKEND


def _impl(backend: str | None):
    name = backend or _DEFAULT_BACKEND
    try:
        return _BACKENDS[name], name
    except KeyError:
        raise ValueError(f"unknown backend {name!r}; available: {available_backends()}") from None


@dataclass(frozen=True)
class SaConfig:
    """Annealer configuration: independent restarts over a beta schedule."""

    num_samples: int = 100
    sweeps_per_sample: int = 1000
    beta_schedule: tuple[float, float] | None = None
    schedule_kind: str = "geometric"
    seed: int = 0

    def __post_init__(self):
        if self.num_samples < 1:
            raise ValueError("num_samples must be >= 1")
        if self.sweeps_per_sample < 1:
            raise ValueError("sweeps_per_sample must be >= 1")
        if self.schedule_kind not in ("geometric", "linear"):
            raise ValueError(f"schedule_kind must be 'geometric' or 'linear', got {self.schedule_kind!r}")
        if self.beta_schedule is not None:
            b0, b1 = self.beta_schedule
            if not (b0 > 0 and b1 > 0 and b0 <= b1):
                raise ValueError(f"beta schedule must satisfy 0 < start <= end, got {self.beta_schedule}")


@dataclass(frozen=True)
class Sample:
    state: tuple[int, ...]
    energy: float
    multiplicity: int

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.state, dtype=np.uint8)


@dataclass(frozen=True)
class SampleSet:
    """Solver output, ascending by (energy, state)."""

    samples: tuple[Sample, ...]
    solver_name: str
    wall_time: float

    def __len__(self) -> int:
        return len(self.samples)


def best(sample_set: SampleSet) -> tuple[np.ndarray, float]:
    """Lowest-energy sample; ties already broken lexicographically."""
    if not sample_set.samples:
        raise ValueError("empty sample set")
    top = sample_set.samples[0]
    return top.array, top.energy


def _assemble(problem: QuboProblem, states: np.ndarray, solver_name: str, wall: float) -> SampleSet:
    counts: dict[tuple[int, ...], int] = {}
    for row in states:
        key = tuple(int(v) for v in row)
        counts[key] = counts.get(key, 0) + 1
    samples = [
        Sample(state=key, energy=energy(problem, np.asarray(key, dtype=np.uint8)), multiplicity=mult)
        for key, mult in counts.items()
    ]
    samples.sort(key=lambda s: (s.energy, s.state))
    return SampleSet(samples=tuple(samples), solver_name=solver_name, wall_time=wall)


def solve_sa(problem: QuboProblem, config: SaConfig | None = None, *, backend: str | None = None) -> SampleSet:
    """Sample the problem with restarted single-flip Metropolis annealing.

    Each restart starts from a uniformly random state and performs
    ``sweeps_per_sample`` sequential sweeps; within a sweep every variable is
    proposed once and accepted with probability min(1, exp(-beta * dE)).
    After the schedule a strictly-downhill quench removes any residual
    single-flip defects, so every returned state is a local minimum.
    """
    config = config or SaConfig()
    impl, _ = _impl(backend)
    start = time.perf_counter()
    lin, indptr, indices, vals = _common.build_rows(problem)
    if config.beta_schedule is None:
        beta_start, beta_end = _common.beta_range_for(lin, indptr, vals)
    else:
        beta_start, beta_end = config.beta_schedule
    betas = _common.make_schedule(beta_start, beta_end, config.sweeps_per_sample, config.schedule_kind)
    seeds = _common.chain_seeds(config.seed, config.num_samples)
    states = impl.sa_chains(lin, indptr, indices, vals,
                            np.ascontiguousarray(betas, dtype=np.float64), seeds)
    return _assemble(problem, states, "sa", time.perf_counter() - start)


def solve_exhaustive(problem: QuboProblem, *, backend: str | None = None) -> SampleSet:
    """Exact global minimum by enumerating all 2^d assignments.

    The scan tracks energies incrementally; every state within a small safety
    margin of the scanned minimum is then re-evaluated with :func:`energy`, so
    the returned energies and tie set match direct enumeration exactly.
    """
    if problem.d > EXHAUSTIVE_MAX_VARS:
        raise TooLarge(f"exhaustive solve capped at {EXHAUSTIVE_MAX_VARS} variables, got {problem.d}")
    impl, _ = _impl(backend)
    start = time.perf_counter()
    lin, indptr, indices, vals = _common.build_rows(problem)
    d = problem.d

    empty = np.empty(0, dtype=np.uint64)
    approx_min, _ = impl.exhaustive_scan(lin, indptr, indices, vals, d, -np.inf, empty)

    scale = float(np.abs(lin).sum() + np.abs(vals).sum())
    margin = 1e-9 + 1e-7 * max(1.0, scale)
    cap = 4096
    while True:
        masks = np.empty(cap, dtype=np.uint64)
        _, count = impl.exhaustive_scan(lin, indptr, indices, vals, d, approx_min + margin, masks)
        if count <= cap:
            masks = masks[:count]
            break
        cap = int(count)

    states = _common.masks_to_states(masks, d)
    exact = np.array([energy(problem, states[i]) for i in range(states.shape[0])])
    emin = float(exact.min())
    ties = [tuple(int(v) for v in states[i]) for i in np.nonzero(exact == emin)[0]]
    ties.sort()
    samples = tuple(Sample(state=t, energy=emin, multiplicity=1) for t in ties)
    return SampleSet(samples=samples, solver_name="exhaustive", wall_time=time.perf_counter() - start)


@dataclass(frozen=True)
class ExternalSolverConfig:
    """Adapter config: the command receives a QUBO JSON path and must print a
    sample-set JSON document on stdout.

    ``num_anneals`` is a passthrough knob for annealer-style backends and has
    no classical meaning here.
    """

    command: tuple[str, ...]
    num_anneals: int | None = None
    timeout: float = 600.0


def solve_external(problem: QuboProblem, config: ExternalSolverConfig) -> SampleSet:
    """Shell out to an external sampler over the QUBO JSON interchange format."""
    from ..qubo import save_qubo_json

    start = time.perf_counter()
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "problem.json")
        save_qubo_json(problem, path)
        cmd = list(config.command) + [path]
        if config.num_anneals is not None:
            cmd += ["--num-anneals", str(config.num_anneals)]
        proc = subprocess.run(cmd, capture_output=True, text=True, timeout=config.timeout)
    if proc.returncode != 0:
        raise RuntimeError(f"external solver failed ({proc.returncode}): {proc.stderr.strip()}")
    raw = sample_set_from_json(json.loads(proc.stdout))
    states = np.concatenate([np.tile(s.array, (s.multiplicity, 1)) for s in raw.samples])
    # re-evaluate energies locally so the sample-set invariant holds
    return _assemble(problem, states, raw.solver_name or "external", time.perf_counter() - start)


def sample_set_to_json(sample_set: SampleSet, *, include_timing: bool = True) -> dict:
    doc = {
        "samples": [
            {"w": "".join(str(b) for b in s.state), "energy": s.energy, "multiplicity": s.multiplicity}
            for s in sample_set.samples
        ],
        "solver_name": sample_set.solver_name,
    }
    if include_timing:
        doc["wall_time_ms"] = sample_set.wall_time * 1000.0
    return doc


def sample_set_from_json(doc: dict) -> SampleSet:
    samples = tuple(
        Sample(
            state=tuple(int(ch) for ch in item["w"]),
            energy=float(item["energy"]),
            multiplicity=int(item.get("multiplicity", 1)),
        )
        for item in doc["samples"]
    )
    return SampleSet(
        samples=samples,
        solver_name=doc.get("solver_name", "external"),
        wall_time=float(doc.get("wall_time_ms", 0.0)) / 1000.0,
    )
