"""Geometric models, residuals, minimal-sample fitting, and the synthetic
polygon test-bed generator.

Models are lines in 2-D (``a x + b y + c = 0``) and planes in 3-D
(``a x + b y + c z + d = 0``) with unit-norm normals; residuals are
perpendicular distances to the model's zero set.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

__all__ = [
    "ModelKind",
    "ModelHypothesis",
    "PointSet",
    "SyntheticConfig",
    "DegenerateSample",
    "SamplingFailed",
    "residual",
    "residuals",
    "fit_minimal",
    "fit_least_squares",
    "generate_pentagon",
    "sample_hypotheses",
]

_EPS = 1e-12


class DegenerateSample(ValueError):
    """Minimal sample does not determine a model (coincident / collinear)."""


class SamplingFailed(RuntimeError):
    """Retry budget exhausted while drawing non-degenerate minimal samples."""


class ModelKind(str, Enum):
    LINE2D = "Line2D"
    PLANE3D = "Plane3D"

    @property
    def dimension(self) -> int:
        return 2 if self is ModelKind.LINE2D else 3

    @property
    def minimal_sample_size(self) -> int:
        return 2 if self is ModelKind.LINE2D else 3


@dataclass(frozen=True)
class ModelHypothesis:
    """Parametric model with a unit-norm normal part."""

    kind: ModelKind
    params: np.ndarray

    def __post_init__(self):
        kind = ModelKind(self.kind)
        params = np.asarray(self.params, dtype=float)
        dim = kind.dimension
        if params.shape != (dim + 1,):
            raise ValueError(f"{kind.value} expects {dim + 1} parameters, got shape {params.shape}")
        if not np.all(np.isfinite(params)):
            raise ValueError("model parameters must be finite")
        norm = np.linalg.norm(params[:dim])
        if abs(norm - 1.0) > 1e-6:
            raise ValueError(f"normal part must be unit-norm, got norm {norm}")
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "params", params)

    @property
    def dimension(self) -> int:
        return self.kind.dimension


@dataclass(frozen=True)
class PointSet:
    """Ordered points of one common dimension, optionally with ground-truth
    labels (0 marks an outlier)."""

    coords: np.ndarray
    gt_labels: np.ndarray | None = None

    def __post_init__(self):
        coords = np.asarray(self.coords, dtype=float)
        if coords.ndim != 2 or coords.shape[1] not in (2, 3):
            raise ValueError(f"coords must be (n, 2) or (n, 3), got {coords.shape}")
        if not np.all(np.isfinite(coords)):
            raise ValueError("coordinates must be finite")
        labels = self.gt_labels
        if labels is not None:
            labels = np.asarray(labels, dtype=int)
            if labels.shape != (coords.shape[0],):
                raise ValueError("gt_labels length must equal point count")
            if np.any(labels < 0):
                raise ValueError("labels must be non-negative (0 = outlier)")
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "gt_labels", labels)

    def __len__(self) -> int:
        return self.coords.shape[0]

    @property
    def dimension(self) -> int:
        return self.coords.shape[1]

    def save_csv(self, path) -> None:
        header = ["x", "y", "z"][: self.dimension]
        if self.gt_labels is not None:
            header.append("label")
        lines = [",".join(header)]
        for i in range(len(self)):
            row = [repr(float(v)) for v in self.coords[i]]
            if self.gt_labels is not None:
                row.append(str(int(self.gt_labels[i])))
            lines.append(",".join(row))
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def load_csv(cls, path) -> "PointSet":
        text = Path(path).read_text().strip()
        if not text:
            raise ValueError(f"{path}: empty point file")
        rows = text.splitlines()
        header = [h.strip() for h in rows[0].split(",")]
        has_label = header and header[-1] == "label"
        dim = len(header) - (1 if has_label else 0)
        if header[:dim] != ["x", "y", "z"][:dim] or dim not in (2, 3):
            raise ValueError(f"{path}: expected header x,y[,z][,label], got {rows[0]!r}")
        coords, labels = [], []
        for lineno, row in enumerate(rows[1:], start=2):
            parts = [p.strip() for p in row.split(",")]
            if len(parts) != len(header):
                raise ValueError(f"{path}:{lineno}: expected {len(header)} fields, got {len(parts)}")
            try:
                coords.append([float(v) for v in parts[:dim]])
                if has_label:
                    labels.append(int(parts[dim]))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
        return cls(coords=np.asarray(coords), gt_labels=np.asarray(labels) if has_label else None)


def _check_dim(model: ModelHypothesis, dim: int) -> None:
    if model.dimension != dim:
        raise ValueError(f"model is {model.dimension}-D but points are {dim}-D")


def residual(model: ModelHypothesis, point) -> float:
    """Perpendicular distance from one point to the model's zero set."""
    point = np.asarray(point, dtype=float)
    _check_dim(model, point.shape[-1])
    dim = model.dimension
    return float(abs(point @ model.params[:dim] + model.params[dim]))


def residuals(model: ModelHypothesis, points: PointSet | np.ndarray) -> np.ndarray:
    coords = points.coords if isinstance(points, PointSet) else np.asarray(points, dtype=float)
    _check_dim(model, coords.shape[1])
    dim = model.dimension
    return np.abs(coords @ model.params[:dim] + model.params[dim])


def _canonical(normal: np.ndarray, intercept: float, kind: ModelKind) -> ModelHypothesis:
    params = np.append(normal, intercept)
    for v in params[: kind.dimension]:
        if abs(v) > _EPS:
            if v < 0:
                params = -params
            break
    return ModelHypothesis(kind=kind, params=params)


def fit_minimal(kind: ModelKind, sample) -> ModelHypothesis:
    """Exact model through a minimal sample (2 points for a line, 3 for a
    plane); the sign convention makes the first nonzero normal component
    positive."""
    kind = ModelKind(kind)
    pts = np.asarray(sample, dtype=float)
    need = kind.minimal_sample_size
    if pts.shape != (need, kind.dimension):
        raise ValueError(f"{kind.value} needs {need} points of dim {kind.dimension}, got {pts.shape}")
    if kind is ModelKind.LINE2D:
        direction = pts[1] - pts[0]
        norm = np.linalg.norm(direction)
        if norm < _EPS:
            raise DegenerateSample("coincident points")
        normal = np.array([-direction[1], direction[0]]) / norm
    else:
        cross = np.cross(pts[1] - pts[0], pts[2] - pts[0])
        norm = np.linalg.norm(cross)
        span = max(np.linalg.norm(pts[1] - pts[0]), np.linalg.norm(pts[2] - pts[0]), 1.0)
        if norm < 1e-9 * span * span:
            raise DegenerateSample("collinear or coincident points")
        normal = cross / norm
    return _canonical(normal, -float(normal @ pts[0]), kind)


def fit_least_squares(kind: ModelKind, points) -> ModelHypothesis:
    """Orthogonal least-squares fit through a point group (total least
    squares via the smallest principal direction)."""
    kind = ModelKind(kind)
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != kind.dimension:
        raise ValueError(f"expected (n, {kind.dimension}) points for {kind.value}")
    if pts.shape[0] < kind.minimal_sample_size:
        raise DegenerateSample(f"need at least {kind.minimal_sample_size} points")
    centroid = pts.mean(axis=0)
    centered = pts - centroid
    _, svals, vt = np.linalg.svd(centered, full_matrices=True)
    # the model spans the top dim-1 principal directions; they must be nonzero
    if svals[kind.dimension - 2] < 1e-9 * max(1.0, svals[0]):
        raise DegenerateSample("degenerate point group (coincident or collinear)")
    normal = vt[-1] / np.linalg.norm(vt[-1])
    return _canonical(normal, -float(normal @ centroid), kind)


@dataclass(frozen=True)
class SyntheticConfig:
    """Polygon test-bed: ``n_structures`` line segments arranged into a
    regular polygon inscribed in a circle of ``radius``, plus uniform
    outliers.

    The default radius keeps the structure scale large against the noise and
    the derived inlier threshold, so the intersection ambiguity zones at the
    polygon corners stay a negligible fraction of each edge.
    ``outlier_clearance`` keeps outliers at least that far from every
    ground-truth line so outlier labels stay unambiguous; None derives it as
    5 * noise_sigma.  ``bounding_box`` None means the square circumscribing
    the polygon circle.
    """

    total_points: int = 30
    outlier_fraction: float = 1.0 / 6.0
    noise_sigma: float = 0.01
    n_structures: int = 5
    radius: float = 10.0
    bounding_box: tuple[tuple[float, float], tuple[float, float]] | None = None
    seed: int = 0
    outlier_clearance: float | None = None

    def __post_init__(self):
        if self.total_points < 1:
            raise ValueError("total_points must be positive")
        if not 0.0 <= self.outlier_fraction <= 0.5:
            raise ValueError(f"outlier_fraction must be in [0, 0.5], got {self.outlier_fraction}")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be non-negative")
        if self.n_structures < 3:
            raise ValueError("polygon needs at least 3 structures")
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        (lo_x, lo_y), (hi_x, hi_y) = self.box
        if not (lo_x < hi_x and lo_y < hi_y):
            raise ValueError("bounding_box must have positive extent")
        if self.outlier_clearance is not None and self.outlier_clearance < 0:
            raise ValueError("outlier_clearance must be non-negative")

    @property
    def box(self) -> tuple[tuple[float, float], tuple[float, float]]:
        if self.bounding_box is not None:
            return self.bounding_box
        r = self.radius
        return ((-r, -r), (r, r))

    @property
    def n_outliers(self) -> int:
        return int(round(self.outlier_fraction * self.total_points))

    @property
    def n_inliers(self) -> int:
        return self.total_points - self.n_outliers

    @property
    def clearance(self) -> float:
        return 5.0 * self.noise_sigma if self.outlier_clearance is None else self.outlier_clearance


def generate_pentagon(config: SyntheticConfig) -> tuple[PointSet, list[ModelHypothesis]]:
    """Sample the polygon scene; returns the labelled points and the
    ground-truth line models (label i+1 belongs to model i).

    Inliers are uniform along each edge with Gaussian orthogonal noise;
    outliers are uniform in the bounding box, resampled while closer than the
    clearance to any ground-truth line.  Deterministic given the seed.
    """
    rng = np.random.default_rng(config.seed)
    k = config.n_structures
    angles = np.pi / 2.0 + 2.0 * np.pi * np.arange(k) / k
    verts = config.radius * np.stack([np.cos(angles), np.sin(angles)], axis=1)
    edges = [(verts[i], verts[(i + 1) % k]) for i in range(k)]
    models = [fit_minimal(ModelKind.LINE2D, np.stack(e)) for e in edges]

    base, extra = divmod(config.n_inliers, k)
    counts = [base + (1 if i < extra else 0) for i in range(k)]

    coords, labels = [], []
    for idx, ((a, b), count) in enumerate(zip(edges, counts)):
        if count == 0:
            continue
        t = rng.uniform(0.0, 1.0, size=count)
        offset = rng.normal(0.0, config.noise_sigma, size=count) if config.noise_sigma > 0 else np.zeros(count)
        normal = models[idx].params[:2]
        pts = (1.0 - t)[:, None] * a + t[:, None] * b + offset[:, None] * normal
        coords.append(pts)
        labels.extend([idx + 1] * count)

    (lo_x, lo_y), (hi_x, hi_y) = config.box
    clearance = config.clearance
    normals = np.stack([m.params[:2] for m in models])
    intercepts = np.array([m.params[2] for m in models])
    outliers = []
    attempts = 0
    budget = 10000 * max(1, config.n_outliers)
    while len(outliers) < config.n_outliers:
        if attempts >= budget:
            raise RuntimeError("could not place outliers clear of the structures; lower outlier_clearance")
        attempts += 1
        cand = np.array([rng.uniform(lo_x, hi_x), rng.uniform(lo_y, hi_y)])
        if clearance > 0 and np.min(np.abs(normals @ cand + intercepts)) < clearance:
            continue
        outliers.append(cand)
    if outliers:
        coords.append(np.stack(outliers))
        labels.extend([0] * len(outliers))

    points = PointSet(coords=np.concatenate(coords), gt_labels=np.asarray(labels, dtype=int))
    return points, models


def sample_hypotheses(
    points: PointSet,
    kind: ModelKind,
    m: int,
    seed: int,
    locality_sigma: float | None = None,
) -> list[ModelHypothesis]:
    """Fit ``m`` hypotheses from uniformly drawn minimal samples.

    Degenerate draws are rejected and redrawn within a budget of 100 * m.
    With ``locality_sigma`` set, companions of the first drawn point are
    weighted by exp(-dist^2 / sigma^2) instead of uniformly.
    """
    kind = ModelKind(kind)
    if m < 1:
        raise ValueError("hypothesis count must be >= 1")
    n = len(points)
    need = kind.minimal_sample_size
    if n < need:
        raise ValueError(f"need at least {need} points to sample {kind.value}")
    if points.dimension != kind.dimension:
        raise ValueError(f"{kind.value} needs {kind.dimension}-D points, got {points.dimension}-D")
    rng = np.random.default_rng(seed)
    coords = points.coords
    out: list[ModelHypothesis] = []
    budget = 100 * m
    attempts = 0
    while len(out) < m:
        if attempts >= budget:
            raise SamplingFailed(f"exhausted {budget} draws after {len(out)}/{m} hypotheses")
        attempts += 1
        if locality_sigma is None:
            idx = rng.choice(n, size=need, replace=False)
        else:
            first = int(rng.integers(n))
            d2 = ((coords - coords[first]) ** 2).sum(axis=1)
            weights = np.exp(-d2 / (locality_sigma**2))
            weights[first] = 0.0
            total = weights.sum()
            if total <= 0:
                continue
            rest = rng.choice(n, size=need - 1, replace=False, p=weights / total)
            idx = np.concatenate([[first], rest])
        try:
            out.append(fit_minimal(kind, coords[idx]))
        except DegenerateSample:
            continue
    return out
