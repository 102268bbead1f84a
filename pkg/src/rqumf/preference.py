"""Binary point-model consensus matrix and its interchange format.

``P[i, j] = 1`` exactly when the residual of point i under hypothesis j is
strictly below the inlier threshold.  Columns are consensus sets, rows are
preference sets.  The on-disk form is a headerless CSV of 0/1 entries with an
optional JSON sidecar carrying the threshold and column identifiers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .geometry import ModelHypothesis, PointSet

__all__ = [
    "PreferenceMatrix",
    "ConsensusConfig",
    "ParseError",
    "build_preference",
    "save_preference",
    "load_preference",
    "column_stats",
    "row_stats",
    "prune_empty_columns",
]


class ParseError(ValueError):
    """Malformed preference file (non-binary entry, ragged rows, empty)."""


@dataclass(frozen=True)
class ConsensusConfig:
    epsilon: float

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError(f"inlier threshold must be positive, got {self.epsilon}")


@dataclass(frozen=True)
class PreferenceMatrix:
    data: np.ndarray
    column_ids: tuple = ()

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.ndim != 2 or data.shape[0] < 1 or data.shape[1] < 1:
            raise ValueError(f"preference matrix must be 2-D and nonempty, got shape {data.shape}")
        if not np.all((data == 0) | (data == 1)):
            raise ValueError("preference entries must be 0 or 1")
        ids = self.column_ids or tuple(range(data.shape[1]))
        if len(ids) != data.shape[1]:
            raise ValueError("column_ids length must equal column count")
        if len(set(ids)) != len(ids):
            raise ValueError("column_ids must be distinct")
        object.__setattr__(self, "data", np.ascontiguousarray(data, dtype=np.uint8))
        object.__setattr__(self, "column_ids", tuple(ids))

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def m(self) -> int:
        return self.data.shape[1]


def build_preference(
    points: PointSet,
    models: list[ModelHypothesis],
    config: ConsensusConfig,
) -> PreferenceMatrix:
    """Consensus matrix over all (point, hypothesis) pairs, strict ``< epsilon``."""
    if not models:
        raise ValueError("need at least one hypothesis")
    dim = points.dimension
    kinds = {m.kind for m in models}
    if len(kinds) != 1:
        raise ValueError(f"hypotheses must share one kind, got {sorted(k.value for k in kinds)}")
    kind = kinds.pop()
    if kind.dimension != dim:
        raise ValueError(f"{kind.value} hypotheses need {kind.dimension}-D points, got {dim}-D")
    params = np.stack([m.params for m in models])
    res = np.abs(points.coords @ params[:, :dim].T + params[:, dim][None, :])
    return PreferenceMatrix(data=(res < config.epsilon).astype(np.uint8))


def save_preference(matrix: PreferenceMatrix, path, *, epsilon: float | None = None,
                    provenance: str | None = None) -> None:
    """Write the CSV plus a JSON sidecar (same path with .json appended)."""
    path = Path(path)
    rows = [",".join(str(int(v)) for v in row) for row in matrix.data]
    path.write_text("\n".join(rows) + "\n")
    sidecar = {"column_ids": list(matrix.column_ids)}
    if epsilon is not None:
        sidecar["epsilon"] = epsilon
    if provenance is not None:
        sidecar["provenance"] = provenance
    Path(str(path) + ".json").write_text(json.dumps(sidecar, sort_keys=True) + "\n")


def load_preference(path) -> PreferenceMatrix:
    path = Path(path)
    text = path.read_text().strip()
    if not text:
        raise ParseError(f"{path}: empty preference file")
    rows = []
    width = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        parts = [p.strip() for p in line.split(",")]
        if width is None:
            width = len(parts)
        elif len(parts) != width:
            raise ParseError(f"{path}:{lineno}: ragged row, expected {width} entries, got {len(parts)}")
        row = []
        for col, p in enumerate(parts, start=1):
            if p not in ("0", "1"):
                raise ParseError(f"{path}:{lineno}: column {col}: entry {p!r} is not 0/1")
            row.append(int(p))
        rows.append(row)
    sidecar_path = Path(str(path) + ".json")
    column_ids: tuple = ()
    if sidecar_path.exists():
        meta = json.loads(sidecar_path.read_text())
        ids = meta.get("column_ids")
        if ids is not None:
            column_ids = tuple(ids)
    return PreferenceMatrix(data=np.asarray(rows, dtype=np.uint8), column_ids=column_ids)


def column_stats(matrix: PreferenceMatrix) -> np.ndarray:
    """Consensus-set sizes (per-column sums)."""
    return matrix.data.sum(axis=0, dtype=np.int64)


def row_stats(matrix: PreferenceMatrix) -> np.ndarray:
    """Preference-set sizes (per-row sums)."""
    return matrix.data.sum(axis=1, dtype=np.int64)


def prune_empty_columns(matrix: PreferenceMatrix) -> tuple[PreferenceMatrix, np.ndarray]:
    """Drop columns with empty consensus; returns the kept column positions.

    Left unchanged when every column is empty (a matrix must keep at least
    one column) or when there is nothing to prune.
    """
    keep = np.nonzero(column_stats(matrix) > 0)[0]
    if keep.size == 0 or keep.size == matrix.m:
        return matrix, np.arange(matrix.m)
    kept = PreferenceMatrix(
        data=matrix.data[:, keep],
        column_ids=tuple(matrix.column_ids[i] for i in keep),
    )
    return kept, keep
