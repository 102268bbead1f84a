"""QUBO problem type, constraint folding, and the coverage-QUBO builder.

The central object is :class:`QuboProblem`, a symmetric quadratic form over
binary variables.  :func:`fold_constraints` turns soft linear constraints
``weight * ||A w - b||^2`` into quadratic/linear/constant coefficients, and
:func:`build_coverage_qubo` produces the robust maximum-coverage problem over
the stacked variable vector ``w = (y; z)`` (point coverage flags followed by
model selection flags).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

__all__ = [
    "QuboProblem",
    "QuboParams",
    "LinearConstraint",
    "fold_constraints",
    "build_coverage_qubo",
    "energy",
    "penalty_residual",
    "save_qubo_json",
    "load_qubo_json",
]

_SYM_TOL = 1e-12


@dataclass(frozen=True)
class QuboParams:
    """Weights of the coverage objective.

    lambda1 penalises each selected model, lambda2 scales the squared
    coverage-consistency penalty.
    """

    lambda1: float
    lambda2: float

    def __post_init__(self):
        if not (np.isfinite(self.lambda1) and self.lambda1 >= 0):
            raise ValueError(f"lambda1 must be finite and >= 0, got {self.lambda1}")
        if not (np.isfinite(self.lambda2) and self.lambda2 > 0):
            raise ValueError(f"lambda2 must be finite and > 0, got {self.lambda2}")


@dataclass(frozen=True)
class LinearConstraint:
    """Soft linear constraint ``weight * ||a @ w - b||^2``."""

    a: np.ndarray
    b: np.ndarray
    weight: float = 1.0

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        b = np.asarray(self.b, dtype=float)
        if a.ndim != 2 or b.ndim != 1:
            raise ValueError("constraint matrix must be 2-D and rhs 1-D")
        if a.shape[0] != b.shape[0]:
            raise ValueError(f"constraint rows {a.shape[0]} != rhs length {b.shape[0]}")
        if self.weight < 0:
            raise ValueError("constraint weight must be >= 0")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)


@dataclass(frozen=True)
class QuboProblem:
    """Minimise ``w^T q w + s^T w + offset`` over binary vectors ``w``.

    ``q`` is symmetric; both (i, j) and (j, i) entries count toward the
    energy.  ``var_split = (n_points, n_models)`` is set when the problem was
    built as a coverage problem with ``w = (y; z)``; ``constraint_weight``
    then records the penalty scale so the coverage violation can be read back
    out of the quadratic form.
    """

    q: np.ndarray
    s: np.ndarray
    offset: float = 0.0
    var_split: tuple[int, int] | None = None
    constraint_weight: float | None = None

    def __post_init__(self):
        q = np.ascontiguousarray(np.asarray(self.q, dtype=float))
        s = np.ascontiguousarray(np.asarray(self.s, dtype=float))
        if q.ndim != 2 or q.shape[0] != q.shape[1]:
            raise ValueError(f"q must be square, got shape {q.shape}")
        if s.shape != (q.shape[0],):
            raise ValueError(f"s has length {s.shape}, expected ({q.shape[0]},)")
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(s)) and np.isfinite(self.offset)):
            raise ValueError("QUBO coefficients must be finite")
        if q.size and np.max(np.abs(q - q.T)) > _SYM_TOL:
            raise ValueError("q must be symmetric to 1e-12")
        if self.var_split is not None:
            n, m = self.var_split
            if n + m != q.shape[0]:
                raise ValueError(f"var_split {self.var_split} does not sum to d={q.shape[0]}")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "s", s)

    @property
    def d(self) -> int:
        return self.s.shape[0]


def _as_binary(w, d: int) -> np.ndarray:
    w = np.asarray(w)
    if w.shape != (d,):
        raise ValueError(f"assignment has shape {w.shape}, expected ({d},)")
    wf = w.astype(float)
    if not np.all((wf == 0.0) | (wf == 1.0)):
        raise ValueError("assignment entries must be 0 or 1")
    return wf


def energy(problem: QuboProblem, w) -> float:
    """Objective value ``w^T q w + s^T w + offset`` at a binary assignment."""
    wf = _as_binary(w, problem.d)
    return float(wf @ problem.q @ wf) + float(problem.s @ wf) + problem.offset


def penalty_residual(problem: QuboProblem, w) -> float:
    """Squared coverage violation ``||P z - y||^2`` at ``w = (y; z)``.

    Only defined for coverage problems (var_split present).  Recovered from
    the quadratic form, which equals ``constraint_weight * ||P z - y||^2``.
    """
    if problem.var_split is None:
        raise ValueError("problem has no var_split; penalty residual undefined")
    if problem.constraint_weight is None or problem.constraint_weight <= 0:
        raise ValueError("problem does not record a positive constraint weight")
    wf = _as_binary(w, problem.d)
    return float(wf @ problem.q @ wf) / problem.constraint_weight


def fold_constraints(q0, s0, constraints: list[LinearConstraint]) -> QuboProblem:
    """Fold soft linear constraints into plain QUBO coefficients.

    Returns ``q = q0 + sum_i weight_i a_i^T a_i``,
    ``s = s0 - 2 sum_i weight_i a_i^T b_i`` and
    ``offset = sum_i weight_i b_i^T b_i`` so that for every binary ``w``::

        energy(folded, w) == w^T q0 w + s0^T w + sum_i weight_i ||a_i w - b_i||^2
    """
    q = np.array(q0, dtype=float, copy=True)
    s = np.array(s0, dtype=float, copy=True)
    if q.ndim != 2 or q.shape[0] != q.shape[1] or s.shape != (q.shape[0],):
        raise ValueError("q0 must be square and s0 of matching length")
    offset = 0.0
    for c in constraints:
        if c.a.shape[1] != q.shape[0]:
            raise ValueError(f"constraint has {c.a.shape[1]} columns, problem has d={q.shape[0]}")
        ata = c.a.T @ c.a
        q += c.weight * 0.5 * (ata + ata.T)
        s -= 2.0 * c.weight * (c.a.T @ c.b)
        offset += c.weight * float(c.b @ c.b)
    return QuboProblem(q=q, s=s, offset=offset)


def build_coverage_qubo(preference, params: QuboParams) -> QuboProblem:
    """Robust maximum-coverage QUBO over ``w = (y; z)``.

    ``q = lambda2 * [[I, -P], [-P^T, P^T P]]`` and ``s = (-1_n; lambda1 1_m)``.
    Equivalent to folding the constraint ``[-I, P] w = 0`` with weight lambda2
    into the linear coverage objective.
    """
    p = np.asarray(preference.data if hasattr(preference, "data") else preference, dtype=float)
    if p.ndim != 2 or p.shape[0] < 1 or p.shape[1] < 1:
        raise ValueError(f"preference matrix must be 2-D and nonempty, got shape {p.shape}")
    n, m = p.shape
    lam1, lam2 = params.lambda1, params.lambda2
    q = np.zeros((n + m, n + m))
    q[:n, :n] = np.eye(n)
    q[:n, n:] = -p
    q[n:, :n] = -p.T
    ptp = p.T @ p
    q[n:, n:] = 0.5 * (ptp + ptp.T)
    q *= lam2
    s = np.concatenate([-np.ones(n), lam1 * np.ones(m)])
    return QuboProblem(q=q, s=s, offset=0.0, var_split=(n, m), constraint_weight=lam2)


def save_qubo_json(problem: QuboProblem, path) -> None:
    """Write the upper-triangle JSON interchange form.

    Quadratic entries are polynomial coefficients: an (i, j) entry with i < j
    carries ``2 * q[i, j]`` so that ``sum_{i<=j} val * w_i w_j`` reproduces the
    symmetric form.
    """
    quad = []
    qm = problem.q
    for i in range(problem.d):
        if qm[i, i] != 0.0:
            quad.append([i, i, qm[i, i]])
        for j in range(i + 1, problem.d):
            if qm[i, j] != 0.0:
                quad.append([i, j, 2.0 * qm[i, j]])
    doc = {
        "d": problem.d,
        "var_split": list(problem.var_split) if problem.var_split else None,
        "constraint_weight": problem.constraint_weight,
        "offset": problem.offset,
        "linear": problem.s.tolist(),
        "quadratic": quad,
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True)


def load_qubo_json(path) -> QuboProblem:
    with open(path) as fh:
        doc = json.load(fh)
    d = int(doc["d"])
    q = np.zeros((d, d))
    for i, j, val in doc["quadratic"]:
        if i == j:
            q[i, i] = val
        else:
            q[i, j] = val / 2.0
            q[j, i] = val / 2.0
    split = doc.get("var_split")
    return QuboProblem(
        q=q,
        s=np.asarray(doc["linear"], dtype=float),
        offset=float(doc.get("offset", 0.0)),
        var_split=tuple(split) if split else None,
        constraint_weight=doc.get("constraint_weight"),
    )
