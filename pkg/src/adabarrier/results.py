"""Containers shared by both solvers: trace rows, status, and the solve output."""

from __future__ import annotations

import enum
import io
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

TRACE_HEADER = ("k", "inner", "estimate", "alpha", "vnorm", "Fmu", "f", "feas", "accepted", "ms")


class Status(enum.Enum):
    CONVERGED = "Converged"
    MAX_ITERATIONS = "MaxIterations"
    FAILURE = "Failure"


@dataclass(slots=True)
class TraceRow:
    """One inner trial.

    The first ten fields are the CSV columns. ``Fmu``, ``f`` and ``feas`` refer to
    the trial point ``z = x + alpha v``. The remaining fields are kept in memory
    for audits: the potential at the base point, the stopping threshold of the
    outer iteration, and whether the step was actually taken.
    """

    k: int
    inner: int
    estimate: float
    alpha: float
    vnorm: float
    Fmu: float
    f: float
    feas: float
    accepted: bool
    ms: float
    Fmu_base: float = float("nan")
    threshold: float = float("nan")
    interior: bool = True
    taken: bool = False
    epoch: int = 0


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.17g}"


def trace_to_csv(rows, include_time: bool = True) -> str:
    header = TRACE_HEADER if include_time else TRACE_HEADER[:-1]
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for r in rows:
        vals = [r.k, r.inner, r.estimate, r.alpha, r.vnorm, r.Fmu, r.f, r.feas, r.accepted]
        if include_time:
            vals.append(r.ms)
        buf.write(",".join(_fmt(v) for v in vals) + "\n")
    return buf.getvalue()


@dataclass
class SolveOutput:
    algorithm: str
    x: np.ndarray
    y: np.ndarray
    s: np.ndarray
    L_final: float
    status: Status
    iterations: int
    inner_trials: int
    trace: list = field(default_factory=list)
    reason: str = ""
    eps: float = float("nan")
    mu: float = float("nan")
    nu: float = float("nan")
    vnorm_final: float = float("nan")
    threshold_final: float = float("nan")
    L_max: float = float("nan")
    L_init: float = float("nan")
    L_last: float = float("nan")
    F0: float = float("nan")
    f0: float = float("nan")
    f_final: float = float("nan")
    certificate: Optional[object] = None
    second_order: Optional[object] = None
    eps2: float = float("nan")
    epochs: int = 1

    @property
    def converged(self) -> bool:
        return self.status is Status.CONVERGED

    def recompute_s(self, objective, constraint) -> np.ndarray:
        return dual_residual(objective.gradient(self.x), constraint, self.y)


def dual_residual(grad_f, constraint, y) -> np.ndarray:
    """``grad f - A^T y``."""
    grad_f = np.asarray(grad_f, dtype=float)
    if constraint.m == 0:
        return grad_f.copy()
    return grad_f - constraint.A.T @ y
