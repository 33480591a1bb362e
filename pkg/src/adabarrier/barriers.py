"""Self-concordant barriers, local norms and Dikin-ellipsoid utilities.

A barrier is exposed through a small oracle interface: ``value``, ``gradient``,
``hessian`` (or all three at once through ``oracle``) plus a strict domain test.
Values outside the open domain are ``+inf``; derivatives there raise
:class:`~adabarrier.errors.OutsideDomain`.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import (
    DimensionMismatch,
    IllConditionedMetric,
    InvalidBounds,
    InvalidDimension,
    InvalidRadius,
    OutOfRange,
    OutsideDomain,
)

__all__ = [
    "Region",
    "Barrier",
    "LogOrthant",
    "LogBox",
    "LogBall",
    "SumBarrier",
    "LocalMetric",
    "make_log_orthant",
    "make_log_box",
    "make_log_ball",
    "sum_barriers",
    "local_norm",
    "dual_local_norm",
    "omega",
    "dikin_step_feasible",
    "estimate_barrier_parameter",
]


class Region(enum.Enum):
    INTERIOR = "interior"
    BOUNDARY_OR_OUTSIDE = "boundary_or_outside"


class Barrier:
    """Base class for a ``nu``-self-concordant barrier on an open convex set."""

    dimension: int
    nu: float

    def domain_test(self, x) -> Region:
        x = self._check(x)
        if np.all(np.isfinite(x)) and self._inside(x):
            return Region.INTERIOR
        return Region.BOUNDARY_OR_OUTSIDE

    def is_interior(self, x) -> bool:
        return self.domain_test(x) is Region.INTERIOR

    def value(self, x) -> float:
        x = self._check(x)
        if not self._inside(x):
            return math.inf
        return float(self._value(x))

    def gradient(self, x) -> np.ndarray:
        x = self._require_interior(x)
        return self._gradient(x)

    def hessian(self, x) -> np.ndarray:
        x = self._require_interior(x)
        return self._hessian(x)

    def oracle(self, x):
        """Return ``(value, gradient, hessian)`` at an interior point."""
        x = self._require_interior(x)
        return float(self._value(x)), self._gradient(x), self._hessian(x)

    def random_interior(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Draw ``size`` interior points (rows); used by the numeric test suites."""
        raise NotImplementedError

    def sample_closure(self, rng: np.random.Generator, size: int, scale: float = 10.0) -> np.ndarray:
        """Draw points of the closed set, boundary included, within radius ``scale``."""
        raise NotImplementedError

    # subclass hooks
    def _inside(self, x) -> bool:
        raise NotImplementedError

    def _value(self, x):
        raise NotImplementedError

    def _gradient(self, x):
        raise NotImplementedError

    def _hessian(self, x):
        raise NotImplementedError

    def _check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dimension,):
            raise DimensionMismatch(f"expected a point of shape ({self.dimension},), got {x.shape}")
        return x

    def _require_interior(self, x) -> np.ndarray:
        x = self._check(x)
        if not (np.all(np.isfinite(x)) and self._inside(x)):
            raise OutsideDomain("point is not in the interior of the barrier domain")
        return x


class LogOrthant(Barrier):
    """``h(x) = -sum(log x_i)`` on the positive orthant, ``nu = n``."""

    def __init__(self, n: int):
        if int(n) != n or n < 1:
            raise InvalidDimension(f"orthant dimension must be a positive integer, got {n!r}")
        self.dimension = int(n)
        self.nu = float(n)

    def __repr__(self):
        return f"LogOrthant(n={self.dimension})"

    def _inside(self, x):
        return bool(np.all(x > 0.0))

    def _value(self, x):
        return -np.sum(np.log(x))

    def _gradient(self, x):
        return -1.0 / x

    def _hessian(self, x):
        return np.diag(1.0 / x**2)

    def random_interior(self, rng, size):
        return np.exp(rng.uniform(-3.0, 2.0, size=(size, self.dimension)))

    def sample_closure(self, rng, size, scale=10.0):
        pts = rng.exponential(1.0, size=(size, self.dimension))
        # Knock out coordinates so that boundary faces are visited too.
        pts[rng.random(pts.shape) < 0.3] = 0.0
        norms = np.linalg.norm(pts, axis=1, keepdims=True)
        shrink = np.minimum(1.0, scale * rng.random((size, 1)) / np.maximum(norms, 1e-300))
        return pts * shrink


class LogBox(Barrier):
    """``h(x) = -sum log(x_i - l_i) - sum log(u_i - x_i)``, ``nu = 2n``."""

    def __init__(self, lower, upper):
        lower = np.atleast_1d(np.asarray(lower, dtype=float))
        upper = np.atleast_1d(np.asarray(upper, dtype=float))
        if lower.ndim != 1 or lower.shape != upper.shape or lower.size == 0:
            raise InvalidBounds("lower and upper must be non-empty vectors of equal length")
        if not np.all(np.isfinite(lower)) or not np.all(np.isfinite(upper)):
            raise InvalidBounds("box bounds must be finite")
        if np.any(lower >= upper):
            raise InvalidBounds("every lower bound must be strictly below its upper bound")
        self.lower = lower
        self.upper = upper
        self.dimension = lower.size
        self.nu = 2.0 * lower.size

    def __repr__(self):
        return f"LogBox(n={self.dimension})"

    def _inside(self, x):
        return bool(np.all(x > self.lower) and np.all(x < self.upper))

    def _value(self, x):
        return -np.sum(np.log(x - self.lower)) - np.sum(np.log(self.upper - x))

    def _gradient(self, x):
        return -1.0 / (x - self.lower) + 1.0 / (self.upper - x)

    def _hessian(self, x):
        return np.diag(1.0 / (x - self.lower) ** 2 + 1.0 / (self.upper - x) ** 2)

    def random_interior(self, rng, size):
        t = rng.uniform(1e-3, 1.0 - 1e-3, size=(size, self.dimension))
        return self.lower + t * (self.upper - self.lower)

    def sample_closure(self, rng, size, scale=10.0):
        t = rng.random((size, self.dimension))
        # A third of the samples are vertices, where linear functionals peak.
        vert = rng.random(size) < 1.0 / 3.0
        t[vert] = np.round(t[vert])
        return self.lower + t * (self.upper - self.lower)


class LogBall(Barrier):
    """``h(x) = -log(R^2 - ||x - c||^2)`` on the open Euclidean ball.

    The stored ``nu`` is an upper bound found by sampling
    ``<grad h, H^{-1} grad h>`` along radial lines (see
    :func:`estimate_barrier_parameter`) and rounding up.
    """

    def __init__(self, center, radius: float, nu: float | None = None):
        center = np.atleast_1d(np.asarray(center, dtype=float))
        if center.ndim != 1 or center.size == 0:
            raise InvalidDimension("ball center must be a non-empty vector")
        if not (radius > 0.0) or not math.isfinite(radius):
            raise InvalidRadius(f"radius must be positive and finite, got {radius!r}")
        self.center = center
        self.radius = float(radius)
        self.dimension = center.size
        self.nu = 1.0  # placeholder so the estimator can evaluate the oracle
        if nu is None:
            nu = max(1.0, math.ceil(estimate_barrier_parameter(self) - 1e-12))
        self.nu = float(nu)

    def __repr__(self):
        return f"LogBall(n={self.dimension}, radius={self.radius})"

    def _slack(self, x):
        d = x - self.center
        return self.radius**2 - d @ d

    def _inside(self, x):
        return bool(self._slack(x) > 0.0)

    def _value(self, x):
        return -math.log(self._slack(x))

    def _gradient(self, x):
        return 2.0 * (x - self.center) / self._slack(x)

    def _hessian(self, x):
        d = x - self.center
        phi = self._slack(x)
        return 2.0 * np.eye(self.dimension) / phi + 4.0 * np.outer(d, d) / phi**2

    def random_interior(self, rng, size):
        return self.center + self.radius * 0.999 * _uniform_ball(rng, size, self.dimension)

    def sample_closure(self, rng, size, scale=10.0):
        pts = _uniform_ball(rng, size, self.dimension)
        on_sphere = rng.random(size) < 0.3
        pts[on_sphere] /= np.linalg.norm(pts[on_sphere], axis=1, keepdims=True)
        return self.center + self.radius * pts


class SumBarrier(Barrier):
    """Barrier of an intersection: values, derivatives and parameters add."""

    def __init__(self, first: Barrier, second: Barrier):
        if first.dimension != second.dimension:
            raise DimensionMismatch(
                f"cannot add barriers of dimensions {first.dimension} and {second.dimension}"
            )
        self.parts = (first, second)
        self.dimension = first.dimension
        self.nu = first.nu + second.nu

    def __repr__(self):
        return f"SumBarrier({self.parts[0]!r}, {self.parts[1]!r})"

    def _inside(self, x):
        return all(p._inside(x) for p in self.parts)

    def _value(self, x):
        return sum(p._value(x) for p in self.parts)

    def _gradient(self, x):
        return self.parts[0]._gradient(x) + self.parts[1]._gradient(x)

    def _hessian(self, x):
        return self.parts[0]._hessian(x) + self.parts[1]._hessian(x)

    def random_interior(self, rng, size):
        out = []
        for _ in range(1000):
            cand = self.parts[0].random_interior(rng, size)
            out.extend(row for row in cand if self.parts[1]._inside(row))
            if len(out) >= size:
                return np.array(out[:size])
        raise RuntimeError("could not sample the interior of the intersection")

    def sample_closure(self, rng, size, scale=10.0):
        out = []
        for _ in range(1000):
            cand = self.parts[0].sample_closure(rng, size, scale)
            for row in cand:
                # closure test: limit of interior points along the segment to an interior point
                if self.parts[1]._inside(row) or _in_closure(self.parts[1], row):
                    out.append(row)
            if len(out) >= size:
                return np.array(out[:size])
        raise RuntimeError("could not sample the closure of the intersection")


def _in_closure(barrier: Barrier, x) -> bool:
    center = barrier.random_interior(np.random.default_rng(0), 1)[0]
    return barrier._inside(x + 1e-9 * (center - x))


def _uniform_ball(rng, size, dim):
    g = rng.standard_normal((size, dim))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return g * rng.random((size, 1)) ** (1.0 / dim)


def make_log_orthant(n: int) -> LogOrthant:
    return LogOrthant(n)


def make_log_box(lower, upper) -> LogBox:
    return LogBox(lower, upper)


def make_log_ball(center, radius: float) -> LogBall:
    return LogBall(center, radius)


def sum_barriers(b1: Barrier, b2: Barrier) -> SumBarrier:
    return SumBarrier(b1, b2)


def estimate_barrier_parameter(barrier: Barrier, n_directions: int = 64, n_radii: int = 200, seed: int = 0) -> float:
    """Largest sampled ``<grad h, H^{-1} grad h>`` along radial lines.

    Only meaningful for barriers with a ``center``/``radius`` pair (the ball);
    lines run from the center to within ``1e-9`` of the boundary.
    """
    rng = np.random.default_rng(seed)
    dirs = rng.standard_normal((n_directions, barrier.dimension))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    radii = barrier.radius * (1.0 - np.geomspace(1.0, 1e-9, n_radii))
    best = 0.0
    for d in dirs:
        for s in radii:
            x = barrier.center + s * d
            g = barrier._gradient(x)
            H = barrier._hessian(x)
            best = max(best, float(g @ np.linalg.solve(H, g)))
    return best


@dataclass(frozen=True)
class LocalMetric:
    """Cholesky-factored barrier Hessian at an anchor point.

    ``factor`` is the lower-triangular ``C`` with ``H = C C^T``.
    """

    anchor: np.ndarray | None
    hessian: np.ndarray
    factor: np.ndarray
    condition_estimate: float

    @classmethod
    def at(cls, barrier: Barrier, x) -> "LocalMetric":
        return cls.from_hessian(barrier.hessian(x), anchor=np.asarray(x, dtype=float))

    @classmethod
    def from_hessian(cls, H, anchor=None) -> "LocalMetric":
        H = np.asarray(H, dtype=float)
        if H.ndim != 2 or H.shape[0] != H.shape[1]:
            raise DimensionMismatch(f"Hessian must be square, got shape {H.shape}")
        C = _cholesky_with_jitter(H)
        d = np.diag(C)
        cond = float((d.max() / d.min()) ** 2) if d.size else 1.0
        return cls(anchor=anchor, hessian=H, factor=C, condition_estimate=cond)

    @property
    def dimension(self) -> int:
        return self.hessian.shape[0]

    def solve(self, s) -> np.ndarray:
        """Return ``H^{-1} s``."""
        return scipy.linalg.cho_solve((self.factor, True), s)

    def norm(self, v) -> float:
        w = self.factor.T @ v
        return float(np.sqrt(w @ w))

    def dual_norm(self, s) -> float:
        w = scipy.linalg.solve_triangular(self.factor, s, lower=True)
        return float(np.sqrt(w @ w))


def _cholesky_with_jitter(H: np.ndarray) -> np.ndarray:
    # Factor the unit-diagonal rescaling of H; barrier Hessians near the boundary
    # have diagonals spanning many orders of magnitude.
    n = H.shape[0]
    if n == 0:
        return np.zeros((0, 0))
    d = np.diag(H)
    if not np.all(np.isfinite(d)) or np.any(d <= 0.0):
        raise IllConditionedMetric("barrier Hessian has a non-positive or non-finite diagonal")
    r = np.sqrt(d)
    Hs = H / r[:, None] / r[None, :]
    try:
        return r[:, None] * np.linalg.cholesky(Hs)
    except np.linalg.LinAlgError:
        pass
    try:
        return r[:, None] * np.linalg.cholesky(Hs + 1e-12 * np.eye(n))
    except np.linalg.LinAlgError as exc:
        raise IllConditionedMetric("barrier Hessian is numerically indefinite") from exc


def _vector(metric: LocalMetric, v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (metric.dimension,):
        raise DimensionMismatch(f"expected a vector of shape ({metric.dimension},), got {v.shape}")
    return v


def local_norm(metric: LocalMetric, v) -> float:
    """``sqrt(<H(x) v, v>)``."""
    return metric.norm(_vector(metric, v))


def dual_local_norm(metric: LocalMetric, s) -> float:
    """``sqrt(<H(x)^{-1} s, s>)``."""
    return metric.dual_norm(_vector(metric, s))


_OMEGA_SERIES_CUTOFF = 1e-4


def omega(t: float) -> float:
    """``(-t - ln(1 - t)) / t^2`` on ``[0, 1)``; continuous at 0 with value 1/2."""
    t = float(t)
    if not (0.0 <= t < 1.0):
        raise OutOfRange(f"omega is defined on [0, 1), got {t!r}")
    if t < _OMEGA_SERIES_CUTOFF:
        return 1 / 2 + t / 3 + t**2 / 4 + t**3 / 5 + t**4 / 6
    return (-t - math.log1p(-t)) / t**2


def dikin_step_feasible(metric: LocalMetric, v, t: float) -> bool:
    """True iff ``t * ||v||_x < 1``, i.e. ``x + t v`` lies in the unit Dikin ellipsoid."""
    return bool(t * local_norm(metric, v) < 1.0)
