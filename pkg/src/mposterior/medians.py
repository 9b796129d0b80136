"""Geometric and metric medians over measures embedded in an RKHS.

The geometric median of measures Q_1..Q_m is a mixture sum_j w_j Q_j; the
weights are found by Weiszfeld's fixed-point iteration, run entirely on the
precomputed matrix of RKHS inner products S[i][j] = <Q_i, Q_j>, since
||sum_j w_j Q_j - Q_i||^2 = w^T S w - 2 (S w)_i + S_ii.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .kernels import KernelSpec, inner_product, mmd
from .measures import EmpiricalMeasure

# Guard against division by zero when the iterate (nearly) coincides with an
# input measure; preserves fixed points.
DISTANCE_FLOOR = 1e-10

DEFAULT_EPSILON = 1e-8
DEFAULT_MAX_ITER = 1000


@dataclass(frozen=True)
class InnerProductMatrix:
    """Matrix of pairwise RKHS inner products between subset measures."""

    values: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.values, dtype=np.float64)
        if s.ndim != 2 or s.shape[0] != s.shape[1] or s.shape[0] < 1:
            raise ValueError("inner-product matrix must be square and nonempty")
        if not np.all(np.isfinite(s)):
            raise ValueError("inner-product matrix must be finite")
        if not np.allclose(s, s.T, rtol=0, atol=1e-10):
            raise ValueError("inner-product matrix must be symmetric within 1e-10")
        if np.any(np.diag(s) > 1.0 + 1e-10):
            raise ValueError("diagonal entries exceed 1 (kernels are unit-normalized)")
        if float(np.linalg.eigvalsh(s)[0]) < -1e-8:
            raise ValueError("inner-product matrix must be positive semidefinite")
        s = s.copy()
        s.flags.writeable = False
        object.__setattr__(self, "values", s)

    @property
    def m(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class WeiszfeldResult:
    """Output of the geometric-median iteration: simplex weights + diagnostics."""

    weights: np.ndarray
    iterations: int
    objective_trace: np.ndarray
    converged: bool

    def to_json_dict(self) -> dict:
        return {
            "weights": self.weights.tolist(),
            "iterations": self.iterations,
            "converged": self.converged,
            "objective_trace": self.objective_trace.tolist(),
        }


@dataclass(frozen=True)
class MetricMedianResult:
    index: int
    eps_star: float


@dataclass(frozen=True)
class ConcentrationParams:
    """Parameters of the median concentration bounds (alpha, q, gamma, m)."""

    alpha: float
    q: float
    gamma: float = 0.0
    m: int = 1

    def __post_init__(self):
        if not 0.0 < self.q < self.alpha < 0.5:
            raise ValueError("require 0 < q < alpha < 1/2")
        if not 0.0 <= self.gamma < (self.alpha - self.q) / (1.0 - self.q):
            raise ValueError("require 0 <= gamma < (alpha - q)/(1 - q)")
        if self.m < 1:
            raise ValueError("m must be a positive integer")

    @property
    def c_alpha(self) -> float:
        """Dilation constant (1 - alpha) sqrt(1 / (1 - 2 alpha)); always > 1."""
        return (1.0 - self.alpha) * math.sqrt(1.0 / (1.0 - 2.0 * self.alpha))


def psi(alpha: float, q: float) -> float:
    """KL divergence of Bernoulli(alpha) from Bernoulli(q) for q < alpha.

    psi(alpha, q) = (1-alpha) log((1-alpha)/(1-q)) + alpha log(alpha/q).
    """
    if not 0.0 < q < alpha < 1.0:
        raise ValueError("require 0 < q < alpha < 1")
    return (1.0 - alpha) * math.log((1.0 - alpha) / (1.0 - q)) + alpha * math.log(alpha / q)


def inner_product_matrix(measures, spec: KernelSpec) -> InnerProductMatrix:
    """Pairwise inner products; upper triangle computed, then mirrored."""
    measures = list(measures)
    if not measures:
        raise ValueError("need at least one measure")
    dim = measures[0].dim
    if any(q.dim != dim for q in measures):
        raise ValueError("all measures must share one dimension")
    m = len(measures)
    s = np.empty((m, m))
    for i in range(m):
        for j in range(i, m):
            s[i, j] = s[j, i] = inner_product(measures[i], measures[j], spec)
    return InnerProductMatrix(s)


def _mixture_distances(s: np.ndarray, w: np.ndarray) -> np.ndarray:
    """d_i = || sum_j w_j Q_j - Q_i ||_{F_k} expressed through S."""
    sw = s @ w
    return np.sqrt(np.clip(w @ sw - 2.0 * sw + np.diag(s), 0.0, None))


def weiszfeld(
    s,
    epsilon: float = DEFAULT_EPSILON,
    max_iter: int = DEFAULT_MAX_ITER,
) -> WeiszfeldResult:
    """Geometric-median weights by Weiszfeld iteration on the S matrix.

    Starts from uniform weights and repeats
    w_j <- d_j^{-1} / sum_i d_i^{-1}, with distances clamped below at
    DISTANCE_FLOOR, until the RKHS step size sqrt(dw^T S dw) drops to
    ``epsilon`` (converged) or ``max_iter`` updates have run.
    """
    if not isinstance(s, InnerProductMatrix):
        s = InnerProductMatrix(np.asarray(s, dtype=np.float64))
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")
    mat = s.values
    m = s.m
    w = np.full(m, 1.0 / m)
    d = _mixture_distances(mat, w)
    trace = [float(d.sum())]
    converged = False
    iterations = 0
    while iterations < max_iter:
        inv = 1.0 / np.maximum(d, DISTANCE_FLOOR)
        w_new = inv / inv.sum()
        delta = w_new - w
        step = math.sqrt(max(float(delta @ mat @ delta), 0.0))
        w = w_new
        iterations += 1
        d = _mixture_distances(mat, w)
        trace.append(float(d.sum()))
        if step <= epsilon:
            converged = True
            break
    return WeiszfeldResult(w, iterations, np.asarray(trace), converged)


def threshold_weights(w, m: int) -> np.ndarray:
    """Zero out weights below 1/(2m) and renormalize the survivors."""
    w = np.asarray(w, dtype=np.float64)
    if w.shape != (m,):
        raise ValueError("weight vector length must equal m")
    if np.any(w < 0) or abs(float(w.sum()) - 1.0) > 1e-9:
        raise ValueError("weights must be a simplex vector (sum 1 within 1e-9)")
    kept = np.where(w >= 1.0 / (2.0 * m), w, 0.0)
    total = float(kept.sum())
    if total <= 0:  # unreachable: max weight >= 1/m > 1/(2m)
        raise ValueError("thresholding removed all weight")
    return kept / total


def metric_median(d) -> MetricMedianResult:
    """Center of the smallest ball around an input point holding a majority.

    For each candidate j the radius r_j is the (floor(m/2)+1)-th smallest
    entry of column j (the point itself counts); eps_star = min_j r_j / 2 and
    ties break to the lowest index.
    """
    d = np.asarray(d, dtype=np.float64)
    if d.ndim != 2 or d.shape[0] != d.shape[1] or d.shape[0] < 1:
        raise ValueError("distance matrix must be square and nonempty")
    if not np.all(np.isfinite(d)):
        raise ValueError("distance matrix must be finite")
    if np.any(d < 0):
        raise ValueError("distances must be nonnegative")
    if not np.allclose(d, d.T, rtol=0, atol=1e-10):
        raise ValueError("distance matrix must be symmetric")
    if np.any(np.abs(np.diag(d)) > 1e-12):
        raise ValueError("distance matrix must have zero diagonal")
    m = d.shape[0]
    radii = np.sort(d, axis=0)[m // 2, :]
    index = int(np.argmin(radii))
    return MetricMedianResult(index=index, eps_star=float(radii[index]) / 2.0)


def select_m(candidates, spec: KernelSpec):
    """Pick the m value whose aggregate is the metric median of the sweep.

    ``candidates`` is a list of (m_value, aggregated measure) pairs; the
    pairwise MMD matrix of the aggregates feeds the metric median.
    """
    candidates = list(candidates)
    if not candidates:
        raise ValueError("need at least one candidate")
    measures = [measure for _, measure in candidates]
    dim = measures[0].dim
    if any(q.dim != dim for q in measures):
        raise ValueError("all candidate measures must share one dimension")
    n = len(measures)
    dist = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            dist[i, j] = dist[j, i] = mmd(measures[i], measures[j], spec)
    chosen = metric_median(dist)
    return candidates[chosen.index][0]
