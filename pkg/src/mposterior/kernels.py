"""Positive-definite kernels, RKHS inner products, MMD, and Hellinger forms.

Both kernel variants are normalized so that k(x, x) = 1. Each variant knows
how to pre-scale points so that k(x, y) = exp(-||u - v||^2) on the scaled
points, which is the single primitive the hot loop implements.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
from scipy.spatial.distance import cdist, pdist

from ._accel import weighted_gauss_sum
from .measures import EmpiricalMeasure


@dataclass(frozen=True)
class GaussianKernel:
    """Isotropic Gaussian kernel k(x, y) = exp(-||x - y||^2 / (2 h^2))."""

    bandwidth: float

    def __post_init__(self):
        if not (np.isfinite(self.bandwidth) and self.bandwidth > 0):
            raise ValueError("bandwidth must be a positive finite number")

    def scale_points(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(points, dtype=np.float64) / (self.bandwidth * math.sqrt(2.0))


@dataclass(frozen=True)
class MahalanobisKernel:
    """Scaled Gaussian kernel k(x, y) = exp(-(x-y)^T A (x-y)) with A SPD."""

    scale: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.scale, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("scale must be a square matrix")
        if not np.allclose(a, a.T, rtol=0, atol=1e-10):
            raise ValueError("scale matrix must be symmetric")
        a = (a + a.T) / 2.0
        try:
            chol = np.linalg.cholesky(a)
        except np.linalg.LinAlgError as exc:
            raise ValueError("scale matrix must be positive definite") from exc
        a.flags.writeable = False
        object.__setattr__(self, "scale", a)
        object.__setattr__(self, "_chol", chol)

    @classmethod
    def from_covariance(cls, sigma) -> "MahalanobisKernel":
        """Kernel matched to a Gaussian model: A = inv(sigma) / 8."""
        sigma = np.asarray(sigma, dtype=np.float64)
        a = np.linalg.inv(sigma) / 8.0
        return cls((a + a.T) / 2.0)

    def scale_points(self, points: np.ndarray) -> np.ndarray:
        # (x-y)^T A (x-y) = ||L^T x - L^T y||^2 for A = L L^T.
        return np.asarray(points, dtype=np.float64) @ self._chol


KernelSpec = Union[GaussianKernel, MahalanobisKernel]


def _kernel_dim(spec: KernelSpec):
    return None if isinstance(spec, GaussianKernel) else spec.scale.shape[0]


def _check_dim(spec: KernelSpec, dim: int):
    expected = _kernel_dim(spec)
    if expected is not None and expected != dim:
        raise ValueError(f"kernel expects dimension {expected}, got {dim}")


def eval_kernel(spec: KernelSpec, x, y) -> float:
    """Kernel value k(x, y); always in (0, 1] and symmetric."""
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    y = np.atleast_1d(np.asarray(y, dtype=np.float64))
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be vectors of equal dimension")
    _check_dim(spec, x.shape[0])
    u = spec.scale_points(x[None, :])
    v = spec.scale_points(y[None, :])
    return float(np.exp(-np.sum((u - v) ** 2)))


def gram(spec: KernelSpec, xs, ys) -> np.ndarray:
    """Dense kernel matrix k(xs[i], ys[j])."""
    xs = np.atleast_2d(np.asarray(xs, dtype=np.float64))
    ys = np.atleast_2d(np.asarray(ys, dtype=np.float64))
    if xs.shape[1] != ys.shape[1]:
        raise ValueError("point sets have mismatched dimensions")
    _check_dim(spec, xs.shape[1])
    u = spec.scale_points(xs)
    v = spec.scale_points(ys)
    return np.exp(-cdist(u, v, "sqeuclidean"))


def rho_k(spec: KernelSpec, x, y) -> float:
    """Kernel-induced metric sqrt(k(x,x) + k(y,y) - 2 k(x,y)) = sqrt(2 - 2k)."""
    return math.sqrt(max(2.0 - 2.0 * eval_kernel(spec, x, y), 0.0))


def _canonical_pair(p: EmpiricalMeasure, q: EmpiricalMeasure):
    # Fix the summation orientation so inner_product(P, Q) and
    # inner_product(Q, P) run the identical float reduction.
    if p is q or p.n_atoms > q.n_atoms:
        return p, q
    if p.n_atoms < q.n_atoms:
        return q, p
    pa, qa = p.atoms.tobytes(), q.atoms.tobytes()
    if pa != qa:
        return (p, q) if pa > qa else (q, p)
    return (p, q) if p.weights.tobytes() >= q.weights.tobytes() else (q, p)


def inner_product(p: EmpiricalMeasure, q: EmpiricalMeasure, spec: KernelSpec) -> float:
    """RKHS inner product of mean embeddings: sum_ij b_i g_j k(z_i, y_j).

    Symmetric in (p, q) bit-for-bit: the arguments are put in a canonical
    order before the double sum runs.
    """
    if p.dim != q.dim:
        raise ValueError("measures have mismatched dimensions")
    _check_dim(spec, p.dim)
    first, second = _canonical_pair(p, q)
    u = spec.scale_points(first.atoms)
    v = spec.scale_points(second.atoms)
    return weighted_gauss_sum(u, first.weights, v, second.weights)


def mmd_squared(p: EmpiricalMeasure, q: EmpiricalMeasure, spec: KernelSpec) -> float:
    """Squared MMD between discrete measures, clamped to zero at roundoff.

    Computed exactly as the three-term decomposition
    <P,P> + <Q,Q> - 2<P,Q>; tiny negative values produced by cancellation
    are clamped to 0.
    """
    value = (
        inner_product(p, p, spec)
        + inner_product(q, q, spec)
        - 2.0 * inner_product(p, q, spec)
    )
    return max(value, 0.0)


def mmd(p: EmpiricalMeasure, q: EmpiricalMeasure, spec: KernelSpec) -> float:
    return math.sqrt(mmd_squared(p, q, spec))


def median_bandwidth(pooled_atoms) -> float:
    """Median pairwise Euclidean distance over all distinct index pairs.

    More than 1000 points are thinned by a deterministic stride before the
    O(N^2) distance computation. Raises when the spread degenerates (median
    distance zero, e.g. all points coincident).
    """
    pts = np.atleast_2d(np.asarray(pooled_atoms, dtype=np.float64))
    if pts.ndim != 2 or pts.shape[0] < 2:
        raise ValueError("need at least two points")
    if pts.shape[0] > 1000:
        stride = int(np.ceil(pts.shape[0] / 1000))
        pts = pts[::stride]
    h = float(np.median(pdist(pts)))
    if not h > 0:
        raise ValueError("no positive pairwise distance among the points")
    return h


def hellinger_gaussian(mu1, sigma1, mu2, sigma2) -> float:
    """Hellinger distance between N(mu1, sigma1) and N(mu2, sigma2).

    h^2 = 1 - det^{1/4}(S1 S2) / det^{1/2}((S1+S2)/2)
              * exp(-1/8 (mu1-mu2)^T ((S1+S2)/2)^{-1} (mu1-mu2))
    """
    mu1 = np.atleast_1d(np.asarray(mu1, dtype=np.float64))
    mu2 = np.atleast_1d(np.asarray(mu2, dtype=np.float64))
    sigma1 = np.atleast_2d(np.asarray(sigma1, dtype=np.float64))
    sigma2 = np.atleast_2d(np.asarray(sigma2, dtype=np.float64))
    if mu1.shape != mu2.shape or sigma1.shape != sigma2.shape:
        raise ValueError("mean/covariance shapes must match")
    for s in (sigma1, sigma2):
        try:
            np.linalg.cholesky((s + s.T) / 2.0)
        except np.linalg.LinAlgError as exc:
            raise ValueError("covariance matrices must be positive definite") from exc
    avg = (sigma1 + sigma2) / 2.0
    delta = mu1 - mu2
    sign1, logdet1 = np.linalg.slogdet(sigma1)
    sign2, logdet2 = np.linalg.slogdet(sigma2)
    sign_avg, logdet_avg = np.linalg.slogdet(avg)
    if min(sign1, sign2, sign_avg) <= 0:
        raise ValueError("covariance matrices must be positive definite")
    quad = float(delta @ np.linalg.solve(avg, delta))
    log_bc = 0.25 * (logdet1 + logdet2) - 0.5 * logdet_avg - 0.125 * quad
    h2 = 1.0 - math.exp(log_bc)
    return math.sqrt(min(max(h2, 0.0), 1.0))


def hellinger_expfam(logpartition: Callable, theta1, theta2) -> float:
    """Hellinger distance within an exponential family from its log-partition.

    h^2 = 1 - exp(-(G(t1) + G(t2) - 2 G((t1+t2)/2)) / 2).
    """
    t1 = np.atleast_1d(np.asarray(theta1, dtype=np.float64))
    t2 = np.atleast_1d(np.asarray(theta2, dtype=np.float64))
    if t1.shape != t2.shape:
        raise ValueError("theta1 and theta2 must have equal shapes")
    values = [float(logpartition(t)) for t in (t1, t2, (t1 + t2) / 2.0)]
    if not all(math.isfinite(v) for v in values):
        raise ValueError("log-partition must be finite at both points and their midpoint")
    bracket = values[0] + values[1] - 2.0 * values[2]
    h2 = 1.0 - math.exp(-0.5 * bracket)
    return math.sqrt(min(max(h2, 0.0), 1.0))


def kernel_to_config(spec: KernelSpec) -> dict:
    """Serialize a kernel to its config form."""
    if isinstance(spec, GaussianKernel):
        return {"type": "gaussian", "h": spec.bandwidth}
    return {"type": "mahalanobis", "A": spec.scale.tolist()}


def kernel_from_config(config: dict) -> KernelSpec:
    """Parse `{type: "gaussian"|"mahalanobis", h: float | A: matrix}`."""
    kind = config.get("type")
    if kind == "gaussian":
        return GaussianKernel(float(config["h"]))
    if kind == "mahalanobis":
        return MahalanobisKernel(np.asarray(config["A"], dtype=np.float64))
    raise ValueError(f"unknown kernel type: {kind!r}")
