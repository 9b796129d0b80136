"""Data partitioning and closed-form subset posteriors.

The stochastic approximation treats each point of a subset as observed
``multiplicity`` times (the subset likelihood raised to that power), which
keeps the subset posterior variance at full-data scale. For the Gaussian
models here this is exact: the conjugate posterior uses l*m in place of l,
and GP regression divides the noise variance by the multiplicity.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .kernels import GaussianKernel, gram
from .measures import EmpiricalMeasure, make_empirical

GP_JITTER = 1e-10


class PartitionStrategy(enum.Enum):
    RANDOM_DISJOINT = "random_disjoint"
    GRID_STRIDED = "grid_strided"


@dataclass(frozen=True)
class PartitionPlan:
    """Disjoint index groups covering 0..n-1."""

    groups: tuple
    strategy: PartitionStrategy
    seed: int

    def __post_init__(self):
        groups = tuple(np.asarray(g, dtype=np.intp) for g in self.groups)
        if not groups:
            raise ValueError("plan needs at least one group")
        n = sum(len(g) for g in groups)
        combined = np.concatenate(groups)
        if not np.array_equal(np.sort(combined), np.arange(n)):
            raise ValueError("groups must be disjoint and cover 0..n-1")
        floor_size = n // len(groups)
        if any(len(g) < floor_size for g in groups):
            raise ValueError("every group must have at least floor(n/m) indices")
        object.__setattr__(self, "groups", groups)

    @property
    def n(self) -> int:
        return sum(len(g) for g in self.groups)

    @property
    def m(self) -> int:
        return len(self.groups)

    def to_json_dict(self) -> dict:
        return {
            "strategy": self.strategy.value,
            "seed": self.seed,
            "groups": [g.tolist() for g in self.groups],
        }


def partition(n: int, m: int, strategy=PartitionStrategy.RANDOM_DISJOINT, seed: int = 0) -> PartitionPlan:
    """Split 0..n-1 into m disjoint groups (requires 1 <= m <= n/2).

    RANDOM_DISJOINT shuffles with the seed and cuts contiguous chunks, the
    first n mod m of them one element larger. GRID_STRIDED assigns group j
    the indices {j, j+m, j+2m, ...}, which keeps fixed-design inputs on a
    coarser uniform grid (the input is assumed ordered along the grid).
    """
    if isinstance(strategy, str):
        strategy = PartitionStrategy(strategy)
    if m < 1 or m > n / 2:
        raise ValueError("require 1 <= m <= n/2")
    if strategy is PartitionStrategy.GRID_STRIDED:
        groups = [np.arange(j, n, m) for j in range(m)]
    else:
        order = np.random.default_rng(seed).permutation(n)
        base, extra = divmod(n, m)
        groups, start = [], 0
        for j in range(m):
            size = base + (1 if j < extra else 0)
            groups.append(np.sort(order[start:start + size]))
            start += size
    return PartitionPlan(tuple(groups), strategy, seed)


def read_data_csv(path):
    """Read observations from a CSV with header ``x1..xp`` or ``x1..xp,y``.

    Returns (X, y) with X of shape (n, p); y is None when the column is
    absent.
    """
    with open(Path(path), newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty data file")
    header = [c.strip() for c in rows[0]]
    has_y = header and header[-1] == "y"
    p = len(header) - (1 if has_y else 0)
    if p < 1 or header[:p] != [f"x{k}" for k in range(1, p + 1)]:
        raise ValueError(f"{path}: expected header 'x1..xp[,y]', got {header}")
    body = np.array([[float(c) for c in row] for row in rows[1:] if row])
    if body.size == 0:
        raise ValueError(f"{path}: no observations")
    xs = body[:, :p]
    return (xs, body[:, p]) if has_y else (xs, None)


@dataclass(frozen=True)
class FlatPrior:
    """Improper uniform prior on the mean."""


@dataclass(frozen=True)
class NormalPrior:
    """Gaussian prior N(mean, tau2 * I)."""

    mean: float = 0.0
    tau2: float = 1.0

    def __post_init__(self):
        if not self.tau2 > 0:
            raise ValueError("tau2 must be positive")


Prior = Union[FlatPrior, NormalPrior]


@dataclass(frozen=True)
class GaussianPosterior:
    """Closed-form Gaussian (subset) posterior with its multiplicity."""

    mean: np.ndarray
    covariance: np.ndarray
    multiplicity: int = 1

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=np.float64))
        cov = np.atleast_2d(np.asarray(self.covariance, dtype=np.float64))
        if cov.shape != (mean.shape[0], mean.shape[0]):
            raise ValueError("covariance shape must match the mean dimension")
        if not np.allclose(cov, cov.T, rtol=0, atol=1e-8):
            raise ValueError("covariance must be symmetric")
        try:
            np.linalg.cholesky(cov)
        except np.linalg.LinAlgError as exc:
            raise ValueError("covariance must be positive definite") from exc
        if self.multiplicity < 1:
            raise ValueError("multiplicity must be a positive integer")
        mean.flags.writeable = False
        cov.flags.writeable = False
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


def gaussian_subset_posterior(data, prior: Prior, sigma2: float, multiplicity: int = 1) -> GaussianPosterior:
    """Posterior of a Gaussian mean with known variance, likelihood^multiplicity.

    With l points, effective count lm = l * multiplicity:
      flat prior:           N(xbar, sigma2/lm * I)
      N(mu0, tau2 I) prior: precision-weighted combination
                            ((lm/sigma2) xbar + mu0/tau2) / (lm/sigma2 + 1/tau2),
                            variance 1 / (lm/sigma2 + 1/tau2).
    """
    data = np.atleast_1d(np.asarray(data, dtype=np.float64))
    if data.ndim == 1:
        data = data[:, None]
    if data.shape[0] < 1:
        raise ValueError("data must be nonempty")
    if not sigma2 > 0:
        raise ValueError("sigma2 must be positive")
    if multiplicity < 1:
        raise ValueError("multiplicity must be a positive integer")
    l, p = data.shape
    lm = l * multiplicity
    xbar = data.mean(axis=0)
    if isinstance(prior, FlatPrior):
        mean = xbar
        var = sigma2 / lm
    elif isinstance(prior, NormalPrior):
        mu0 = np.broadcast_to(np.atleast_1d(np.asarray(prior.mean, dtype=np.float64)), (p,))
        precision = lm / sigma2 + 1.0 / prior.tau2
        mean = ((lm / sigma2) * xbar + mu0 / prior.tau2) / precision
        var = 1.0 / precision
    else:
        raise ValueError(f"unsupported prior: {prior!r}")
    return GaussianPosterior(mean, var * np.eye(p), multiplicity)


def sample_gaussian(posterior: GaussianPosterior, count: int, seed) -> EmpiricalMeasure:
    """Draw count iid samples mean + L z (L the Cholesky factor), uniform weights."""
    if count < 1:
        raise ValueError("count must be at least 1")
    rng = np.random.default_rng(seed)
    chol = np.linalg.cholesky(posterior.covariance)
    draws = posterior.mean + rng.standard_normal((count, posterior.dim)) @ chol.T
    return make_empirical(draws)


@dataclass(frozen=True)
class GPModel:
    """Zero-mean GP regression model: isotropic Gaussian covariance kernel
    with the given length scale, observation-noise variance (nugget), and a
    fixed prediction grid."""

    length_scale: float
    noise_variance: float
    grid: np.ndarray

    def __post_init__(self):
        if not self.length_scale > 0:
            raise ValueError("length_scale must be positive")
        if not self.noise_variance > 0:
            raise ValueError("noise_variance must be positive")
        grid = np.asarray(self.grid, dtype=np.float64)
        if grid.ndim == 1:
            grid = grid[:, None]
        if grid.ndim != 2 or grid.shape[0] < 1:
            raise ValueError("prediction grid must be nonempty")
        grid.flags.writeable = False
        object.__setattr__(self, "grid", grid)


def gp_subset_posterior(xs, ys, model: GPModel, multiplicity: int = 1) -> GaussianPosterior:
    """GP posterior over the prediction grid, noise variance / multiplicity.

    mean = K*^T (K + (s_n^2/multiplicity) I)^{-1} y
    cov  = K** - K*^T (K + (s_n^2/multiplicity) I)^{-1} K*,
    symmetrized and jittered before use.
    """
    xs = np.asarray(xs, dtype=np.float64)
    if xs.ndim == 1:
        xs = xs[:, None]
    ys = np.asarray(ys, dtype=np.float64).ravel()
    if xs.shape[0] != ys.shape[0] or xs.shape[0] < 1:
        raise ValueError("xs and ys must be nonempty and equally long")
    if multiplicity < 1:
        raise ValueError("multiplicity must be a positive integer")
    if xs.shape[1] != model.grid.shape[1]:
        raise ValueError("training inputs and grid have mismatched dimensions")
    kern = GaussianKernel(model.length_scale)
    k_train = gram(kern, xs, xs) + (model.noise_variance / multiplicity) * np.eye(xs.shape[0])
    factor = cho_factor(k_train, lower=True)
    k_cross = gram(kern, xs, model.grid)
    k_grid = gram(kern, model.grid, model.grid)
    mean = k_cross.T @ cho_solve(factor, ys)
    cov = k_grid - k_cross.T @ cho_solve(factor, k_cross)
    cov = (cov + cov.T) / 2.0 + GP_JITTER * np.eye(model.grid.shape[0])
    return GaussianPosterior(mean, cov, multiplicity)
