"""Independent oracles used to freeze expected values.

Everything here is deliberately brute force (enumeration, grid search,
quadrature) and shares no code with the library paths it checks.
"""

import functools

import numpy as np
from scipy.integrate import quad


def cdf_quantile(values, weights, q):
    """Weighted quantile by explicit CDF enumeration over sorted atoms."""
    pairs = sorted(zip(values, weights))
    acc = 0.0
    for v, w in pairs:
        acc += w
        if acc >= q:
            return v
    return pairs[-1][0]


@functools.lru_cache(maxsize=None)
def _compositions(total, parts):
    if parts == 1:
        return np.array([[total]], dtype=np.int32)
    blocks = []
    for first in range(total + 1):
        rest = _compositions(total - first, parts - 1)
        blocks.append(np.hstack([
            np.full((rest.shape[0], 1), first, dtype=np.int32), rest,
        ]))
    return np.vstack(blocks)


def simplex_grid(m, step_inv=100):
    """All weight vectors on the m-simplex with resolution 1/step_inv."""
    return _compositions(step_inv, m).astype(np.float64) / step_inv


def grid_search_objective(s, step_inv=100, chunk=200_000):
    """Minimum of w -> sum_i ||sum_j w_j Q_j - Q_i||_{F_k} over the grid."""
    s = np.asarray(s, dtype=np.float64)
    m = s.shape[0]
    grid = _compositions(step_inv, m)
    diag = np.diag(s)
    best = np.inf
    for start in range(0, grid.shape[0], chunk):
        w = grid[start:start + chunk].astype(np.float64) / step_inv
        ws = w @ s
        quad_form = np.einsum("ij,ij->i", w, ws)
        d2 = quad_form[:, None] - 2.0 * ws + diag[None, :]
        best = min(best, float(np.sqrt(np.maximum(d2, 0.0)).sum(axis=1).min()))
    return best


def brute_force_metric_median(d):
    """Exhaustive search over every (center, radius) pair of the definition."""
    d = np.asarray(d, dtype=np.float64)
    m = d.shape[0]
    need = m // 2 + 1  # strictly more than half
    best_radius, best_index = np.inf, None
    for j in range(m):
        for radius in sorted(d[:, j]):
            if int(np.sum(d[:, j] <= radius)) >= need:
                if radius < best_radius - 1e-15:
                    best_radius, best_index = radius, j
                break
    return best_index, best_radius / 2.0


def hellinger_quadrature(mu1, var1, mu2, var2):
    """1-D Hellinger distance by numerical integration of the definition."""

    def density(x, mu, var):
        return np.exp(-0.5 * (x - mu) ** 2 / var) / np.sqrt(2 * np.pi * var)

    lo = min(mu1, mu2) - 12 * np.sqrt(max(var1, var2))
    hi = max(mu1, mu2) + 12 * np.sqrt(max(var1, var2))
    integrand = lambda x: (np.sqrt(density(x, mu1, var1)) - np.sqrt(density(x, mu2, var2))) ** 2
    value, _ = quad(integrand, lo, hi, limit=200)
    return np.sqrt(0.5 * value)


def double_sum_mmd_squared(atoms_p, weights_p, atoms_q, weights_q, kernel_fn):
    """Literal quadruple-loop evaluation of the discrete MMD formula."""
    total = 0.0
    for wi, zi in zip(weights_p, atoms_p):
        for wj, zj in zip(weights_p, atoms_p):
            total += wi * wj * kernel_fn(zi, zj)
    for wi, yi in zip(weights_q, atoms_q):
        for wj, yj in zip(weights_q, atoms_q):
            total += wi * wj * kernel_fn(yi, yj)
    for wi, zi in zip(weights_p, atoms_p):
        for wj, yj in zip(weights_q, atoms_q):
            total -= 2.0 * wi * wj * kernel_fn(zi, yj)
    return total
