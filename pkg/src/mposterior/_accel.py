"""Backend selection for the hot kernel-sum loop.

The compiled extension is preferred when present; a vectorized numpy
implementation is the fallback. ``MPOSTERIOR_BACKEND`` forces the choice:
``auto`` (default), ``compiled``, or ``python``.
"""

from __future__ import annotations

import os

import numpy as np
from scipy.spatial.distance import cdist

try:
    from . import _gauss_sum as _compiled
except ImportError:  # extension not built; numpy path still works
    _compiled = None

# Row-block size for the numpy path; bounds temporary memory at _BLOCK * len(v).
_BLOCK = 512


def _weighted_sum_python(u, b, v, g):
    total = 0.0
    for start in range(0, u.shape[0], _BLOCK):
        stop = start + _BLOCK
        kernel_block = np.exp(-cdist(u[start:stop], v, "sqeuclidean"))
        total += float(b[start:stop] @ kernel_block @ g)
    return total


def _resolve_backend():
    choice = os.environ.get("MPOSTERIOR_BACKEND", "auto").lower()
    if choice not in ("auto", "compiled", "python"):
        raise ValueError(f"unknown MPOSTERIOR_BACKEND value: {choice!r}")
    if choice == "python":
        return "python", _weighted_sum_python
    if _compiled is not None:
        return "compiled", _compiled.weighted_gauss_sum
    if choice == "compiled":
        raise ImportError("compiled backend requested but mposterior._gauss_sum is not built")
    return "python", _weighted_sum_python


_BACKEND_NAME, _IMPL = _resolve_backend()


def active_backend() -> str:
    """Name of the backend currently in use: 'compiled' or 'python'."""
    return _BACKEND_NAME


def use_backend(name: str) -> None:
    """Switch the active backend at runtime (tests and benchmarks)."""
    global _BACKEND_NAME, _IMPL
    _IMPL = get_impl(name)
    _BACKEND_NAME = name


def available_backends() -> tuple[str, ...]:
    return ("compiled", "python") if _compiled is not None else ("python",)


def get_impl(name: str):
    """Fetch a specific implementation by name (used by tests and benchmarks)."""
    if name == "python":
        return _weighted_sum_python
    if name == "compiled":
        if _compiled is None:
            raise ImportError("compiled backend is not built")
        return _compiled.weighted_gauss_sum
    raise ValueError(f"unknown backend {name!r}")


def weighted_gauss_sum(u, b, v, g) -> float:
    """sum_ij b[i] g[j] exp(-||u[i]-v[j]||^2) over pre-scaled points."""
    u = np.ascontiguousarray(u, dtype=np.float64)
    v = np.ascontiguousarray(v, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    g = np.ascontiguousarray(g, dtype=np.float64)
    return float(_IMPL(u, b, v, g))
