"""Discrete (empirical) probability measures built from posterior draws."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

_WEIGHT_SUM_TOL = 1e-12


def _as_atoms(atoms) -> np.ndarray:
    arr = np.asarray(atoms, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ValueError("atoms must be a 1-D or 2-D array of points")
    return arr


@dataclass(frozen=True)
class EmpiricalMeasure:
    """Weighted atoms in R^p; weights are nonnegative and sum to one.

    Instances are immutable (arrays are marked read-only) and safe to share.
    Zero-weight atoms are retained so atom indexing stays stable across the
    aggregation pipeline; use :func:`prune_zero_atoms` to drop them explicitly.
    """

    atoms: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        atoms = _as_atoms(self.atoms)
        weights = np.asarray(self.weights, dtype=np.float64)
        if atoms.shape[0] < 1:
            raise ValueError("measure needs at least one atom")
        if atoms.shape[1] < 1:
            raise ValueError("atoms must have dimension >= 1")
        if weights.shape != (atoms.shape[0],):
            raise ValueError("weights length must match atom count")
        if not np.all(np.isfinite(atoms)) or not np.all(np.isfinite(weights)):
            raise ValueError("atoms and weights must be finite")
        if np.any(weights < 0):
            raise ValueError("weights must be nonnegative")
        if abs(float(weights.sum()) - 1.0) > _WEIGHT_SUM_TOL:
            raise ValueError("weights must sum to 1 within 1e-12")
        atoms = atoms.copy()
        weights = weights.copy()
        atoms.flags.writeable = False
        weights.flags.writeable = False
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", weights)

    @property
    def n_atoms(self) -> int:
        return self.atoms.shape[0]

    @property
    def dim(self) -> int:
        return self.atoms.shape[1]

    def mean(self) -> np.ndarray:
        return self.weights @ self.atoms


def make_empirical(atoms, weights=None) -> EmpiricalMeasure:
    """Build a measure from points, normalizing weights (uniform if omitted).

    With ``weights=None`` every atom gets mass 1/N; otherwise the given
    nonnegative weights are rescaled to sum to one.
    """
    arr = _as_atoms(atoms)
    if arr.shape[0] == 0:
        raise ValueError("atoms must be nonempty")
    if weights is None:
        w = np.full(arr.shape[0], 1.0 / arr.shape[0])
    else:
        w = np.asarray(weights, dtype=np.float64)
        if w.shape != (arr.shape[0],):
            raise ValueError("weights length must match atom count")
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        total = float(w.sum())
        if total <= 0:
            raise ValueError("weights must not be all zero")
        w = w / total
    return EmpiricalMeasure(arr, w)


def mixture(measures, mix_weights) -> EmpiricalMeasure:
    """Mix measures: concatenate atoms, scale each block by its mix weight."""
    measures = list(measures)
    if not measures:
        raise ValueError("need at least one measure")
    dim = measures[0].dim
    if any(q.dim != dim for q in measures):
        raise ValueError("all measures must share one dimension")
    mw = np.asarray(mix_weights, dtype=np.float64)
    if mw.shape != (len(measures),):
        raise ValueError("one mix weight per measure required")
    if np.any(mw < 0) or abs(float(mw.sum()) - 1.0) > 1e-9:
        raise ValueError("mix weights must be nonnegative and sum to 1 within 1e-9")
    atoms = np.vstack([q.atoms for q in measures])
    weights = np.concatenate([w * q.weights for w, q in zip(mw, measures)])
    # Renormalize away the accumulated rounding of the weight products.
    weights = weights / weights.sum()
    return EmpiricalMeasure(atoms, weights)


def weighted_quantile(measure: EmpiricalMeasure, q: float) -> float:
    """Left-continuous inverse CDF of a one-dimensional measure.

    Atoms are sorted ascending and the first atom whose cumulative weight
    reaches ``q`` is returned; no interpolation.
    """
    if measure.dim != 1:
        raise ValueError("weighted_quantile requires a one-dimensional measure")
    if not 0.0 <= q <= 1.0:
        raise ValueError("q must lie in [0, 1]")
    values = measure.atoms[:, 0]
    order = np.argsort(values, kind="stable")
    cumulative = np.cumsum(measure.weights[order])
    idx = int(np.searchsorted(cumulative, q, side="left"))
    idx = min(idx, len(values) - 1)
    return float(values[order[idx]])


def prune_zero_atoms(measure: EmpiricalMeasure) -> EmpiricalMeasure:
    """Drop atoms with exactly zero weight (explicit, never implicit)."""
    keep = measure.weights > 0
    return EmpiricalMeasure(measure.atoms[keep], measure.weights[keep])


def write_draws(measure: EmpiricalMeasure, path) -> None:
    """Write a measure to ``path``: CSV (`w,x1..xp` header) or JSON by suffix."""
    path = Path(path)
    if path.suffix == ".json":
        payload = {"atoms": measure.atoms.tolist(), "weights": measure.weights.tolist()}
        path.write_text(json.dumps(payload))
        return
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["w"] + [f"x{k}" for k in range(1, measure.dim + 1)])
        for w, atom in zip(measure.weights, measure.atoms):
            writer.writerow([repr(float(w))] + [repr(float(a)) for a in atom])


def read_draws(path) -> EmpiricalMeasure:
    """Read a measure from a draw file (CSV with `w,x1..xp` header, or JSON)."""
    path = Path(path)
    if path.suffix == ".json":
        payload = json.loads(path.read_text())
        return make_empirical(payload["atoms"], payload.get("weights"))
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty draw file")
    header = [c.strip() for c in rows[0]]
    dim = len(header) - 1
    if header[0] != "w" or dim < 1 or header[1:] != [f"x{k}" for k in range(1, dim + 1)]:
        raise ValueError(f"{path}: expected header 'w,x1..xp', got {header}")
    body = np.array([[float(c) for c in row] for row in rows[1:] if row])
    if body.size == 0:
        raise ValueError(f"{path}: no atoms")
    return make_empirical(body[:, 1:], body[:, 0])
