"""Descriptor algebra: occupancy contexts, rotation-invariant keys, matching.

A descriptor is a length-360 vector of nearest-wall distances, one value
per integer degree; 0 means "no wall within range". The same form is
produced from map polygons and from labeled scans, so everything here is
shared by both sides.
"""

from typing import Sequence, Union

import numpy as np
from scipy.spatial.distance import cdist

ANGULAR_BINS = 360

Vector = Union[np.ndarray, Sequence[float]]


def context_rows(max_range: float, bin_height: float) -> int:
    """Number of context rows; validates the range/bin configuration."""
    if max_range <= 0.0 or bin_height <= 0.0:
        raise ValueError("max_range and bin_height must be positive")
    rows = round(max_range / bin_height)
    if rows < 1 or abs(rows * bin_height - max_range) > 1e-9:
        raise ValueError(
            f"max range {max_range} must be an integer multiple of bin height {bin_height}"
        )
    return rows


def _as_descriptor(values: Vector) -> np.ndarray:
    d = np.asarray(values, dtype=float)
    if d.shape != (ANGULAR_BINS,):
        raise ValueError(f"descriptor must have {ANGULAR_BINS} entries, got shape {d.shape}")
    return d


def rotate(desc: Vector, shift: int) -> np.ndarray:
    """Rotate a descriptor left by `shift` bins: out[i] = in[(i + shift) % 360]."""
    return np.roll(_as_descriptor(desc), -int(shift))


def to_context(desc: Vector, bin_height: float = 5.0, max_range: float = 50.0) -> np.ndarray:
    """Quantize a descriptor into a (rows x 360) boolean occupancy grid.

    Column i gets a single 1 at row ceil(value / bin_height); zero entries
    (no wall, or beyond range) leave their column empty so "no reading"
    never aliases with "wall right here".
    """
    rows = context_rows(max_range, bin_height)
    d = _as_descriptor(desc)
    if np.any(d < 0.0) or np.any(d > max_range + 1e-9):
        raise ValueError("descriptor values must lie in {0} or (0, max_range]")
    grid = np.zeros((rows, ANGULAR_BINS), dtype=np.uint8)
    nz = np.flatnonzero(d > 0.0)
    if nz.size:
        level = np.minimum(np.ceil(d[nz] / bin_height).astype(np.int64), rows)
        grid[level - 1, nz] = 1
    return grid


def to_key(context: np.ndarray) -> np.ndarray:
    """Collapse a context to its row sums; invariant to descriptor rotation."""
    ctx = np.asarray(context)
    if ctx.ndim != 2 or ctx.shape[1] != ANGULAR_BINS:
        raise ValueError(f"context must be (rows, {ANGULAR_BINS}), got {ctx.shape}")
    return ctx.sum(axis=1, dtype=np.int64)


def descriptor_key(desc: Vector, bin_height: float = 5.0, max_range: float = 50.0) -> np.ndarray:
    """Shortcut: key of the context of a descriptor."""
    return to_key(to_context(desc, bin_height, max_range))


def l1_distance(a: Vector, b: Vector) -> float:
    """Sum of absolute elementwise differences."""
    av = np.asarray(a)
    bv = np.asarray(b)
    if av.shape != bv.shape:
        raise ValueError(f"length mismatch: {av.shape} vs {bv.shape}")
    return float(np.abs(av - bv).sum())


def _rotation_stack(query: np.ndarray) -> np.ndarray:
    doubled = np.concatenate([query, query])
    view = np.lib.stride_tricks.sliding_window_view(doubled, ANGULAR_BINS)
    return np.ascontiguousarray(view[:ANGULAR_BINS])


def rotated_distances(query: Vector, candidates: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Minimum rotated L1 from `query` to each candidate descriptor.

    Evaluates the L1 distance between every cyclic rotation of the query
    and each candidate row, returning per-candidate (distance, shift) with
    the smallest shift winning ties. This is the stage-2 workhorse, so it
    runs as one cityblock distance matrix instead of a Python sweep.
    """
    q = _as_descriptor(query)
    cand = np.asarray(candidates, dtype=float)
    if cand.ndim != 2 or cand.shape[1] != ANGULAR_BINS:
        raise ValueError(f"candidates must be (n, {ANGULAR_BINS}), got {cand.shape}")
    dmat = cdist(cand, _rotation_stack(q), "cityblock")
    return dmat.min(axis=1), dmat.argmin(axis=1)


def min_rotated_distance(query: Vector, candidate: Vector) -> tuple[float, int]:
    """Best rotation match between two descriptors: (distance, shift)."""
    dist, shift = rotated_distances(query, _as_descriptor(candidate)[None, :])
    return float(dist[0]), int(shift[0])
