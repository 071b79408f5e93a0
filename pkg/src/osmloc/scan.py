"""Scan ingestion: KITTI velodyne binaries, per-point labels, descriptors.

Per-point semantic labels come from files, never from a network; class 50
is "building" in the SemanticKITTI label map.
"""

import numpy as np

from .descriptor import ANGULAR_BINS
from .geo import PlanarPoint, min_per_bin

BUILDING_CLASS_ID = 50

_POINT_RECORD = 16  # float32 x, y, z, intensity
_LABEL_RECORD = 4   # uint32, low 16 bits = semantic class


def read_velodyne_bin(data: bytes) -> np.ndarray:
    """Decode a KITTI velodyne payload into an (N, 3) float32 array.

    Records are little-endian float32 quadruples (x, y, z, intensity);
    intensity is dropped.
    """
    if len(data) % _POINT_RECORD != 0:
        raise ValueError(
            f"velodyne payload is {len(data)} bytes, not a multiple of {_POINT_RECORD}"
        )
    raw = np.frombuffer(data, dtype="<f4").reshape(-1, 4)
    return np.ascontiguousarray(raw[:, :3])


def read_labels(data: bytes) -> np.ndarray:
    """Decode a label payload into an (N,) uint32 array."""
    if len(data) % _LABEL_RECORD != 0:
        raise ValueError(
            f"label payload is {len(data)} bytes, not a multiple of {_LABEL_RECORD}"
        )
    return np.frombuffer(data, dtype="<u4").copy()


def filter_building_points(points: np.ndarray, labels: np.ndarray,
                           class_id: int = BUILDING_CLASS_ID) -> np.ndarray:
    """Keep the points whose semantic class matches, preserving order.

    Only the low 16 bits of each label word carry the class; the high bits
    hold an instance id and are masked off.
    """
    pts = np.asarray(points)
    lab = np.asarray(labels)
    if len(pts) != len(lab):
        raise ValueError(f"point/label count mismatch: {len(pts)} points vs {len(lab)} labels")
    return pts[(lab.astype(np.uint32) & np.uint32(0xFFFF)) == class_id]


def lidar_descriptor(points: np.ndarray, max_range: float = 50.0) -> np.ndarray:
    """Nearest planar range per integer-degree bearing sector.

    Points project to the sensor x-y plane (z is irrelevant: walls are
    vertical, so any height lands on the wall's footprint). Bearing bins
    are half-open 1-degree sectors, bin = floor(bearing). Sectors with no
    point inside `max_range` report 0.
    """
    if max_range <= 0.0:
        raise ValueError(f"max_range must be positive, got {max_range}")
    pts = np.asarray(points, dtype=float)
    if pts.size == 0:
        return np.zeros(ANGULAR_BINS)
    pts = pts.reshape(len(pts), -1)
    r = np.hypot(pts[:, 0], pts[:, 1])
    keep = (r > 0.0) & (r <= max_range)
    if not np.any(keep):
        return np.zeros(ANGULAR_BINS)
    r = r[keep]
    bearing = np.degrees(np.arctan2(pts[keep, 1], pts[keep, 0])) % 360.0
    bins = np.floor(bearing).astype(np.int64) % ANGULAR_BINS
    nearest = min_per_bin(bins, r, ANGULAR_BINS)
    return np.where(np.isfinite(nearest), nearest, 0.0)


def read_ground_truth(text: str) -> dict[int, PlanarPoint]:
    """Parse ground-truth lines of the form `frame_index x y` (map frame)."""
    out: dict[int, PlanarPoint] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        fields = stripped.split()
        if len(fields) != 3:
            raise ValueError(f"ground-truth line {lineno}: expected `frame x y`, got {line!r}")
        try:
            frame = int(fields[0])
            x, y = float(fields[1]), float(fields[2])
        except ValueError as exc:
            raise ValueError(f"ground-truth line {lineno}: {exc}") from exc
        out[frame] = PlanarPoint(x, y)
    return out
