"""Planar geometry shared by both descriptor generators.

Everything downstream lives in a single metric map frame: x east, y north,
meters. Bearings are degrees counter-clockwise from +x, the same convention
the descriptor bins use, so a fan of rays cast here maps one-to-one onto
descriptor columns.
"""

import math
from typing import NamedTuple, Optional, Sequence

import numpy as np


class GeoPoint(NamedTuple):
    """WGS84 geodetic coordinate, degrees."""

    lat: float
    lon: float


class PlanarPoint(NamedTuple):
    """Map-frame position, meters east / north."""

    x: float
    y: float


class Edge(NamedTuple):
    """Wall segment between two planar vertices."""

    p1: PlanarPoint
    p2: PlanarPoint


# WGS84 ellipsoid and the classic transverse-mercator series coefficients.
_A = 6378137.0
_F = 1.0 / 298.257223563
_E2 = _F * (2.0 - _F)
_E4 = _E2 * _E2
_E6 = _E4 * _E2
_EP2 = _E2 / (1.0 - _E2)
_M1 = 1.0 - _E2 / 4.0 - 3.0 * _E4 / 64.0 - 5.0 * _E6 / 256.0
_M2 = 3.0 * _E2 / 8.0 + 3.0 * _E4 / 32.0 + 45.0 * _E6 / 1024.0
_M3 = 15.0 * _E4 / 256.0 + 45.0 * _E6 / 1024.0
_M4 = 35.0 * _E6 / 3072.0
_SCALE = 0.9996
_FALSE_EASTING = 500000.0

# Grazing rays (origin on the wall's supporting line) make the projected
# denominator collapse; anything below this is reported as no-hit.
_DEGENERATE_DENOM = 1e-12


def utm_zone_for(lon: float) -> int:
    """Standard 6-degree UTM zone number containing a longitude."""
    return min(60, int((lon + 180.0) // 6.0) + 1)


def wgs84_to_planar(point: GeoPoint, zone: Optional[int] = None) -> tuple[PlanarPoint, int]:
    """Project a WGS84 coordinate to UTM easting/northing.

    Uses the 6-term transverse-mercator series (sub-centimeter inside a
    zone) with scale 0.9996 and 500 km false easting. False northing is
    always 0, so southern-hemisphere points come out negative; one dataset
    must stick to one zone even for points that spill slightly outside it.

    Returns the planar point and the zone actually used.
    """
    lat, lon = float(point[0]), float(point[1])
    if not (-90.0 <= lat <= 90.0) or not (-180.0 <= lon <= 180.0):
        raise ValueError(f"invalid WGS84 coordinate ({lat}, {lon})")
    if abs(lat) > 84.0:
        raise ValueError(f"latitude {lat} is outside the +/-84 degree band where UTM is defined")
    if zone is None:
        zone = utm_zone_for(lon)
    if not 1 <= zone <= 60:
        raise ValueError(f"UTM zone {zone} out of range 1..60")

    lat_r = math.radians(lat)
    sin_lat = math.sin(lat_r)
    cos_lat = math.cos(lat_r)
    tan_lat = sin_lat / cos_lat

    central_lon = math.radians((zone - 1) * 6 - 180 + 3)
    nu = _A / math.sqrt(1.0 - _E2 * sin_lat * sin_lat)
    t2 = tan_lat * tan_lat
    t4 = t2 * t2
    c = _EP2 * cos_lat * cos_lat

    arc = cos_lat * (math.radians(lon) - central_lon)
    arc2 = arc * arc
    arc3 = arc2 * arc
    arc4 = arc3 * arc
    arc5 = arc4 * arc
    arc6 = arc5 * arc

    meridian = _A * (
        _M1 * lat_r
        - _M2 * math.sin(2.0 * lat_r)
        + _M3 * math.sin(4.0 * lat_r)
        - _M4 * math.sin(6.0 * lat_r)
    )

    easting = _SCALE * nu * (
        arc
        + arc3 / 6.0 * (1.0 - t2 + c)
        + arc5 / 120.0 * (5.0 - 18.0 * t2 + t4 + 72.0 * c - 58.0 * _EP2)
    ) + _FALSE_EASTING
    northing = _SCALE * (
        meridian
        + nu * tan_lat * (
            arc2 / 2.0
            + arc4 / 24.0 * (5.0 - t2 + 9.0 * c + 4.0 * c * c)
            + arc6 / 720.0 * (61.0 - 58.0 * t2 + t4 + 600.0 * c - 330.0 * _EP2)
        )
    )
    return PlanarPoint(easting, northing), zone


def interpolate_polyline(points: Sequence, interval: float) -> list[PlanarPoint]:
    """Resample a polyline at fixed arc-length steps from its first vertex.

    Both endpoints are always kept; the last gap may be shorter than
    `interval`. A single input point is returned as-is.
    """
    if len(points) == 0:
        raise ValueError("cannot interpolate an empty polyline")
    if interval <= 0.0:
        raise ValueError(f"interpolation interval must be positive, got {interval}")
    pts = np.asarray(points, dtype=float).reshape(len(points), 2)

    # Collapse zero-length segments so arc-length lookup stays monotonic.
    if len(pts) > 1:
        keep = np.r_[True, np.any(pts[1:] != pts[:-1], axis=1)]
        pts = pts[keep]
    if len(pts) == 1:
        return [PlanarPoint(float(pts[0, 0]), float(pts[0, 1]))]

    seg = np.diff(pts, axis=0)
    seg_len = np.hypot(seg[:, 0], seg[:, 1])
    cum = np.concatenate([[0.0], np.cumsum(seg_len)])
    total = cum[-1]

    stations = np.arange(0.0, total, interval)
    j = np.clip(np.searchsorted(cum, stations, side="right") - 1, 0, len(seg_len) - 1)
    t = (stations - cum[j]) / seg_len[j]
    sampled = pts[j] + t[:, None] * seg[j]

    out = [PlanarPoint(float(p[0]), float(p[1])) for p in sampled]
    out.append(PlanarPoint(float(pts[-1, 0]), float(pts[-1, 1])))
    return out


def ray_hit_distance(origin, theta_deg: float, edge) -> Optional[float]:
    """Distance from `origin` along bearing `theta_deg` to a wall segment.

    The ray hits the segment exactly when its direction lies inside the
    angular sector spanned by the two endpoint bearings (endpoints
    included). Membership is decided with signed cross products, which is
    robust where raw bearing comparison breaks at the 0/360 wrap. The
    distance itself comes from the triangle-area identity

        d = a * b * sin(ta + tb) / (a * sin(ta) + b * sin(tb))

    with a, b the endpoint ranges and ta, tb the angles between the ray
    and each endpoint direction. Returns None when the ray misses, and
    also for grazing/degenerate geometry (origin on the segment's
    supporting line, or sitting on an endpoint).
    """
    (p1x, p1y), (p2x, p2y) = edge
    ox, oy = origin
    v1x = p1x - ox
    v1y = p1y - oy
    v2x = p2x - ox
    v2y = p2y - oy

    theta = math.radians(theta_deg % 360.0)
    ux = math.cos(theta)
    uy = math.sin(theta)

    cross_12 = v1x * v2y - v1y * v2x
    cross_1u = v1x * uy - v1y * ux
    cross_u2 = ux * v2y - uy * v2x

    if cross_12 > 0.0:
        inside = cross_1u >= 0.0 and cross_u2 >= 0.0
    elif cross_12 < 0.0:
        inside = cross_1u <= 0.0 and cross_u2 <= 0.0
    else:
        return None  # endpoints collinear with origin
    if not inside:
        return None

    a = math.hypot(v1x, v1y)
    b = math.hypot(v2x, v2y)
    if a == 0.0 or b == 0.0:
        return None  # origin exactly on a vertex

    sin_ta = abs(cross_1u) / a
    sin_tb = abs(cross_u2) / b
    sin_tab = abs(cross_12) / (a * b)
    denom = a * sin_ta + b * sin_tb
    if denom <= _DEGENERATE_DENOM:
        return None
    return a * b * sin_tab / denom


def min_per_bin(bins: np.ndarray, values: np.ndarray, n_bins: int) -> np.ndarray:
    """Per-bin minimum of `values`; bins without samples get +inf."""
    out = np.full(n_bins, np.inf)
    if bins.size == 0:
        return out
    order = np.argsort(bins, kind="stable")
    sb = bins[order]
    sv = values[order]
    starts = np.flatnonzero(np.r_[True, sb[1:] != sb[:-1]])
    out[sb[starts]] = np.minimum.reduceat(sv, starts)
    return out


class EdgeSet:
    """Immutable batch of wall segments with a coarse grid index.

    The grid buckets segments by the cells their bounding boxes overlap,
    so range queries only touch nearby geometry. Built once per map;
    all queries are read-only and thread-safe.
    """

    def __init__(self, segments: np.ndarray, cell: float = 50.0):
        seg = np.asarray(segments, dtype=float).reshape(-1, 4)
        nonzero = (seg[:, 0] != seg[:, 2]) | (seg[:, 1] != seg[:, 3])
        self._segments = seg[nonzero]
        self._cell = float(cell)
        self._grid: dict[tuple[int, int], np.ndarray] = {}
        buckets: dict[tuple[int, int], list[int]] = {}
        c = self._cell
        for i, (x1, y1, x2, y2) in enumerate(self._segments):
            ix0 = int(math.floor(min(x1, x2) / c))
            ix1 = int(math.floor(max(x1, x2) / c))
            iy0 = int(math.floor(min(y1, y2) / c))
            iy1 = int(math.floor(max(y1, y2) / c))
            for ix in range(ix0, ix1 + 1):
                for iy in range(iy0, iy1 + 1):
                    buckets.setdefault((ix, iy), []).append(i)
        for key, idx in buckets.items():
            self._grid[key] = np.asarray(idx, dtype=np.int64)

    @classmethod
    def from_rings(cls, rings: Sequence[np.ndarray], cell: float = 50.0) -> "EdgeSet":
        """Build from closed rings (first vertex repeated last)."""
        chunks = []
        for ring in rings:
            r = np.asarray(ring, dtype=float)
            if len(r) >= 2:
                chunks.append(np.hstack([r[:-1], r[1:]]))
        if not chunks:
            return cls(np.empty((0, 4)))
        return cls(np.vstack(chunks), cell=cell)

    def __len__(self) -> int:
        return len(self._segments)

    @property
    def segments(self) -> np.ndarray:
        return self._segments

    def near(self, x: float, y: float, radius: float) -> np.ndarray:
        """Indices of segments whose bounding cells fall within `radius`."""
        c = self._cell
        ix0 = int(math.floor((x - radius) / c))
        ix1 = int(math.floor((x + radius) / c))
        iy0 = int(math.floor((y - radius) / c))
        iy1 = int(math.floor((y + radius) / c))
        found = [
            self._grid[(ix, iy)]
            for ix in range(ix0, ix1 + 1)
            for iy in range(iy0, iy1 + 1)
            if (ix, iy) in self._grid
        ]
        if not found:
            return np.empty(0, dtype=np.int64)
        return np.unique(np.concatenate(found))

    def cast_fan(self, x: float, y: float, max_range: float,
                 n_bins: int = 360, offset_deg: float = 0.0) -> np.ndarray:
        """Cast `n_bins` rays from (x, y) and return the nearest wall per ray.

        Ray j points along world bearing (j * 360/n_bins + offset_deg)
        degrees. Rays that hit nothing, or whose nearest hit lies beyond
        `max_range`, report 0. Vectorized: each candidate segment
        contributes only the rays inside its subtended arc.
        """
        step = 360.0 / n_bins
        out = np.zeros(n_bins)
        idx = self.near(x, y, max_range)
        if idx.size == 0:
            return out
        seg = self._segments[idx]
        v1x = seg[:, 0] - x
        v1y = seg[:, 1] - y
        v2x = seg[:, 2] - x
        v2y = seg[:, 3] - y

        # Exact range cull: segments entirely beyond max_range can only
        # produce hits that would be zeroed anyway.
        ex = v2x - v1x
        ey = v2y - v1y
        t = np.clip(-(v1x * ex + v1y * ey) / (ex * ex + ey * ey), 0.0, 1.0)
        nearest_sq = (v1x + t * ex) ** 2 + (v1y + t * ey) ** 2

        cross_12 = v1x * v2y - v1y * v2x
        keep = (nearest_sq <= max_range * max_range) & (cross_12 != 0.0)
        if not np.any(keep):
            return out
        v1x, v1y, v2x, v2y, cross_12 = (
            a[keep] for a in (v1x, v1y, v2x, v2y, cross_12)
        )

        b1 = np.degrees(np.arctan2(v1y, v1x)) % 360.0
        b2 = np.degrees(np.arctan2(v2y, v2x)) % 360.0
        b1[b1 >= 360.0] = 0.0
        b2[b2 >= 360.0] = 0.0
        ccw = cross_12 > 0.0
        start = np.where(ccw, b1, b2)
        arc = (np.where(ccw, b2, b1) - start) % 360.0

        # A simple segment always subtends the minor (<180 deg) sector;
        # larger values are wrap artifacts of near-collinear geometry.
        ok = arc <= 180.000001
        if not np.all(ok):
            v1x, v1y, v2x, v2y, cross_12, start, arc = (
                a[ok] for a in (v1x, v1y, v2x, v2y, cross_12, start, arc)
            )
        if start.size == 0:
            return out

        # Enumerate the ray indices falling inside each arc (inclusive).
        base = (start - offset_deg) % 360.0
        k0 = np.ceil(base / step)
        k1 = np.floor((base + arc) / step)
        counts = (k1 - k0 + 1.0).astype(np.int64)
        np.maximum(counts, 0, out=counts)
        total = int(counts.sum())
        if total == 0:
            return out
        eidx = np.repeat(np.arange(counts.size), counts)
        offsets = np.arange(total) - np.repeat(np.cumsum(counts) - counts, counts)
        k = k0[eidx] + offsets

        bins = k.astype(np.int64) % n_bins
        world = np.radians((k * step + offset_deg) % 360.0)
        ux = np.cos(world)
        uy = np.sin(world)
        w1x, w1y, w2x, w2y = v1x[eidx], v1y[eidx], v2x[eidx], v2y[eidx]
        c1 = np.abs(w1x * uy - w1y * ux)
        c2 = np.abs(ux * w2y - uy * w2x)
        denom = c1 + c2
        valid = denom > _DEGENERATE_DENOM
        dist = np.abs(cross_12[eidx][valid]) / denom[valid]

        nearest = min_per_bin(bins[valid], dist, n_bins)
        hit = np.isfinite(nearest) & (nearest <= max_range)
        out[hit] = nearest[hit]
        return out
