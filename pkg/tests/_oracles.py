"""Independent reference implementations used only to check the library.

Everything here is deliberately written a different way than the package:
parametric intersection instead of the triangle-area identity, a
conformal-latitude projection series instead of the classic one, explicit
Python sweeps instead of vectorized distance matrices.
"""

import math

import numpy as np


def ray_segment_distance(origin, theta_deg, p1, p2):
    """Parametric ray/segment intersection: solve o + t*u = p1 + s*(p2-p1)."""
    ox, oy = origin
    ux = math.cos(math.radians(theta_deg))
    uy = math.sin(math.radians(theta_deg))
    dx = p2[0] - p1[0]
    dy = p2[1] - p1[1]
    denom = ux * dy - uy * dx
    if abs(denom) < 1e-15:
        return None
    wx = p1[0] - ox
    wy = p1[1] - oy
    t = (wx * dy - wy * dx) / denom
    s = (wx * uy - wy * ux) / denom
    if t < 0.0 or s < 0.0 or s > 1.0:
        return None
    return t


def utm_conformal(lat_deg, lon_deg, zone):
    """Transverse Mercator via conformal latitude and the n-series.

    Different series family than the package's implementation; good to
    well under a millimeter inside a zone.
    """
    a = 6378137.0
    f = 1.0 / 298.257223563
    n = f / (2.0 - f)
    n2, n3, n4 = n * n, n ** 3, n ** 4
    big_a = a / (1.0 + n) * (1.0 + n2 / 4.0 + n4 / 64.0)
    alpha = (
        n / 2.0 - 2.0 * n2 / 3.0 + 5.0 * n3 / 16.0 + 41.0 * n4 / 180.0,
        13.0 * n2 / 48.0 - 3.0 * n3 / 5.0 + 557.0 * n4 / 1440.0,
        61.0 * n3 / 240.0 - 103.0 * n4 / 140.0,
        49561.0 * n4 / 161280.0,
    )
    lat = math.radians(lat_deg)
    lon0 = math.radians((zone - 1) * 6 - 180 + 3)
    lam = math.radians(lon_deg) - lon0
    s = 2.0 * math.sqrt(n) / (1.0 + n)
    t = math.sinh(math.atanh(math.sin(lat)) - s * math.atanh(s * math.sin(lat)))
    xi_p = math.atan2(t, math.cos(lam))
    eta_p = math.asinh(math.sin(lam) / math.hypot(t, math.cos(lam)))
    xi = xi_p
    eta = eta_p
    for j, aj in enumerate(alpha, start=1):
        xi += aj * math.sin(2 * j * xi_p) * math.cosh(2 * j * eta_p)
        eta += aj * math.cos(2 * j * xi_p) * math.sinh(2 * j * eta_p)
    k0 = 0.9996
    return 500000.0 + k0 * big_a * eta, k0 * big_a * xi


def brute_min_rotated(query, candidate):
    """Explicit sweep over all 360 left-rotations of the query."""
    q = np.asarray(query, dtype=float)
    c = np.asarray(candidate, dtype=float)
    best = (math.inf, -1)
    for shift in range(360):
        d = float(np.abs(np.roll(q, -shift) - c).sum())
        if d < best[0]:
            best = (d, shift)
    return best


def brute_key(desc, bin_height, max_range):
    """Count descriptor entries per distance band by direct iteration."""
    rows = int(round(max_range / bin_height))
    counts = [0] * rows
    for v in desc:
        if v > 0.0:
            counts[math.ceil(v / bin_height) - 1] += 1
    return counts


def brute_dedup_count(points, radius):
    """Sequential O(n^2) duplicate suppression, same rule as the builder."""
    kept = []
    for x, y in points:
        if all((x - kx) ** 2 + (y - ky) ** 2 >= radius * radius for kx, ky in kept):
            kept.append((x, y))
    return len(kept)
