"""OpenStreetMap ingestion and reference-map construction.

Takes an OSM XML extract (API v0.6 schema), pulls building rings and road
polylines into one projected plane, and turns every interpolated road
point into a descriptor + key pair: the reference map that replaces a
prior LiDAR map.
"""

import math
import xml.etree.ElementTree as ET
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .descriptor import ANGULAR_BINS, context_rows, descriptor_key
from .geo import EdgeSet, GeoPoint, PlanarPoint, interpolate_polyline, utm_zone_for, wgs84_to_planar

_MAP_MAGIC = "osmloc-map"
_MAP_VERSION = "v1"


class MapFormatError(ValueError):
    """Raised when a reference-map file does not match the expected format."""


@dataclass
class OsmData:
    """Projected extract content: building rings, road polylines, zone.

    Rings are (V, 2) arrays with the first vertex repeated last; roads are
    (V, 2) arrays with at least two vertices. `skipped_ways` counts ways
    dropped for unresolved node references or degenerate geometry.
    """

    buildings: list
    roads: list
    zone: int
    skipped_ways: int = 0
    _edges: Optional[EdgeSet] = field(default=None, repr=False, compare=False)

    def edge_set(self) -> EdgeSet:
        if self._edges is None:
            self._edges = EdgeSet.from_rings(self.buildings)
        return self._edges


@dataclass(frozen=True)
class ReferenceMapParams:
    max_range: float
    bin_height: float
    interval: float
    zone: int
    angular_bins: int = ANGULAR_BINS


@dataclass
class ReferenceMap:
    """Positioned descriptors and their keys over the interpolated roads."""

    positions: np.ndarray    # (N, 2) map-frame meters
    descriptors: np.ndarray  # (N, 360)
    keys: np.ndarray         # (N, rows) int64
    params: ReferenceMapParams

    def __len__(self) -> int:
        return len(self.positions)


def _byte_offset(data: bytes, line: int, column: int) -> int:
    lines = data.split(b"\n")
    return sum(len(l) + 1 for l in lines[: line - 1]) + column


def _ring_from_refs(refs: list, coords: dict) -> Optional[np.ndarray]:
    """Resolve node refs to a clean closed ring, or None if degenerate."""
    pts = [coords[r] for r in refs]
    cleaned = [pts[0]]
    for p in pts[1:]:
        if p != cleaned[-1]:
            cleaned.append(p)
    if cleaned[0] != cleaned[-1]:
        cleaned.append(cleaned[0])
    if len(cleaned) < 4:
        return None
    return np.asarray(cleaned, dtype=float)


def _assemble_rings(pieces: list) -> tuple[list, int]:
    """Stitch member ways (node-ref lists) into closed rings by endpoint id.

    Multipolygon rings are frequently split across several ways; this walks
    chains tail-forward, reversing pieces as needed, until they close.
    Returns (rings as ref lists, count of unstitchable leftovers).
    """
    rings = []
    leftovers = 0
    open_chains = []
    for refs in pieces:
        if len(refs) >= 2 and refs[0] == refs[-1]:
            if len(refs) >= 4:
                rings.append(refs)
            else:
                leftovers += 1
        elif len(refs) >= 2:
            open_chains.append(list(refs))
        else:
            leftovers += 1
    while open_chains:
        chain = open_chains.pop(0)
        extended = True
        while extended and chain[0] != chain[-1]:
            extended = False
            for i, piece in enumerate(open_chains):
                if piece[0] == chain[-1]:
                    chain.extend(piece[1:])
                elif piece[-1] == chain[-1]:
                    chain.extend(reversed(piece[:-1]))
                else:
                    continue
                open_chains.pop(i)
                extended = True
                break
        if chain[0] == chain[-1] and len(chain) >= 4:
            rings.append(chain)
        else:
            leftovers += 1
    return rings, leftovers


def parse_osm(xml_bytes: bytes, require_layers: bool = False) -> OsmData:
    """Parse an OSM XML extract into projected building and road layers.

    Buildings are closed ways with a `building` tag plus every ring (outer
    and inner) of `type=multipolygon` relations tagged `building`; roads
    are ways with a `highway` tag. All node coordinates are projected into
    one UTM zone chosen from the extract's bounds (mean longitude), falling
    back to the mean node longitude. Ways with unresolved node references
    are skipped and counted.

    With `require_layers`, an extract missing either layer raises the
    "empty layer" error instead of returning a partial result.
    """
    try:
        root = ET.fromstring(xml_bytes)
    except ET.ParseError as exc:
        line, column = exc.position
        offset = _byte_offset(xml_bytes, line, column)
        raise ValueError(
            f"malformed OSM XML at byte {offset} (line {line}, column {column}): {exc}"
        ) from exc

    skipped = 0
    raw_nodes: dict[str, tuple[float, float]] = {}
    for node in root.iter("node"):
        try:
            raw_nodes[node.attrib["id"]] = (float(node.attrib["lat"]), float(node.attrib["lon"]))
        except (KeyError, ValueError):
            skipped += 1
    if not raw_nodes:
        raise ValueError("OSM extract contains no nodes")

    bounds = root.find("bounds")
    if bounds is not None and "minlon" in bounds.attrib and "maxlon" in bounds.attrib:
        mean_lon = (float(bounds.attrib["minlon"]) + float(bounds.attrib["maxlon"])) / 2.0
    else:
        mean_lon = float(np.mean([lon for _, lon in raw_nodes.values()]))
    zone = utm_zone_for(mean_lon)

    coords: dict[str, PlanarPoint] = {}
    for node_id, (lat, lon) in raw_nodes.items():
        try:
            coords[node_id], _ = wgs84_to_planar(GeoPoint(lat, lon), zone)
        except ValueError:
            skipped += 1

    ways: dict[str, tuple[list, dict]] = {}
    for way in root.iter("way"):
        way_id = way.attrib.get("id", f"anon{len(ways)}")
        refs = [nd.attrib["ref"] for nd in way.iter("nd") if "ref" in nd.attrib]
        tags = {t.attrib.get("k"): t.attrib.get("v") for t in way.iter("tag")}
        ways[way_id] = (refs, tags)

    def resolved(refs: list) -> bool:
        return len(refs) > 0 and all(r in coords for r in refs)

    buildings: list[np.ndarray] = []
    roads: list[np.ndarray] = []

    for refs, tags in ways.values():
        if "building" in tags:
            if not resolved(refs) or refs[0] != refs[-1]:
                skipped += 1
            else:
                ring = _ring_from_refs(refs, coords)
                if ring is None:
                    skipped += 1
                else:
                    buildings.append(ring)
        if "highway" in tags:
            if not resolved(refs):
                skipped += 1
                continue
            pts = [coords[r] for r in refs]
            line = [pts[0]]
            for p in pts[1:]:
                if p != line[-1]:
                    line.append(p)
            if len(line) >= 2:
                roads.append(np.asarray(line, dtype=float))
            else:
                skipped += 1

    for rel in root.iter("relation"):
        tags = {t.attrib.get("k"): t.attrib.get("v") for t in rel.iter("tag")}
        if tags.get("type") != "multipolygon" or "building" not in tags:
            continue
        pieces = []
        for member in rel.iter("member"):
            if member.attrib.get("type") != "way":
                continue
            if member.attrib.get("role", "") not in ("outer", "inner", ""):
                continue
            ref = member.attrib.get("ref")
            if ref not in ways or not resolved(ways[ref][0]):
                skipped += 1
                continue
            pieces.append(ways[ref][0])
        ring_refs, leftover = _assemble_rings(pieces)
        skipped += leftover
        for refs in ring_refs:
            ring = _ring_from_refs(refs, coords)
            if ring is None:
                skipped += 1
            else:
                buildings.append(ring)

    if require_layers:
        if not buildings:
            raise ValueError("empty layer: buildings")
        if not roads:
            raise ValueError("empty layer: roads")
    return OsmData(buildings=buildings, roads=roads, zone=zone, skipped_ways=skipped)


def osm_descriptor(position, data: OsmData, max_range: float = 50.0) -> np.ndarray:
    """Descriptor at a map position: nearest building wall per integer degree.

    Bin i covers the ray at (i - 1) degrees counter-clockwise from map
    east. Rays with no wall inside `max_range` report 0; an extract with
    no buildings yields the all-zero descriptor.
    """
    if max_range <= 0.0:
        raise ValueError(f"max_range must be positive, got {max_range}")
    x, y = float(position[0]), float(position[1])
    return data.edge_set().cast_fan(x, y, max_range, n_bins=ANGULAR_BINS)


def _dedupe_positions(points: list, radius: float) -> np.ndarray:
    """Drop points closer than `radius` to an already-kept point."""
    kept: list[tuple[float, float]] = []
    cells: dict[tuple[int, int], list[int]] = {}
    r2 = radius * radius
    for x, y in points:
        ix = int(math.floor(x / radius))
        iy = int(math.floor(y / radius))
        clash = False
        for cx in (ix - 1, ix, ix + 1):
            for cy in (iy - 1, iy, iy + 1):
                for j in cells.get((cx, cy), ()):
                    kx, ky = kept[j]
                    if (x - kx) ** 2 + (y - ky) ** 2 < r2:
                        clash = True
                        break
                if clash:
                    break
            if clash:
                break
        if not clash:
            cells.setdefault((ix, iy), []).append(len(kept))
            kept.append((x, y))
    return np.asarray(kept, dtype=float).reshape(-1, 2)


def build_reference_map(data: OsmData, interval: float = 1.0, max_range: float = 50.0,
                        bin_height: float = 5.0, threads: int = 1) -> ReferenceMap:
    """Interpolate the road network and describe every surviving point.

    Roads are resampled at `interval` meters; points closer than half the
    interval to an earlier point (across all roads) are dropped. Each kept
    position gets a descriptor and its rotation-invariant key.
    """
    context_rows(max_range, bin_height)
    if interval <= 0.0:
        raise ValueError(f"interval must be positive, got {interval}")
    if not data.roads:
        raise ValueError("empty layer: roads")
    if not data.buildings:
        raise ValueError("empty layer: buildings")

    raw_points: list[tuple[float, float]] = []
    for road in data.roads:
        raw_points.extend(interpolate_polyline(road, interval))
    positions = _dedupe_positions(raw_points, interval / 2.0)

    edges = data.edge_set()

    def describe(row) -> np.ndarray:
        return edges.cast_fan(float(row[0]), float(row[1]), max_range, n_bins=ANGULAR_BINS)

    if threads > 1 and len(positions) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            descriptors = np.asarray(list(pool.map(describe, positions)))
    else:
        descriptors = np.asarray([describe(row) for row in positions])
    descriptors = descriptors.reshape(len(positions), ANGULAR_BINS)

    keys = np.asarray(
        [descriptor_key(d, bin_height, max_range) for d in descriptors], dtype=np.int64
    ).reshape(len(positions), context_rows(max_range, bin_height))
    params = ReferenceMapParams(
        max_range=float(max_range), bin_height=float(bin_height),
        interval=float(interval), zone=int(data.zone),
    )
    return ReferenceMap(positions=positions, descriptors=descriptors, keys=keys, params=params)


def save_reference_map(ref_map: ReferenceMap, path) -> None:
    """Write the versioned text format: header line, then `x y d1 .. d360`.

    Floats are written with shortest round-trip precision so that
    write -> load -> write is byte-identical. Keys are not stored; they
    are recomputed on load.
    """
    p = ref_map.params
    with open(path, "w", newline="\n") as fh:
        fh.write(
            f"{_MAP_MAGIC} {_MAP_VERSION} R={float(p.max_range)!r} lb={float(p.bin_height)!r} "
            f"bins={p.angular_bins} interval={float(p.interval)!r} zone={p.zone} "
            f"count={len(ref_map)}\n"
        )
        for pos, desc in zip(ref_map.positions, ref_map.descriptors):
            fields = [repr(float(pos[0])), repr(float(pos[1]))]
            fields.extend(repr(float(v)) for v in desc)
            fh.write(" ".join(fields))
            fh.write("\n")


def _header_value(token: str, key: str, lineno: int = 1) -> str:
    prefix = key + "="
    if not token.startswith(prefix):
        raise MapFormatError(f"line {lineno}: expected `{key}=...`, got {token!r}")
    return token[len(prefix):]


def load_reference_map(path) -> ReferenceMap:
    """Read a reference-map file and recompute the keys."""
    with open(path, "r") as fh:
        header = fh.readline().rstrip("\n")
        tokens = header.split(" ")
        if len(tokens) != 8 or tokens[0] != _MAP_MAGIC or tokens[1] != _MAP_VERSION:
            raise MapFormatError(
                f"not a {_MAP_MAGIC} {_MAP_VERSION} file (header: {header[:60]!r})"
            )
        try:
            max_range = float(_header_value(tokens[2], "R"))
            bin_height = float(_header_value(tokens[3], "lb"))
            bins = int(_header_value(tokens[4], "bins"))
            interval = float(_header_value(tokens[5], "interval"))
            zone = int(_header_value(tokens[6], "zone"))
            count = int(_header_value(tokens[7], "count"))
        except ValueError as exc:
            raise MapFormatError(f"bad header field: {exc}") from exc
        if bins != ANGULAR_BINS:
            raise MapFormatError(f"unsupported angular bin count {bins}")
        rows = context_rows(max_range, bin_height)

        positions = np.empty((count, 2))
        descriptors = np.empty((count, ANGULAR_BINS))
        for i in range(count):
            line = fh.readline()
            if not line:
                raise MapFormatError(f"truncated file: expected {count} records, got {i}")
            fields = line.split()
            if len(fields) != 2 + ANGULAR_BINS:
                raise MapFormatError(
                    f"line {i + 2}: expected {2 + ANGULAR_BINS} fields, got {len(fields)}"
                )
            try:
                values = [float(f) for f in fields]
            except ValueError as exc:
                raise MapFormatError(f"line {i + 2}: {exc}") from exc
            positions[i] = values[:2]
            descriptors[i] = values[2:]

    keys = np.asarray(
        [descriptor_key(d, bin_height, max_range) for d in descriptors], dtype=np.int64
    ).reshape(count, rows)
    params = ReferenceMapParams(
        max_range=max_range, bin_height=bin_height, interval=interval, zone=zone,
    )
    return ReferenceMap(positions=positions, descriptors=descriptors, keys=keys, params=params)
