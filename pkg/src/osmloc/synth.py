"""Procedural grid city and a descriptor-level scan simulator.

The fixture stands in for real data: rectangular blocks on a street grid,
with optional per-building jitter so places stay distinguishable. The
simulator emits descriptors directly (a scan reduced to its nearest-wall
fan) rather than synthesizing point clouds; the point-cloud path has its
own unit coverage.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .descriptor import ANGULAR_BINS
from .geo import EdgeSet
from .osm import OsmData


@dataclass
class SynthWorld:
    """Grid-city fixture: building rings, road centerlines, intersection poses."""

    buildings: list
    roads: list
    poses: list  # (x, y, yaw_deg) at street intersections
    _edges: Optional[EdgeSet] = field(default=None, repr=False, compare=False)

    def edge_set(self) -> EdgeSet:
        if self._edges is None:
            self._edges = EdgeSet.from_rings(self.buildings)
        return self._edges

    def as_osm_data(self, zone: int = 0) -> OsmData:
        return OsmData(buildings=self.buildings, roads=self.roads, zone=zone)


def generate_synth_world(seed: int = 0, blocks: int = 6, block_size: float = 20.0,
                         street_width: float = 10.0, perturb: float = 0.0) -> SynthWorld:
    """Deterministic grid city of `blocks` x `blocks` rectangular buildings.

    Street centerlines run along every block boundary (blocks+1 lines per
    axis). `perturb` insets each building side by an independent uniform
    draw of up to `perturb * block_size / 2`, which breaks the grid's
    symmetry; 0 keeps the city perfectly periodic.
    """
    if blocks < 2:
        raise ValueError(f"need at least 2x2 blocks, got {blocks}")
    if street_width <= 0.0 or block_size <= 0.0:
        raise ValueError(
            f"degenerate geometry: block_size={block_size}, street_width={street_width}"
        )
    if not 0.0 <= perturb <= 0.9:
        raise ValueError(f"perturb must be in [0, 0.9], got {perturb}")

    rng = np.random.default_rng(seed)
    cell = block_size + street_width
    span = blocks * cell

    roads = []
    for i in range(blocks + 1):
        y = i * cell
        roads.append(np.array([[0.0, y], [span, y]]))
    for i in range(blocks + 1):
        x = i * cell
        roads.append(np.array([[x, 0.0], [x, span]]))

    buildings = []
    half = street_width / 2.0
    for gy in range(blocks):
        for gx in range(blocks):
            inset = rng.uniform(0.0, 1.0, size=4) * perturb * block_size / 2.0
            x0 = gx * cell + half + inset[0]
            y0 = gy * cell + half + inset[1]
            x1 = gx * cell + half + block_size - inset[2]
            y1 = gy * cell + half + block_size - inset[3]
            buildings.append(np.array([
                [x0, y0], [x1, y0], [x1, y1], [x0, y1], [x0, y0],
            ]))

    poses = []
    for iy in range(blocks + 1):
        for ix in range(blocks + 1):
            yaw = float(rng.uniform(0.0, 360.0))
            poses.append((float(ix * cell), float(iy * cell), yaw))

    return SynthWorld(buildings=buildings, roads=roads, poses=poses)


def simulate_scan(world: SynthWorld, pose, max_range: float = 50.0) -> np.ndarray:
    """Descriptor a sensor at `pose` = (x, y, yaw_deg) would produce.

    Casts one ray per descriptor bin in the sensor frame (bin i points
    yaw + i - 1 degrees in the world), so an integer yaw at a map point
    reproduces that point's map descriptor exactly, cyclically shifted.
    """
    x, y, yaw = pose
    return world.edge_set().cast_fan(
        float(x), float(y), max_range, n_bins=ANGULAR_BINS, offset_deg=float(yaw) % 360.0
    )


def add_scan_noise(desc: np.ndarray, rng: np.random.Generator, magnitude: float = 0.5,
                   dropout: float = 0.1, max_range: float = 50.0) -> np.ndarray:
    """Range jitter plus dropout on the nonzero rays of a descriptor.

    Each hit ray gets uniform +/-`magnitude` meters (clipped to the valid
    range) and is zeroed with probability `dropout`, imitating occlusion
    and segmentation misses.
    """
    noisy = np.asarray(desc, dtype=float).copy()
    hit = noisy > 0.0
    noisy[hit] += rng.uniform(-magnitude, magnitude, int(hit.sum()))
    np.clip(noisy, 0.0, max_range, out=noisy)
    drop = hit & (rng.uniform(0.0, 1.0, noisy.shape) < dropout)
    noisy[drop] = 0.0
    return noisy
