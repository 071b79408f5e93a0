"""Two-stage localization against a reference map.

Stage 1 screens the whole map by key distance (10 integers per entry) and
keeps the best `top_k` candidates; stage 2 re-ranks just those candidates
by the minimum L1 over all 360 cyclic rotations of the query descriptor.
The split is what makes single-shot lookup fast: keys are rotation
invariant, so the screening never misses a candidate for heading reasons.
"""

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .descriptor import descriptor_key, rotated_distances
from .geo import PlanarPoint
from .osm import ReferenceMap


class RankedMatch(NamedTuple):
    map_index: int
    position: PlanarPoint
    distance: float
    shift: int


@dataclass
class LocalizationResult:
    """Re-ranked candidates, best first; ties broken by map index."""

    ranked: list[RankedMatch]
    stage1_candidates: np.ndarray


def stage1_candidates(query_key, ref_map: ReferenceMap, top_k: int = 200) -> np.ndarray:
    """Indices of the `top_k` map keys nearest to the query key (L1).

    Ascending by distance, ties by ascending index; returns the whole map
    if it has fewer than `top_k` entries.
    """
    if len(ref_map) == 0:
        raise ValueError("empty reference map")
    if top_k < 1:
        raise ValueError(f"top_k must be >= 1, got {top_k}")
    qk = np.asarray(query_key)
    if qk.shape != (ref_map.keys.shape[1],):
        raise ValueError(
            f"key length mismatch: query {qk.shape} vs map {(ref_map.keys.shape[1],)}"
        )
    dist = np.abs(ref_map.keys - qk.astype(np.int64)).sum(axis=1)
    order = np.argsort(dist, kind="stable")
    return order[: min(top_k, len(order))]


def stage2_rerank(query, ref_map: ReferenceMap, candidates: Sequence[int]) -> LocalizationResult:
    """Re-rank candidate indices by minimum rotated L1 to the query."""
    cand = np.asarray(candidates, dtype=np.int64)
    if cand.size == 0:
        raise ValueError("no candidates to re-rank")
    if cand.min() < 0 or cand.max() >= len(ref_map):
        raise ValueError(f"candidate index out of range 0..{len(ref_map) - 1}")
    dist, shift = rotated_distances(query, ref_map.descriptors[cand])
    order = np.lexsort((cand, dist))
    ranked = [
        RankedMatch(
            map_index=int(cand[i]),
            position=PlanarPoint(float(ref_map.positions[cand[i], 0]),
                                 float(ref_map.positions[cand[i], 1])),
            distance=float(dist[i]),
            shift=int(shift[i]),
        )
        for i in order
    ]
    return LocalizationResult(ranked=ranked, stage1_candidates=cand)


def localize(query, ref_map: ReferenceMap, top_k: int = 200) -> LocalizationResult:
    """Full pipeline: key screening, then rotated re-ranking."""
    key = descriptor_key(query, ref_map.params.bin_height, ref_map.params.max_range)
    cand = stage1_candidates(key, ref_map, top_k)
    return stage2_rerank(query, ref_map, cand)
