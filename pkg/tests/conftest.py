import numpy as np
import pytest

from osmloc import build_reference_map, generate_synth_world


def osm_xml(body: str) -> bytes:
    return (
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        '<osm version="0.6" generator="fixture">\n'
        f"{body}\n"
        "</osm>\n"
    ).encode()


def node(nid: int, lat: float, lon: float) -> str:
    return f'  <node id="{nid}" lat="{lat}" lon="{lon}"/>'


def way(wid: int, refs, tags) -> str:
    nds = "\n".join(f'    <nd ref="{r}"/>' for r in refs)
    tgs = "\n".join(f'    <tag k="{k}" v="{v}"/>' for k, v in tags.items())
    return f'  <way id="{wid}">\n{nds}\n{tgs}\n  </way>'


@pytest.fixture(scope="session")
def city_world():
    """Perturbed 6x6 grid city shared by the heavier retrieval tests."""
    return generate_synth_world(seed=20, blocks=6, block_size=20.0,
                                street_width=10.0, perturb=0.35)


@pytest.fixture(scope="session")
def city_map(city_world):
    return build_reference_map(city_world.as_osm_data(), interval=1.0,
                               max_range=50.0, bin_height=5.0)


def random_descriptor(rng: np.random.Generator, max_range: float = 50.0,
                      hit_fraction: float = 0.8) -> np.ndarray:
    """Random valid descriptor: mixture of misses (0) and hits in (0, R]."""
    values = rng.uniform(0.05, max_range, 360)
    values[rng.uniform(0, 1, 360) >= hit_fraction] = 0.0
    return values
