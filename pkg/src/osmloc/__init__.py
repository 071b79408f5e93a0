"""Map-free LiDAR global localization against OpenStreetMap building outlines."""

from .descriptor import (ANGULAR_BINS, context_rows, descriptor_key, l1_distance,
                         min_rotated_distance, rotate, rotated_distances, to_context, to_key)
from .evaluation import EvalReport, QueryOutcome, evaluate, emit_report
from .geo import (Edge, EdgeSet, GeoPoint, PlanarPoint, interpolate_polyline,
                  ray_hit_distance, utm_zone_for, wgs84_to_planar)
from .osm import (MapFormatError, OsmData, ReferenceMap, ReferenceMapParams,
                  build_reference_map, load_reference_map, osm_descriptor, parse_osm,
                  save_reference_map)
from .retrieval import (LocalizationResult, RankedMatch, localize, stage1_candidates,
                        stage2_rerank)
from .scan import (BUILDING_CLASS_ID, filter_building_points, lidar_descriptor,
                   read_ground_truth, read_labels, read_velodyne_bin)
from .synth import SynthWorld, add_scan_noise, generate_synth_world, simulate_scan

__version__ = "0.1.0"
