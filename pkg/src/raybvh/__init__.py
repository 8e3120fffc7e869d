"""raybvh: BVH-accelerated specular ray tracing for radio propagation paths.

Core pieces: geometry kernels, a distance-weighted BVH builder (median / SAH /
hybrid split strategies), an icosahedral SBR launcher, a multi-bounce specular
tracer with receiving-sphere capture, and a benchmark harness that checks
every acceleration strategy against a brute-force oracle.
"""

__version__ = "0.1.0"

from .geometry import (Aabb, Hit, Ray, Triangle, Vec3, aabb_of_triangles, aabb_union,
                       centroid, ray_aabb_intersect, ray_triangle_intersect, reflect,
                       surface_area, vec3)
from .bvh import (BuildConfig, BvhNode, BvhTree, SplitCandidate, Strategy,
                  brute_force_closest, build, dump_tree, enumerate_splits,
                  hybrid_cost, sah_cost, traverse_closest, tree_metrics)
from .launch import LaunchSet, adjacent_angle, tessellate
from .scene import (ConfigError, MeshError, RunConfig, Scene, SceneKind, load_config,
                    load_mesh, parse_mesh, serialize_mesh, synth_scene)
from .stats import RunStats
from .tracer import (PathRecord, TraceConfig, dump_paths, reception_radius,
                     segment_capture, trace_all, trace_one)

__all__ = [
    "Aabb", "Hit", "Ray", "Triangle", "Vec3", "aabb_of_triangles", "aabb_union",
    "centroid", "ray_aabb_intersect", "ray_triangle_intersect", "reflect",
    "surface_area", "vec3",
    "BuildConfig", "BvhNode", "BvhTree", "SplitCandidate", "Strategy",
    "brute_force_closest", "build", "dump_tree", "enumerate_splits",
    "hybrid_cost", "sah_cost", "traverse_closest", "tree_metrics",
    "LaunchSet", "adjacent_angle", "tessellate",
    "ConfigError", "MeshError", "RunConfig", "Scene", "SceneKind", "load_config",
    "load_mesh", "parse_mesh", "serialize_mesh", "synth_scene",
    "RunStats",
    "PathRecord", "TraceConfig", "dump_paths", "reception_radius",
    "segment_capture", "trace_all", "trace_one",
    "__version__",
]
