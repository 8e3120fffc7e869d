"""Specular multi-bounce ray tracing with receiving-sphere capture.

Each launched ray walks leg by leg: capture is tested along the unobstructed
segment up to the closest hit (so occlusion is inherent), then the ray
reflects and continues until the reflection budget, the scene, or the length
limit runs out.  The receiving sphere grows with traveled length, r = l*delta/sqrt(3),
compensating the angular spread of adjacent launched rays.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional

import numpy as np

from .geometry import Hit, Ray, REFLECT_OFFSET, Vec3, as_vec3, reflect
from .launch import LaunchSet
from .scene import Scene
from .stats import RunStats

_SQRT3 = math.sqrt(3.0)
_GRAZE_EPS = 1e-12  # |d.n| below this: tangent ray, reflection discarded

Intersector = Callable[[Ray], Optional[Hit]]


@dataclass
class TraceConfig:
    max_reflections: int
    tx: Vec3
    rx: Vec3
    delta: float  # adjacent-ray angle from the launch set, radians
    path_length_limit: Optional[float] = None

    def __post_init__(self):
        self.tx = as_vec3(self.tx)
        self.rx = as_vec3(self.rx)
        if self.max_reflections < 0:
            raise ValueError("max_reflections must be >= 0")
        if not self.delta > 0.0:
            raise ValueError("delta must be positive")
        if self.path_length_limit is not None and not self.path_length_limit > 0.0:
            raise ValueError("path_length_limit must be positive")


@dataclass(frozen=True)
class PathRecord:
    """One captured propagation path: tx -> bounce points -> capture point."""

    facet_sequence: tuple[int, ...]
    vertices: np.ndarray      # (bounces + 2, 3)
    unfolded_length: float    # m, traveled length up to the capture point
    miss_distance: float      # m, perpendicular miss at capture

    @property
    def bounces(self) -> int:
        return len(self.facet_sequence)


def reception_radius(length: float, delta: float) -> float:
    """Receiving-sphere radius r = l*delta/sqrt(3)."""
    if not length > 0.0:
        raise ValueError("path length must be positive")
    if not delta > 0.0:
        raise ValueError("delta must be positive")
    return length * delta / _SQRT3


class SegmentCapture(NamedTuple):
    point: np.ndarray     # closest point on the segment to rx
    miss_distance: float
    length: float         # traveled length at the closest point


def segment_capture(seg_start: Vec3, seg_end: Vec3, rx: Vec3, delta: float,
                    length_before: float = 0.0) -> SegmentCapture | None:
    """Capture test of one propagation leg against the receiving sphere.

    Captures when the perpendicular distance from rx to the segment's closest
    point is within the reception radius at the traveled length of that point.
    """
    seg = seg_end - seg_start
    seg_len2 = float(seg @ seg)
    if seg_len2 == 0.0:
        raise ValueError("degenerate segment")
    s = float((rx - seg_start) @ seg) / seg_len2
    s = min(max(s, 0.0), 1.0)
    closest = seg_start + s * seg
    off = rx - closest
    miss = math.sqrt(float(off @ off))
    length = length_before + s * math.sqrt(seg_len2)
    radius = length * delta / _SQRT3 if length > 0.0 else 0.0
    if miss <= radius:
        return SegmentCapture(point=closest, miss_distance=miss, length=length)
    return None


def trace_one(ray: Ray, scene: Scene, intersector: Intersector,
              cfg: TraceConfig, stats: RunStats | None = None) -> list[PathRecord]:
    """Trace one launched ray through its reflection budget.

    Returns every capture along the way (one PathRecord per captured leg);
    terminates on escape, on exceeding max_reflections, or at the length limit.
    """
    records: list[PathRecord] = []
    origin = ray.origin
    direction = ray.direction
    vertices = [origin]
    facet_ids: list[int] = []
    acc_len = 0.0
    spawn_origin = origin  # ray origin including the anti-acne bias
    for leg in range(cfg.max_reflections + 1):
        remaining = math.inf
        if cfg.path_length_limit is not None:
            remaining = cfg.path_length_limit - acc_len
            if remaining <= 0.0:
                break
        hit = intersector(Ray(spawn_origin, direction, t_max=remaining))
        if hit is not None:
            leg_end = hit.point
        else:
            # open leg: clamp just past the closest approach to rx
            reach = max(float((cfg.rx - origin) @ direction), 0.0) + 1.0
            if remaining < reach:
                reach = remaining
            leg_end = origin + reach * direction
        cap = segment_capture(origin, leg_end, cfg.rx, cfg.delta, length_before=acc_len)
        if cap is not None:
            records.append(PathRecord(
                facet_sequence=tuple(facet_ids),
                vertices=np.array(vertices + [cap.point]),
                unfolded_length=cap.length,
                miss_distance=cap.miss_distance,
            ))
        if hit is None or leg == cfg.max_reflections:
            break
        normal = scene.normals[hit.facet_id]
        cos_in = float(direction @ normal)
        if abs(cos_in) < _GRAZE_EPS:
            break  # tangent ray
        acc_len += float(np.linalg.norm(leg_end - origin))
        if cfg.path_length_limit is not None and acc_len >= cfg.path_length_limit:
            break
        facet_ids.append(hit.facet_id)
        vertices.append(leg_end)
        direction = reflect(direction, normal)
        outward = normal if cos_in < 0.0 else -normal
        origin = leg_end
        spawn_origin = leg_end + REFLECT_OFFSET * outward
    return records


def trace_all(launch: LaunchSet, scene: Scene, intersector: Intersector,
              cfg: TraceConfig, stats: RunStats | None = None) -> list[PathRecord]:
    """Trace every launch direction, then deduplicate by facet-id sequence.

    The representative of each sequence is the capture with minimum miss
    distance; output is sorted by (bounce count, unfolded length) so repeated
    runs are comparable line by line.
    """
    if stats is None:
        stats = RunStats()
    best: dict[tuple[int, ...], PathRecord] = {}
    for k in range(launch.directions.shape[0]):
        one = trace_one(Ray(cfg.tx, launch.directions[k]), scene, intersector, cfg, stats)
        for rec in one:
            seen = best.get(rec.facet_sequence)
            if seen is None or rec.miss_distance < seen.miss_distance:
                best[rec.facet_sequence] = rec
    stats.rays_launched += launch.directions.shape[0]
    out = sorted(best.values(),
                 key=lambda r: (r.bounces, r.unfolded_length, r.facet_sequence))
    stats.paths_captured += len(out)
    return out


def dump_paths(paths: list[PathRecord]) -> str:
    """Line format: `path <bounces> <unfolded_length> <miss_distance> : <facet ids> : <vertices>`."""
    lines = []
    for p in paths:
        ids = " ".join(str(i) for i in p.facet_sequence)
        verts = " ".join(repr(float(c)) for v in p.vertices for c in v)
        lines.append(f"path {p.bounces} {p.unfolded_length!r} {p.miss_distance!r} : {ids} : {verts}")
    return "\n".join(lines) + ("\n" if lines else "")
