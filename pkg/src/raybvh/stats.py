"""Run counters and timings shared by the traversal, tracer and harness."""
from __future__ import annotations

from dataclasses import asdict, dataclass


@dataclass
class RunStats:
    ray_aabb_tests: int = 0
    ray_triangle_tests: int = 0
    nodes_visited: int = 0
    build_time: float = 0.0   # seconds, monotonic clock
    trace_time: float = 0.0
    rays_launched: int = 0
    paths_captured: int = 0

    def merge(self, other: "RunStats") -> None:
        """Fold another accumulator in (per-thread merge): counters add,
        timings are owned by the harness and left untouched."""
        self.ray_aabb_tests += other.ray_aabb_tests
        self.ray_triangle_tests += other.ray_triangle_tests
        self.nodes_visited += other.nodes_visited
        self.rays_launched += other.rays_launched
        self.paths_captured += other.paths_captured

    def counter_total(self) -> int:
        """Traversal work metric: nodes visited plus triangle tests."""
        return self.nodes_visited + self.ray_triangle_tests

    def as_dict(self) -> dict:
        return asdict(self)
