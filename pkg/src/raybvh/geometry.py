"""Geometric kernels: vectors, rays, triangles, axis-aligned boxes.

All positions are in meters, directions are unit vectors.  Every value is
immutable after construction and every function is pure, so everything here
is safe to share across threads.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# A point or direction is a (3,) float64 ndarray.
Vec3 = np.ndarray

DEGENERATE_AREA = 1e-12  # triangles thinner than this are rejected at scene load
PARALLEL_EPS = 1e-12     # ray/plane denominators below this count as parallel
REFLECT_OFFSET = 1e-6    # spawn bias along the normal for reflected rays (m)


def vec3(x: float, y: float, z: float) -> Vec3:
    return np.array([x, y, z], dtype=np.float64)


def as_vec3(value) -> Vec3:
    v = np.asarray(value, dtype=np.float64)
    if v.shape != (3,):
        raise ValueError(f"expected 3 components, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector components must be finite")
    return v


@dataclass(frozen=True)
class Ray:
    """Half line from `origin` along unit `direction`, clipped at `t_max`."""

    origin: Vec3
    direction: Vec3
    t_max: float = math.inf

    def __post_init__(self):
        object.__setattr__(self, "origin", as_vec3(self.origin))
        d = as_vec3(self.direction)
        object.__setattr__(self, "direction", d)
        if abs(float(d @ d) - 1.0) > 2e-9:
            raise ValueError("ray direction must be unit length")
        if not self.t_max > 0.0:
            raise ValueError("t_max must be positive")

    def at(self, t: float) -> Vec3:
        return self.origin + t * self.direction


@dataclass(frozen=True)
class Triangle:
    v0: Vec3
    v1: Vec3
    v2: Vec3
    facet_id: int = 0

    def area(self) -> float:
        return 0.5 * float(np.linalg.norm(np.cross(self.v1 - self.v0, self.v2 - self.v0)))

    def normal(self) -> Vec3:
        n = np.cross(self.v1 - self.v0, self.v2 - self.v0)
        length = float(np.linalg.norm(n))
        if length == 0.0:
            raise ValueError("degenerate triangle has no normal")
        return n / length


@dataclass(frozen=True)
class Aabb:
    """Axis-aligned box; components of min/max may be equal (flat box)."""

    min: Vec3
    max: Vec3

    def __post_init__(self):
        if np.any(self.min > self.max):
            raise ValueError("box min must not exceed max")

    def diagonal(self) -> float:
        return float(np.linalg.norm(self.max - self.min))

    def contains_point(self, p: Vec3, atol: float = 0.0) -> bool:
        return bool(np.all(p >= self.min - atol) and np.all(p <= self.max + atol))

    def contains_box(self, other: "Aabb") -> bool:
        return bool(np.all(other.min >= self.min) and np.all(other.max <= self.max))


@dataclass(frozen=True)
class Hit:
    """Closest-hit record: point = origin + t*direction = w0*v0 + w1*v1 + w2*v2."""

    t: float
    point: Vec3
    barycentric: tuple[float, float, float]
    facet_id: int


def aabb_of_triangles(tris) -> Aabb:
    """Componentwise min/max box over all vertices of `tris`."""
    tris = list(tris)
    if not tris:
        raise ValueError("empty primitive set")
    verts = np.array([[t.v0, t.v1, t.v2] for t in tris], dtype=np.float64).reshape(-1, 3)
    return Aabb(verts.min(axis=0), verts.max(axis=0))


def aabb_union(a: Aabb, b: Aabb) -> Aabb:
    return Aabb(np.minimum(a.min, b.min), np.maximum(a.max, b.max))


def aabb_intersection(a: Aabb, b: Aabb) -> Aabb | None:
    """Overlap box of a and b, or None when they are disjoint (touching counts)."""
    lo = np.maximum(a.min, b.min)
    hi = np.minimum(a.max, b.max)
    if np.any(lo > hi):
        return None
    return Aabb(lo, hi)


def surface_area(b: Aabb) -> float:
    dx, dy, dz = b.max - b.min
    return 2.0 * (dx * dy + dy * dz + dz * dx)


def centroid(b: Aabb) -> Vec3:
    return (b.min + b.max) * 0.5


def ray_aabb_intersect(r: Ray, b: Aabb) -> tuple[float, float] | None:
    """Slab test; parametric interval clipped to [0, t_max], or None on a miss.

    A zero direction component means the ray is parallel to that slab: it
    misses unless the origin lies within the slab (boundaries inclusive).
    """
    t0, t1 = 0.0, r.t_max
    for axis in range(3):
        o = float(r.origin[axis])
        d = float(r.direction[axis])
        lo = float(b.min[axis])
        hi = float(b.max[axis])
        if d == 0.0:
            if o < lo or o > hi:
                return None
            continue
        inv = 1.0 / d
        ta = (lo - o) * inv
        tb = (hi - o) * inv
        if ta > tb:
            ta, tb = tb, ta
        if ta > t0:
            t0 = ta
        if tb < t1:
            t1 = tb
        if t0 > t1:
            return None
    return t0, t1


def ray_triangle_intersect(r: Ray, tri: Triangle) -> Hit | None:
    """Moller-Trumbore; edge hits count, rays parallel to the plane miss."""
    e1 = tri.v1 - tri.v0
    e2 = tri.v2 - tri.v0
    pvec = np.cross(r.direction, e2)
    det = float(e1 @ pvec)
    if abs(det) < PARALLEL_EPS:
        return None
    inv_det = 1.0 / det
    tvec = r.origin - tri.v0
    u = float(tvec @ pvec) * inv_det
    if u < 0.0 or u > 1.0:
        return None
    qvec = np.cross(tvec, e1)
    v = float(r.direction @ qvec) * inv_det
    if v < 0.0 or u + v > 1.0:
        return None
    t = float(e2 @ qvec) * inv_det
    if t <= 0.0 or t > r.t_max:
        return None
    return Hit(t=t, point=r.at(t), barycentric=(1.0 - u - v, u, v), facet_id=tri.facet_id)


def ray_triangles_intersect(origin: Vec3, direction: Vec3, t_max: float,
                            v0: np.ndarray, e1: np.ndarray, e2: np.ndarray):
    """Vectorized Moller-Trumbore against triangle arrays (v0, v1-v0, v2-v0).

    Returns (t, u, v, ok); ok marks hits with 0 < t <= t_max.
    """
    pvec = np.cross(direction, e2)
    det = np.einsum("ij,ij->i", e1, pvec)
    ok = np.abs(det) >= PARALLEL_EPS
    inv_det = 1.0 / np.where(ok, det, 1.0)
    tvec = origin - v0
    u = np.einsum("ij,ij->i", tvec, pvec) * inv_det
    qvec = np.cross(tvec, e1)
    v = (qvec @ direction) * inv_det
    t = np.einsum("ij,ij->i", e2, qvec) * inv_det
    ok &= (u >= 0.0) & (u <= 1.0) & (v >= 0.0) & (u + v <= 1.0)
    ok &= (t > 0.0) & (t <= t_max)
    return t, u, v, ok


def reflect(direction: Vec3, normal: Vec3) -> Vec3:
    """Mirror `direction` about the plane with unit `normal`: d - 2(d.n)n."""
    return direction - 2.0 * float(direction @ normal) * normal
