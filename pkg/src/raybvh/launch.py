"""SBR ray launching: geodesic subdivision of the regular icosahedron.

One ray per mesh vertex; `delta` is the largest great-circle angle between
two edge-adjacent directions, which sizes the receiving sphere.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

MAX_LEVEL = 8  # ~655k rays; enough for desk-scale experiments

_PHI = (1.0 + math.sqrt(5.0)) / 2.0

# Canonical vertices: cyclic permutations of (0, +/-1, +/-phi), normalized later.
_ICO_VERTS = [
    (-1.0, _PHI, 0.0), (1.0, _PHI, 0.0), (-1.0, -_PHI, 0.0), (1.0, -_PHI, 0.0),
    (0.0, -1.0, _PHI), (0.0, 1.0, _PHI), (0.0, -1.0, -_PHI), (0.0, 1.0, -_PHI),
    (_PHI, 0.0, -1.0), (_PHI, 0.0, 1.0), (-_PHI, 0.0, -1.0), (-_PHI, 0.0, 1.0),
]

_ICO_FACES = [
    (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
    (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
    (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
    (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
]


@dataclass(frozen=True)
class LaunchSet:
    directions: np.ndarray  # (n, 3) unit vectors
    faces: np.ndarray       # (m, 3) vertex indices
    delta: float            # max adjacent-direction angle, radians
    level: int


def tessellate(level: int) -> LaunchSet:
    """Geodesic sphere at the given subdivision level.

    Each step splits every face into 4 via sphere-projected edge midpoints
    (shared midpoints deduplicated by sorted index pair), giving
    10*4^level + 2 directions and 20*4^level faces.
    """
    if not 0 <= level <= MAX_LEVEL:
        raise ValueError(f"level must be in [0, {MAX_LEVEL}]")
    verts = [_normalized(v) for v in _ICO_VERTS]
    faces = list(_ICO_FACES)
    for _ in range(level):
        midpoint: dict[tuple[int, int], int] = {}

        def mid(i: int, j: int) -> int:
            key = (i, j) if i < j else (j, i)
            at = midpoint.get(key)
            if at is None:
                at = len(verts)
                verts.append(_normalized(tuple((a + b) / 2.0 for a, b in zip(verts[i], verts[j]))))
                midpoint[key] = at
            return at

        split = []
        for a, b, c in faces:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            split.extend(((a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)))
        faces = split
    directions = np.array(verts, dtype=np.float64)
    face_arr = np.array(faces, dtype=np.int64)
    delta = adjacent_angle(directions, edges_of(face_arr))
    return LaunchSet(directions=directions, faces=face_arr, delta=delta, level=level)


def _normalized(v) -> tuple[float, float, float]:
    n = math.sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2])
    return (v[0] / n, v[1] / n, v[2] / n)


def edges_of(faces: np.ndarray) -> np.ndarray:
    """Unique undirected edges (e, 2) of a triangle mesh."""
    pairs = np.concatenate([faces[:, (0, 1)], faces[:, (1, 2)], faces[:, (2, 0)]])
    pairs = np.sort(pairs, axis=1)
    return np.unique(pairs, axis=0)


def adjacent_angle(directions: np.ndarray, edges: np.ndarray) -> float:
    """Max great-circle angle over the given direction-index pairs, radians."""
    dots = np.einsum("ij,ij->i", directions[edges[:, 0]], directions[edges[:, 1]])
    return float(np.arccos(np.clip(dots.min(), -1.0, 1.0)))
