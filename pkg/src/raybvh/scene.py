"""Scene ingestion: mesh loading, synthetic generators, run configuration.

A Scene is an immutable triangle soup held as (n, 3) arrays plus precomputed
unit normals; facet ids are row indices (file order for loaded meshes,
generation order for synthetic ones, renumbered after degenerate facets are
dropped).
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from pathlib import Path
from typing import Optional

import numpy as np

from .geometry import DEGENERATE_AREA, Aabb, Triangle, Vec3, as_vec3
from .rng import Xorshift64Star


class MeshError(ValueError):
    """Malformed mesh input; message names the offending line."""


class ConfigError(ValueError):
    """Invalid run configuration; message names the offending field."""


class MeshFormat(Enum):
    OBJ_SUBSET = "obj"


class SceneKind(Enum):
    RANDOM_BOXES = "random_boxes"
    TWO_CLUSTERS = "two_clusters"
    CORRIDOR = "corridor"
    SKEWED_CITY = "skewed_city"


@dataclass
class Scene:
    name: str
    v0: np.ndarray
    v1: np.ndarray
    v2: np.ndarray
    normals: np.ndarray
    bounds: Aabb
    dropped_degenerate: int = 0

    def __len__(self) -> int:
        return self.v0.shape[0]

    def facet(self, i: int) -> Triangle:
        return Triangle(self.v0[i], self.v1[i], self.v2[i], facet_id=i)

    @cached_property
    def facets(self) -> list[Triangle]:
        return [self.facet(i) for i in range(len(self))]

    @cached_property
    def facet_mins(self) -> np.ndarray:
        return np.minimum(np.minimum(self.v0, self.v1), self.v2)

    @cached_property
    def facet_maxs(self) -> np.ndarray:
        return np.maximum(np.maximum(self.v0, self.v1), self.v2)

    @cached_property
    def facet_centroids(self) -> np.ndarray:
        """Midpoints of the per-facet bounding boxes."""
        return (self.facet_mins + self.facet_maxs) * 0.5

    @cached_property
    def edges1(self) -> np.ndarray:
        return self.v1 - self.v0

    @cached_property
    def edges2(self) -> np.ndarray:
        return self.v2 - self.v0

    @classmethod
    def from_vertex_arrays(cls, v0, v1, v2, name: str = "scene") -> "Scene":
        v0 = np.asarray(v0, dtype=np.float64).reshape(-1, 3)
        v1 = np.asarray(v1, dtype=np.float64).reshape(-1, 3)
        v2 = np.asarray(v2, dtype=np.float64).reshape(-1, 3)
        if not (np.all(np.isfinite(v0)) and np.all(np.isfinite(v1)) and np.all(np.isfinite(v2))):
            raise MeshError("non-finite vertex coordinates")
        cross = np.cross(v1 - v0, v2 - v0)
        norms = np.linalg.norm(cross, axis=1)
        keep = 0.5 * norms >= DEGENERATE_AREA
        dropped = int(np.count_nonzero(~keep))
        v0, v1, v2, cross, norms = v0[keep], v1[keep], v2[keep], cross[keep], norms[keep]
        if v0.shape[0] == 0:
            raise MeshError("zero surviving facets")
        normals = cross / norms[:, None]
        verts = np.concatenate([v0, v1, v2], axis=0)
        bounds = Aabb(verts.min(axis=0), verts.max(axis=0))
        return cls(name=name, v0=v0, v1=v1, v2=v2, normals=normals,
                   bounds=bounds, dropped_degenerate=dropped)

    @classmethod
    def from_triangles(cls, tris, name: str = "scene") -> "Scene":
        tris = list(tris)
        if not tris:
            raise MeshError("zero surviving facets")
        v0 = np.array([t.v0 for t in tris])
        v1 = np.array([t.v1 for t in tris])
        v2 = np.array([t.v2 for t in tris])
        return cls.from_vertex_arrays(v0, v1, v2, name=name)


def parse_mesh(text: str, name: str = "mesh",
               format: MeshFormat = MeshFormat.OBJ_SUBSET) -> Scene:
    """Parse the v/f text subset: `v x y z` vertices, `f i j k...` faces.

    Faces are 1-based; polygons with more than 3 vertices are fan-triangulated.
    Comments (#) and blank lines are ignored.
    """
    if format is not MeshFormat.OBJ_SUBSET:
        raise MeshError(f"unsupported mesh format {format}")
    verts: list[tuple[float, float, float]] = []
    tris: list[tuple[int, int, int]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        tag, args = tokens[0], tokens[1:]
        if tag == "v":
            if len(args) != 3:
                raise MeshError(f"line {lineno}: vertex needs 3 coordinates")
            try:
                verts.append((float(args[0]), float(args[1]), float(args[2])))
            except ValueError:
                raise MeshError(f"line {lineno}: bad vertex coordinate") from None
        elif tag == "f":
            if len(args) < 3:
                raise MeshError(f"line {lineno}: face needs at least 3 vertices")
            idx = []
            for tok in args:
                head = tok.split("/", 1)[0]  # tolerate v/vt/vn references
                try:
                    i = int(head)
                except ValueError:
                    raise MeshError(f"line {lineno}: bad face index {tok!r}") from None
                if i < 1 or i > len(verts):
                    raise MeshError(f"line {lineno}: face index {i} out of range")
                idx.append(i - 1)
            for k in range(1, len(idx) - 1):  # fan triangulation, consecutive ids
                tris.append((idx[0], idx[k], idx[k + 1]))
        else:
            raise MeshError(f"line {lineno}: unknown directive {tag!r}")
    if not tris:
        raise MeshError("zero surviving facets")
    varr = np.array(verts, dtype=np.float64)
    farr = np.array(tris, dtype=np.int64)
    return Scene.from_vertex_arrays(varr[farr[:, 0]], varr[farr[:, 1]], varr[farr[:, 2]],
                                    name=name)


def load_mesh(source, format: MeshFormat = MeshFormat.OBJ_SUBSET) -> Scene:
    """Load a mesh from a path or an open text/byte stream."""
    if isinstance(source, (str, Path)):
        path = Path(source)
        return parse_mesh(path.read_text(), name=path.stem, format=format)
    data = source.read()
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    return parse_mesh(data, name=getattr(source, "name", "stream"), format=format)


def serialize_mesh(scene: Scene) -> str:
    """Write the scene back out in the v/f subset (exact shared-vertex dedup)."""
    out = io.StringIO()
    index: dict[tuple[float, float, float], int] = {}
    faces = []
    for i in range(len(scene)):
        face = []
        for v in (scene.v0[i], scene.v1[i], scene.v2[i]):
            key = (float(v[0]), float(v[1]), float(v[2]))
            at = index.get(key)
            if at is None:
                at = len(index)
                index[key] = at
                out.write(f"v {key[0]!r} {key[1]!r} {key[2]!r}\n")
            face.append(at + 1)
        faces.append(face)
    for f in faces:
        out.write(f"f {f[0]} {f[1]} {f[2]}\n")
    return out.getvalue()


def _box_triangles(cx, cy, cz, hx, hy, hz) -> list[tuple]:
    """12 triangles of an axis-aligned box, outward winding."""
    lo = (cx - hx, cy - hy, cz - hz)
    hi = (cx + hx, cy + hy, cz + hz)
    x0, y0, z0 = lo
    x1, y1, z1 = hi
    quads = [
        ((x0, y0, z0), (x0, y1, z0), (x0, y1, z1), (x0, y0, z1)),  # -x
        ((x1, y0, z0), (x1, y0, z1), (x1, y1, z1), (x1, y1, z0)),  # +x
        ((x0, y0, z0), (x0, y0, z1), (x1, y0, z1), (x1, y0, z0)),  # -y
        ((x0, y1, z0), (x1, y1, z0), (x1, y1, z1), (x0, y1, z1)),  # +y
        ((x0, y0, z0), (x1, y0, z0), (x1, y1, z0), (x0, y1, z0)),  # -z
        ((x0, y0, z1), (x0, y1, z1), (x1, y1, z1), (x1, y0, z1)),  # +z
    ]
    tris = []
    for a, b, c, d in quads:
        tris.append((a, b, c))
        tris.append((a, c, d))
    return tris


_MIN_BUDGET = {
    SceneKind.RANDOM_BOXES: 12,
    SceneKind.TWO_CLUSTERS: 2,
    SceneKind.CORRIDOR: 4,
    SceneKind.SKEWED_CITY: 12,
}


def synth_scene(kind: SceneKind, seed: int, facet_budget: int) -> Scene:
    """Deterministic synthetic scene with at least `facet_budget` facets."""
    if isinstance(kind, str):
        kind = SceneKind(kind)
    if facet_budget < _MIN_BUDGET[kind]:
        raise ValueError(f"facet budget too small for {kind.value}: "
                         f"need >= {_MIN_BUDGET[kind]}")
    rng = Xorshift64Star(seed)
    if kind is SceneKind.RANDOM_BOXES:
        tris = _gen_random_boxes(rng, facet_budget)
    elif kind is SceneKind.TWO_CLUSTERS:
        tris = _gen_two_clusters(rng, facet_budget)
    elif kind is SceneKind.CORRIDOR:
        tris = _gen_corridor(facet_budget)
    else:
        tris = _gen_skewed_city(rng, facet_budget)
    v = np.array(tris, dtype=np.float64)  # (n, 3, 3)
    return Scene.from_vertex_arrays(v[:, 0], v[:, 1], v[:, 2],
                                    name=f"{kind.value}:{seed}:{facet_budget}")


def _gen_random_boxes(rng: Xorshift64Star, budget: int) -> list:
    tris = []
    for _ in range(-(-budget // 12)):
        cx = rng.uniform(0.0, 60.0)
        cy = rng.uniform(0.0, 60.0)
        cz = rng.uniform(0.0, 20.0)
        hx = rng.uniform(0.5, 3.0)
        hy = rng.uniform(0.5, 3.0)
        hz = rng.uniform(0.5, 3.0)
        tris.extend(_box_triangles(cx, cy, cz, hx, hy, hz))
    return tris


def _gen_two_clusters(rng: Xorshift64Star, budget: int) -> list:
    centers = ((0.0, 0.0, 0.0), (100.0, 0.0, 0.0))
    tris = []
    for i in range(max(budget, 2)):
        cx, cy, cz = centers[i % 2]
        px = cx + rng.uniform(-3.0, 3.0)
        py = cy + rng.uniform(-3.0, 3.0)
        pz = cz + rng.uniform(-3.0, 3.0)
        while True:
            e1 = rng.unit_vector()
            e2 = rng.unit_vector()
            s1 = rng.uniform(0.5, 2.0)
            s2 = rng.uniform(0.5, 2.0)
            a = (px, py, pz)
            b = (px + s1 * e1[0], py + s1 * e1[1], pz + s1 * e1[2])
            c = (px + s2 * e2[0], py + s2 * e2[1], pz + s2 * e2[2])
            area = _tri_area(a, b, c)
            if area > 1e-3:
                tris.append((a, b, c))
                break
    return tris


def _tri_area(a, b, c) -> float:
    ux, uy, uz = b[0] - a[0], b[1] - a[1], b[2] - a[2]
    vx, vy, vz = c[0] - a[0], c[1] - a[1], c[2] - a[2]
    cx, cy, cz = uy * vz - uz * vy, uz * vx - ux * vz, ux * vy - uy * vx
    return 0.5 * math.sqrt(cx * cx + cy * cy + cz * cz)


def _gen_corridor(budget: int) -> list:
    """Two parallel rectangular walls (y = 0 and y = 4), gridded to the budget."""
    length, width, height = 20.0, 4.0, 3.0
    cells_per_wall = max(1, -(-budget // 4))
    nx = max(1, int(round(math.sqrt(cells_per_wall * length / height))))
    nz = max(1, -(-cells_per_wall // nx))
    tris = []
    for y in (0.0, width):
        for i in range(nx):
            x0 = length * i / nx
            x1 = length * (i + 1) / nx
            for j in range(nz):
                z0 = height * j / nz
                z1 = height * (j + 1) / nz
                a, b = (x0, y, z0), (x1, y, z0)
                c, d = (x1, y, z1), (x0, y, z1)
                tris.append((a, b, c))
                tris.append((a, c, d))
    return tris


def _gen_skewed_city(rng: Xorshift64Star, budget: int) -> list:
    """Buildings whose density decays with distance from the (0,0,0) corner."""
    extent = 100.0
    tris = []
    for _ in range(-(-budget // 12)):
        ux = rng.uniform()
        uy = rng.uniform()
        cx = extent * ux * ux * ux
        cy = extent * uy * uy * uy
        hx = rng.uniform(1.0, 4.0)
        hy = rng.uniform(1.0, 4.0)
        hz = rng.uniform(1.5, 7.5)
        tris.extend(_box_triangles(cx, cy, hz, hx, hy, hz))  # grounded at z=0
    return tris


_STRATEGY_NAMES = ("brute", "median", "sah", "hybrid")


@dataclass
class RunConfig:
    tx: Vec3
    rx: Vec3
    alpha: float = 0.5
    leaf_threshold: int = 16
    tessellation_level: int = 3
    max_reflections: int = 2
    strategy: str = "hybrid"
    frequency_ghz: float = 2.4  # metadata only
    seed: int = 1
    bins: int = 16
    t_i: float = 1.0
    t_trav: float = 0.125
    normalize_distance: bool = False
    path_length_limit: Optional[float] = None

    def __post_init__(self):
        self.tx = as_vec3(self.tx)
        self.rx = as_vec3(self.rx)
        if np.array_equal(self.tx, self.rx):
            raise ConfigError("tx: must differ from rx")
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError("alpha: must be in [0, 1]")
        if self.leaf_threshold < 1:
            raise ConfigError("leaf_threshold: must be >= 1")
        if not 0 <= self.tessellation_level <= 8:
            raise ConfigError("tessellation_level: must be in [0, 8]")
        if self.max_reflections < 0:
            raise ConfigError("max_reflections: must be >= 0")
        if self.strategy not in _STRATEGY_NAMES:
            raise ConfigError(f"strategy: must be one of {', '.join(_STRATEGY_NAMES)}")
        if self.bins < 2:
            raise ConfigError("bins: must be >= 2")
        if self.t_i < 0.0:
            raise ConfigError("t_i: must be >= 0")
        if self.t_trav < 0.0:
            raise ConfigError("t_trav: must be >= 0")
        if self.path_length_limit is not None and not self.path_length_limit > 0.0:
            raise ConfigError("path_length_limit: must be > 0")


def _parse_vec(value: str, key: str) -> tuple[float, float, float]:
    parts = value.strip().strip("()").replace(",", " ").split()
    if len(parts) != 3:
        raise ConfigError(f"{key}: expected 3 components")
    try:
        return (float(parts[0]), float(parts[1]), float(parts[2]))
    except ValueError:
        raise ConfigError(f"{key}: bad number") from None


def _parse_bool(value: str, key: str) -> bool:
    low = value.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean")


def parse_config_text(text: str) -> dict:
    """Parse flat `key = value` lines into a dict of typed RunConfig values."""
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        try:
            if key in ("tx", "rx"):
                values[key] = _parse_vec(value, key)
            elif key in ("alpha", "frequency_ghz", "t_i", "t_trav"):
                values[key] = float(value)
            elif key in ("leaf_threshold", "tessellation_level", "max_reflections",
                         "seed", "bins"):
                values[key] = int(value)
            elif key == "strategy":
                values[key] = value.lower()
            elif key == "normalize_distance":
                values[key] = _parse_bool(value, key)
            elif key == "path_length_limit":
                values[key] = None if value.lower() in ("none", "") else float(value)
            else:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"{key}: bad value {value!r}") from None
    return values


def load_config(text: str) -> RunConfig:
    """Parse and validate a flat key-value configuration document."""
    values = parse_config_text(text)
    for required in ("tx", "rx"):
        if required not in values:
            raise ConfigError(f"{required}: missing")
    return RunConfig(**values)


# Parameter presets mirroring the two published measurement setups.
INDOOR_PRESET = """\
tx = 1.46, 2.42, 2.1
rx = 1.2, 1.2, 1.5
alpha = 0.7
leaf_threshold = 250
max_reflections = 2
frequency_ghz = 2.4
strategy = hybrid
"""

OUTDOOR_PRESET = """\
tx = 450, 450, 10
rx = 450, 550, 25
alpha = 0.4
leaf_threshold = 820
max_reflections = 3
frequency_ghz = 2.4
strategy = hybrid
"""
