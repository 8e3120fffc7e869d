"""Top-down BVH construction and stack-based closest-hit traversal.

Three selectable split strategies over binned per-axis candidates:

* median   - positional median split on the longest box axis, no cost model;
* sah      - classic surface-area cost: c = S(A)/S(C)*kA*ti + S(B)/S(C)*kB*ti + ttrav;
* hybrid   - SAH blended with squared source distance:
             c = alpha*(SAH terms) + (1-alpha)*d^2 + ttrav, where d^2 is the
             facet-count-weighted mean squared distance from the source point
             to the two child-box midpoints.

The tree is an object partition: every facet lives in exactly one leaf.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .geometry import Aabb, Hit, Ray, Vec3, as_vec3, centroid, ray_triangles_intersect, surface_area
from .scene import Scene
from .stats import RunStats


class Strategy(Enum):
    MEDIAN = "median"
    SAH = "sah"
    HYBRID = "hybrid"


@dataclass
class BuildConfig:
    strategy: Strategy = Strategy.SAH
    alpha: float = 0.5
    t_i: float = 1.0
    t_trav: float = 0.125
    leaf_threshold: int = 16
    source: Vec3 = field(default_factory=lambda: np.zeros(3))
    bins: int = 16
    normalize_distance: bool = False

    def __post_init__(self):
        if isinstance(self.strategy, str):
            self.strategy = Strategy(self.strategy)
        self.source = as_vec3(self.source)
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must be in [0, 1]")
        if self.leaf_threshold < 1:
            raise ValueError("leaf_threshold must be >= 1")
        if self.bins < 2:
            raise ValueError("bins must be >= 2")
        if self.t_i < 0.0 or self.t_trav < 0.0:
            raise ValueError("cost units must be >= 0")


@dataclass
class SplitCandidate:
    axis: int        # 0=X, 1=Y, 2=Z
    boundary: float  # world coordinate of the split plane
    k_a: int
    k_b: int
    box_a: Aabb
    box_b: Aabb
    cost: float
    bin_edge: int    # first centroid bin of the B side


@dataclass
class BvhNode:
    box: Aabb
    left: int = -1    # node indices; -1 marks a leaf
    right: int = -1
    first: int = 0    # leaf range [first, first+count) into prim_order
    count: int = 0
    forced_leaf: bool = False

    @property
    def is_leaf(self) -> bool:
        return self.left < 0


@dataclass
class BvhTree:
    nodes: list[BvhNode]
    prim_order: np.ndarray  # permutation of facet ids; leaves own contiguous slices
    config: BuildConfig
    # permuted facet arrays cached for traversal (leaf ranges slice contiguously)
    _v0: np.ndarray = field(repr=False, default=None)
    _e1: np.ndarray = field(repr=False, default=None)
    _e2: np.ndarray = field(repr=False, default=None)
    _boxes: list = field(repr=False, default=None)  # per node (minx,miny,minz,maxx,maxy,maxz)

    @property
    def root(self) -> BvhNode:
        return self.nodes[0]


def _sah_spread_terms(box_a: Aabb, box_b: Aabb, box_c: Aabb,
                      k_a: int, k_b: int, t_i: float) -> float:
    s_c = surface_area(box_c)
    if s_c == 0.0:
        raise ValueError("degenerate parent box")
    return surface_area(box_a) / s_c * k_a * t_i + surface_area(box_b) / s_c * k_b * t_i


def sah_cost(box_a: Aabb, box_b: Aabb, box_c: Aabb, k_a: int, k_b: int,
             t_i: float, t_trav: float) -> float:
    """Surface-area split cost of dividing parent C into children A and B."""
    return _sah_spread_terms(box_a, box_b, box_c, k_a, k_b, t_i) + t_trav


def source_distance_sq(box_a: Aabb, box_b: Aabb, k_a: int, k_b: int,
                       source: Vec3) -> float:
    """Facet-count-weighted mean squared distance from the source to the
    two child-box midpoints."""
    total = k_a + k_b
    if total == 0:
        return 0.0
    da = centroid(box_a) - source
    db = centroid(box_b) - source
    return (k_a * float(da @ da) + k_b * float(db @ db)) / total


def hybrid_cost(box_a: Aabb, box_b: Aabb, box_c: Aabb, k_a: int, k_b: int,
                cfg: BuildConfig, scene_diagonal: float = 1.0) -> float:
    """SAH blended with squared source distance via cfg.alpha.

    With alpha=1 this reduces bit-for-bit to sah_cost.  When
    cfg.normalize_distance is set, the distance is divided by
    `scene_diagonal` before squaring.
    """
    terms = _sah_spread_terms(box_a, box_b, box_c, k_a, k_b, cfg.t_i)
    d2 = source_distance_sq(box_a, box_b, k_a, k_b, cfg.source)
    if cfg.normalize_distance:
        d2 = d2 / (scene_diagonal * scene_diagonal)
    return cfg.alpha * terms + (1.0 - cfg.alpha) * d2 + cfg.t_trav


def _bin_indices(values: np.ndarray, vmin: float, extent: float, bins: int) -> np.ndarray:
    scaled = (values - vmin) * (bins / extent)
    return np.minimum(scaled.astype(np.int64), bins - 1)


def enumerate_splits(indices: np.ndarray, facet_mins: np.ndarray,
                     facet_maxs: np.ndarray, facet_centroids: np.ndarray,
                     cfg: BuildConfig, scene_diagonal: float = 1.0) -> list[SplitCandidate]:
    """Binned split candidates on all three axes for the facets in `indices`.

    Centroids are bucketed into cfg.bins equal-width bins over their extent
    per axis; every boundary with facets on both sides yields one candidate
    with exact child boxes/counts and its cost under cfg.strategy.  Returns
    an empty list when the centroids are coincident on every axis.
    """
    if cfg.strategy is Strategy.MEDIAN:
        raise ValueError("median strategy does not enumerate split candidates")
    k = indices.shape[0]
    if k < 2:
        raise ValueError("need at least 2 facets to split")
    mins = facet_mins[indices]
    maxs = facet_maxs[indices]
    cents = facet_centroids[indices]
    box_c = Aabb(mins.min(axis=0), maxs.max(axis=0))
    nb = cfg.bins
    out: list[SplitCandidate] = []
    for axis in range(3):
        c = cents[:, axis]
        cmin = float(c.min())
        extent = float(c.max()) - cmin
        if extent <= 0.0:
            continue
        bidx = _bin_indices(c, cmin, extent, nb)
        counts = np.bincount(bidx, minlength=nb)
        bin_mins = np.full((nb, 3), np.inf)
        bin_maxs = np.full((nb, 3), -np.inf)
        np.minimum.at(bin_mins, bidx, mins)
        np.maximum.at(bin_maxs, bidx, maxs)
        pre_min = np.minimum.accumulate(bin_mins, axis=0)
        pre_max = np.maximum.accumulate(bin_maxs, axis=0)
        suf_min = np.minimum.accumulate(bin_mins[::-1], axis=0)[::-1]
        suf_max = np.maximum.accumulate(bin_maxs[::-1], axis=0)[::-1]
        pre_cnt = np.cumsum(counts)
        for b in range(1, nb):
            k_a = int(pre_cnt[b - 1])
            k_b = k - k_a
            if k_a == 0 or k_b == 0:
                continue
            box_a = Aabb(pre_min[b - 1].copy(), pre_max[b - 1].copy())
            box_b = Aabb(suf_min[b].copy(), suf_max[b].copy())
            if cfg.strategy is Strategy.SAH:
                cost = sah_cost(box_a, box_b, box_c, k_a, k_b, cfg.t_i, cfg.t_trav)
            else:
                cost = hybrid_cost(box_a, box_b, box_c, k_a, k_b, cfg, scene_diagonal)
            boundary = cmin + extent * (b / nb)
            out.append(SplitCandidate(axis=axis, boundary=boundary, k_a=k_a, k_b=k_b,
                                      box_a=box_a, box_b=box_b, cost=cost, bin_edge=b))
    return out


def build(scene: Scene, cfg: BuildConfig) -> BvhTree:
    """Recursive top-down build: box the facets, leaf below the threshold,
    otherwise take the minimum-cost candidate (ties: lower axis, then lower
    boundary) and recurse on both sides.

    Candidate-less ranges (coincident centroids) become forced leaves; a
    degenerate parent box falls back to a median split.  Deterministic for
    fixed inputs; single-threaded.
    """
    n = len(scene)
    if n == 0:
        raise ValueError("empty scene")
    mins, maxs, cents = scene.facet_mins, scene.facet_maxs, scene.facet_centroids
    order = np.arange(n, dtype=np.int64)
    scene_diag = scene.bounds.diagonal()
    nodes: list[BvhNode] = []
    # stack entries: (first, last, parent node id, is_left_child)
    stack: list[tuple[int, int, int, bool]] = [(0, n, -1, False)]
    while stack:
        first, last, parent, is_left = stack.pop()
        idx = order[first:last]
        count = last - first
        box = Aabb(mins[idx].min(axis=0), maxs[idx].max(axis=0))
        node_id = len(nodes)
        if parent >= 0:
            if is_left:
                nodes[parent].left = node_id
            else:
                nodes[parent].right = node_id
        if count < cfg.leaf_threshold:
            nodes.append(BvhNode(box=box, first=first, count=count))
            continue
        if count == 1:  # a single facet has no valid split
            nodes.append(BvhNode(box=box, first=first, count=count, forced_leaf=True))
            continue
        split_at = None
        if cfg.strategy is Strategy.MEDIAN:
            split_at = _median_split(order, first, last, cents, box)
        else:
            try:
                cands = enumerate_splits(idx, mins, maxs, cents, cfg, scene_diag)
            except ValueError:
                cands = None  # degenerate parent box: fall back to median
            if cands is None:
                split_at = _median_split(order, first, last, cents, box)
            elif cands:
                best = cands[0]
                for cand in cands[1:]:
                    if cand.cost < best.cost:
                        best = cand
                split_at = _apply_candidate(order, first, last, cents, cfg.bins, best)
        if split_at is None:
            nodes.append(BvhNode(box=box, first=first, count=count, forced_leaf=True))
            continue
        nodes.append(BvhNode(box=box, left=-2, right=-2))  # children patched on pop
        stack.append((split_at, last, node_id, False))
        stack.append((first, split_at, node_id, True))
    tree = BvhTree(nodes=nodes, prim_order=order, config=cfg)
    tree._v0 = scene.v0[order]
    tree._e1 = scene.edges1[order]
    tree._e2 = scene.edges2[order]
    tree._boxes = [(float(nd.box.min[0]), float(nd.box.min[1]), float(nd.box.min[2]),
                    float(nd.box.max[0]), float(nd.box.max[1]), float(nd.box.max[2]))
                   for nd in nodes]
    return tree


def _median_split(order: np.ndarray, first: int, last: int,
                  cents: np.ndarray, box: Aabb) -> int:
    """Positional median split along the longest box axis (stable order)."""
    idx = order[first:last]
    axis = int(np.argmax(box.max - box.min))
    perm = np.argsort(cents[idx, axis], kind="stable")
    order[first:last] = idx[perm]
    return first + (last - first) // 2


def _apply_candidate(order: np.ndarray, first: int, last: int, cents: np.ndarray,
                     bins: int, cand: SplitCandidate) -> int:
    """Partition the range by the candidate's bin boundary (stable order)."""
    idx = order[first:last]
    c = cents[idx, cand.axis]
    cmin = float(c.min())
    extent = float(c.max()) - cmin
    bidx = _bin_indices(c, cmin, extent, bins)
    mask = bidx < cand.bin_edge
    left_idx = idx[mask]
    order[first:last] = np.concatenate([left_idx, idx[~mask]])
    return first + left_idx.shape[0]


def _slab_enter(box: tuple, ox: float, oy: float, oz: float,
                dx: float, dy: float, dz: float, limit: float) -> float | None:
    """Entry parameter of the ray/box interval clipped to [0, limit], or None."""
    t0 = 0.0
    t1 = limit
    for o, d, lo, hi in ((ox, dx, box[0], box[3]),
                         (oy, dy, box[1], box[4]),
                         (oz, dz, box[2], box[5])):
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
    return t0


_PRUNE_REL = 1e-12  # conservative slab margin: facets on box faces round either way


def traverse_closest(tree: BvhTree, ray: Ray, stats: RunStats | None = None) -> Hit | None:
    """Globally closest hit (smallest t, ties to the lower facet id).

    Children are visited near-first by entry parameter; a subtree is pruned
    when its entry exceeds the best hit found so far (padded by a relative
    epsilon so box-face rounding cannot hide a coplanar closer facet).
    Counts one AABB test per node box tested and one triangle test per facet
    evaluated.
    """
    if stats is None:
        stats = RunStats()
    origin = ray.origin
    direction = ray.direction
    ox, oy, oz = (float(origin[0]), float(origin[1]), float(origin[2]))
    dx, dy, dz = (float(direction[0]), float(direction[1]), float(direction[2]))
    nodes = tree.nodes
    boxes = tree._boxes
    prim_ids = tree.prim_order
    best_t = ray.t_max
    best_id = -1
    best_uv = (0.0, 0.0)
    bound = best_t + best_t * _PRUNE_REL
    stats.ray_aabb_tests += 1
    enter = _slab_enter(boxes[0], ox, oy, oz, dx, dy, dz, bound)
    if enter is None:
        return None
    stack: list[tuple[int, float]] = [(0, enter)]
    while stack:
        node_id, t_enter = stack.pop()
        if t_enter > bound:
            continue
        stats.nodes_visited += 1
        node = nodes[node_id]
        if node.is_leaf:
            first = node.first
            cnt = node.count
            stats.ray_triangle_tests += cnt
            sl = slice(first, first + cnt)
            t, u, v, ok = ray_triangles_intersect(
                origin, direction, ray.t_max, tree._v0[sl], tree._e1[sl], tree._e2[sl])
            if ok.any():
                ts = t[ok]
                ids = prim_ids[sl][ok]
                t_min = ts.min()
                at_min = ts == t_min
                j = int(np.flatnonzero(at_min)[np.argmin(ids[at_min])])
                fid = int(ids[j])
                t_min = float(t_min)
                if t_min < best_t or (t_min == best_t and (best_id < 0 or fid < best_id)):
                    best_t = t_min
                    best_id = fid
                    best_uv = (float(u[ok][j]), float(v[ok][j]))
                    bound = best_t + best_t * _PRUNE_REL
        else:
            stats.ray_aabb_tests += 2
            e_left = _slab_enter(boxes[node.left], ox, oy, oz, dx, dy, dz, bound)
            e_right = _slab_enter(boxes[node.right], ox, oy, oz, dx, dy, dz, bound)
            if e_left is not None and e_right is not None:
                if e_left <= e_right:
                    stack.append((node.right, e_right))
                    stack.append((node.left, e_left))
                else:
                    stack.append((node.left, e_left))
                    stack.append((node.right, e_right))
            elif e_left is not None:
                stack.append((node.left, e_left))
            elif e_right is not None:
                stack.append((node.right, e_right))
    if best_id < 0:
        return None
    bu, bv = best_uv
    return Hit(t=best_t, point=origin + best_t * direction,
               barycentric=(1.0 - bu - bv, bu, bv), facet_id=best_id)


def brute_force_closest(scene: Scene, ray: Ray, stats: RunStats | None = None) -> Hit | None:
    """Linear scan over all facets; the oracle traverse_closest must match."""
    if stats is None:
        stats = RunStats()
    n = len(scene)
    stats.ray_triangle_tests += n
    if n == 0:
        return None
    t, u, v, ok = ray_triangles_intersect(ray.origin, ray.direction, ray.t_max,
                                          scene.v0, scene.edges1, scene.edges2)
    if not ok.any():
        return None
    ids = np.flatnonzero(ok)
    ts = t[ids]
    t_min = ts.min()
    fid = int(ids[ts == t_min].min())
    return Hit(t=float(t_min), point=ray.origin + float(t_min) * ray.direction,
               barycentric=(1.0 - u[fid] - v[fid], float(u[fid]), float(v[fid])),
               facet_id=fid)


@dataclass
class TreeMetrics:
    node_count: int
    leaf_count: int
    max_depth: int
    mean_leaf_size: float
    sibling_overlap_area: float  # m^2, summed over internal nodes


def tree_metrics(tree: BvhTree) -> TreeMetrics:
    nodes = tree.nodes
    depths = _node_depths(tree)
    leaf_sizes = [nd.count for nd in nodes if nd.is_leaf]
    overlap = 0.0
    for nd in nodes:
        if nd.is_leaf:
            continue
        a, b = nodes[nd.left].box, nodes[nd.right].box
        lo = np.maximum(a.min, b.min)
        hi = np.minimum(a.max, b.max)
        if np.all(lo <= hi):
            overlap += surface_area(Aabb(lo, hi))
    return TreeMetrics(node_count=len(nodes),
                       leaf_count=len(leaf_sizes),
                       max_depth=int(max(depths)),
                       mean_leaf_size=sum(leaf_sizes) / len(leaf_sizes),
                       sibling_overlap_area=overlap)


def _node_depths(tree: BvhTree) -> list[int]:
    depths = [0] * len(tree.nodes)
    stack = [(0, 0)]
    while stack:
        node_id, depth = stack.pop()
        depths[node_id] = depth
        node = tree.nodes[node_id]
        if not node.is_leaf:
            stack.append((node.left, depth + 1))
            stack.append((node.right, depth + 1))
    return depths


def dump_tree(tree: BvhTree) -> str:
    """Line-oriented debug dump, one node per line, preorder:

    `depth kind min_x min_y min_z max_x max_y max_z count_or_children`
    where kind is `leaf` (trailing field: facet count, with `forced` appended
    for forced leaves) or `inner` (trailing fields: left and right node ids).
    """
    lines = []
    stack = [(0, 0)]
    while stack:
        node_id, depth = stack.pop()
        node = tree.nodes[node_id]
        b = node.box
        coords = " ".join(repr(float(x)) for x in (*b.min, *b.max))
        if node.is_leaf:
            tail = f"{node.count} forced" if node.forced_leaf else f"{node.count}"
            lines.append(f"{depth} leaf {coords} {tail}")
        else:
            lines.append(f"{depth} inner {coords} {node.left} {node.right}")
            stack.append((node.right, depth + 1))
            stack.append((node.left, depth + 1))
    return "\n".join(lines) + "\n"
