import math

import numpy as np
import pytest

from raybvh import Ray, Scene, SceneKind, synth_scene, vec3
from raybvh.bvh import BuildConfig, Strategy, brute_force_closest, build, traverse_closest
from raybvh.geometry import reflect
from raybvh.stats import RunStats
from raybvh.tracer import (PathRecord, TraceConfig, dump_paths, reception_radius,
                           segment_capture, trace_all, trace_one)
from raybvh.launch import tessellate

SQRT3 = math.sqrt(3.0)


def scene_from(tris, name="test"):
    v = np.array(tris, dtype=float)
    return Scene.from_vertex_arrays(v[:, 0], v[:, 1], v[:, 2], name=name)


def quad(corner_a, corner_b, corner_c, corner_d):
    return [(corner_a, corner_b, corner_c), (corner_a, corner_c, corner_d)]


def wall_y(y, x0=-20.0, x1=40.0, z0=-20.0, z1=20.0):
    return quad((x0, y, z0), (x1, y, z0), (x1, y, z1), (x0, y, z1))


def brute_intersector(scene):
    return lambda ray: brute_force_closest(scene, ray)


def unit(v):
    return np.asarray(v, dtype=float) / np.linalg.norm(v)


def mirror_point(p, plane_point, normal):
    return p - 2.0 * float((p - plane_point) @ normal) * normal


def image_source_path(tx, rx, planes):
    """Analytic specular path for a plane sequence: tx, bounce points..., rx."""
    images = [np.asarray(tx, dtype=float)]
    for point, normal in planes:
        images.append(mirror_point(images[-1], np.asarray(point, float), unit(normal)))
    path = [np.asarray(rx, dtype=float)]
    for k in range(len(planes) - 1, -1, -1):
        point, normal = planes[k]
        point = np.asarray(point, float)
        normal = unit(normal)
        src = images[k + 1]
        dst = path[-1]
        denom = float((dst - src) @ normal)
        s = float((point - src) @ normal) / denom
        path.append(src + s * (dst - src))
    path.append(np.asarray(tx, dtype=float))
    return list(reversed(path))  # tx, p_1..p_K, rx


class TestReceptionRadius:
    def test_direct_substitution(self):
        assert reception_radius(SQRT3, 1.0) == pytest.approx(1.0, abs=1e-12)

    def test_l10_delta01(self):
        assert reception_radius(10.0, 0.1) == pytest.approx(0.5773502691896258, abs=1e-12)

    def test_linear_in_length(self):
        assert reception_radius(8.0, 0.2) == pytest.approx(2 * reception_radius(4.0, 0.2), abs=1e-12)

    @pytest.mark.parametrize("l,delta", [(0.0, 1.0), (-1.0, 1.0), (1.0, 0.0), (1.0, -0.5)])
    def test_non_positive_inputs_error(self, l, delta):
        with pytest.raises(ValueError):
            reception_radius(l, delta)


class TestSegmentCapture:
    def test_rx_on_segment(self):
        cap = segment_capture(vec3(0, 0, 0), vec3(10, 0, 0), vec3(4, 0, 0), 0.1)
        assert cap is not None
        assert cap.miss_distance == 0.0
        assert cap.length == pytest.approx(4.0, abs=1e-12)
        assert np.allclose(cap.point, vec3(4, 0, 0))

    def test_rx_far_from_segment(self):
        assert segment_capture(vec3(0, 0, 0), vec3(10, 0, 0), vec3(5, 8, 0), 0.1) is None

    def test_perpendicular_foot_boundary(self):
        # foot at x=9.99 -> radius 9.99*0.1/sqrt(3) = 0.5768
        inside = segment_capture(vec3(0, 0, 0), vec3(10, 0, 0), vec3(9.99, 0.57, 0), 0.1)
        outside = segment_capture(vec3(0, 0, 0), vec3(10, 0, 0), vec3(9.99, 0.58, 0), 0.1)
        assert inside is not None and inside.miss_distance == pytest.approx(0.57)
        assert outside is None

    def test_length_before_accumulates(self):
        # same geometry, more traveled length -> bigger sphere -> capture
        assert segment_capture(vec3(0, 0, 0), vec3(2, 0, 0), vec3(1, 0.5, 0), 0.2) is None
        cap = segment_capture(vec3(0, 0, 0), vec3(2, 0, 0), vec3(1, 0.5, 0), 0.2,
                              length_before=10.0)
        assert cap is not None
        assert cap.length == pytest.approx(11.0, abs=1e-12)

    def test_degenerate_segment_errors(self):
        with pytest.raises(ValueError, match="degenerate"):
            segment_capture(vec3(1, 1, 1), vec3(1, 1, 1), vec3(0, 0, 0), 0.1)

    def test_clamps_to_segment_ends(self):
        # rx beyond the far end: the closest point clamps to the end vertex
        cap = segment_capture(vec3(0, 0, 0), vec3(1, 0, 0), vec3(5, 0.1, 0), 0.2,
                              length_before=100.0)
        assert cap is not None
        assert np.allclose(cap.point, vec3(1, 0, 0))
        assert cap.length == pytest.approx(101.0, abs=1e-12)


class TestTraceOne:
    def test_direct_path_length_five(self):
        scene = scene_from([[(50, 50, 50), (51, 50, 50), (50, 51, 50)]])
        direction = unit(vec3(1, 2, 0.5))
        cfg = TraceConfig(max_reflections=2, tx=vec3(0, 0, 0),
                          rx=5.0 * direction, delta=0.05)
        records = trace_one(Ray(vec3(0, 0, 0), direction), scene,
                            brute_intersector(scene), cfg)
        assert len(records) == 1
        rec = records[0]
        assert rec.facet_sequence == ()
        assert rec.unfolded_length == pytest.approx(5.0, abs=1e-9)
        assert rec.miss_distance == pytest.approx(0.0, abs=1e-9)
        assert rec.vertices.shape == (2, 3)

    def test_single_mirror_matches_image_source(self):
        mirror = quad((-10, -10, 0), (10, -10, 0), (10, 10, 0), (-10, 10, 0))
        scene = scene_from(mirror)
        tx, rx = vec3(0, 0, 3), vec3(4, 0, 2)
        analytic = image_source_path(tx, rx, [(vec3(0, 0, 0), vec3(0, 0, 1))])
        bounce = analytic[1]
        assert np.allclose(bounce, vec3(2.4, 0, 0), atol=1e-12)  # hand value
        cfg = TraceConfig(max_reflections=1, tx=tx, rx=rx, delta=0.01)
        records = trace_one(Ray(tx, unit(bounce - tx)), scene,
                            brute_intersector(scene), cfg)
        assert len(records) == 1
        rec = records[0]
        assert rec.facet_sequence == (0,)
        assert np.allclose(rec.vertices[1], bounce, atol=1e-6)
        assert np.allclose(rec.vertices[2], rx, atol=1e-6)
        assert rec.unfolded_length == pytest.approx(math.sqrt(41.0), abs=1e-6)

    def test_two_parallel_mirrors_order_two(self):
        scene = scene_from(wall_y(0.0) + wall_y(4.0))
        tx, rx = vec3(5, 1.3, 1.5), vec3(9, 2.1, 1.5)
        planes = [(vec3(0, 0, 0), vec3(0, 1, 0)), (vec3(0, 4, 0), vec3(0, 1, 0))]
        analytic = image_source_path(tx, rx, planes)
        cfg = TraceConfig(max_reflections=2, tx=tx, rx=rx, delta=0.01)
        records = trace_one(Ray(tx, unit(analytic[1] - tx)), scene,
                            brute_intersector(scene), cfg)
        two_bounce = [r for r in records if len(r.facet_sequence) == 2]
        assert len(two_bounce) == 1
        rec = two_bounce[0]
        for got, want in zip(rec.vertices, analytic):
            assert np.allclose(got, want, atol=1e-4)

    def test_occluded_direct_path(self):
        blocker = quad((-5, 2, -5), (5, 2, -5), (5, 2, 5), (-5, 2, 5))
        scene = scene_from(blocker)
        cfg = TraceConfig(max_reflections=0, tx=vec3(0, 0, 0), rx=vec3(0, 5, 0), delta=0.2)
        records = trace_one(Ray(vec3(0, 0, 0), vec3(0, 1, 0)), scene,
                            brute_intersector(scene), cfg)
        assert [r for r in records if r.facet_sequence == ()] == []

    def test_order_bound(self):
        scene = scene_from(wall_y(0.0) + wall_y(4.0))
        cfg = TraceConfig(max_reflections=3, tx=vec3(5, 1.3, 1.5),
                          rx=vec3(9, 2.1, 1.5), delta=0.4)
        for direction in tessellate(1).directions:
            for rec in trace_one(Ray(cfg.tx, direction), scene,
                                 brute_intersector(scene), cfg):
                assert len(rec.facet_sequence) <= 3

    def test_path_length_limit_stops_tracing(self):
        scene = scene_from([[(50, 50, 50), (51, 50, 50), (50, 51, 50)]])
        direction = vec3(1, 0, 0)
        rx = vec3(5, 0, 0)
        short = TraceConfig(max_reflections=0, tx=vec3(0, 0, 0), rx=rx, delta=0.05,
                            path_length_limit=3.0)
        assert trace_one(Ray(vec3(0, 0, 0), direction), scene,
                         brute_intersector(scene), short) == []
        longer = TraceConfig(max_reflections=0, tx=vec3(0, 0, 0), rx=rx, delta=0.05,
                             path_length_limit=10.0)
        assert len(trace_one(Ray(vec3(0, 0, 0), direction), scene,
                             brute_intersector(scene), longer)) == 1

    def test_reflection_law_on_actual_directions(self):
        scene = scene_from(wall_y(0.0) + wall_y(4.0))
        cfg = TraceConfig(max_reflections=3, tx=vec3(5, 1.3, 1.5),
                          rx=vec3(9, 2.1, 1.5), delta=0.3)
        inner = brute_intersector(scene)
        for direction in tessellate(1).directions:
            legs = []  # (direction, hit facet) actually used by the tracer

            def recording(ray):
                hit = inner(ray)
                legs.append((np.array(ray.direction), hit.facet_id if hit else None))
                return hit

            trace_one(Ray(cfg.tx, direction), scene, recording, cfg)
            for (d_in, fid), (d_out, _) in zip(legs, legs[1:]):
                assert fid is not None
                expected = reflect(d_in, scene.normals[fid])
                assert np.linalg.norm(d_out - expected) < 1e-9

    def test_vertex_specularity_with_spawn_bias(self):
        scene = scene_from(wall_y(0.0) + wall_y(4.0))
        cfg = TraceConfig(max_reflections=2, tx=vec3(5, 1.3, 1.5),
                          rx=vec3(9, 2.1, 1.5), delta=0.3)
        checked = 0
        for direction in tessellate(2).directions:
            for rec in trace_one(Ray(cfg.tx, direction), scene,
                                 brute_intersector(scene), cfg):
                for i, fid in enumerate(rec.facet_sequence):
                    d_in = unit(rec.vertices[i + 1] - rec.vertices[i])
                    d_out = unit(rec.vertices[i + 2] - rec.vertices[i + 1])
                    assert np.linalg.norm(d_out - reflect(d_in, scene.normals[fid])) < 1e-5
                    checked += 1
        assert checked > 5


class TestTraceAll:
    def corridor(self):
        return scene_from(wall_y(0.0) + wall_y(4.0), name="two-walls")

    def config(self, launch, max_reflections=2):
        return TraceConfig(max_reflections=max_reflections, tx=vec3(5, 1.3, 1.5),
                           rx=vec3(9, 2.1, 1.5), delta=launch.delta)

    def test_dedup_direct_path(self):
        scene = scene_from([[(500, 500, 500), (501, 500, 500), (500, 501, 500)]])
        launch = tessellate(2)
        cfg = TraceConfig(max_reflections=0, tx=vec3(0, 0, 0), rx=vec3(2, 0, 0),
                          delta=launch.delta)
        stats = RunStats()
        paths = trace_all(launch, scene, brute_intersector(scene), cfg, stats)
        assert len(paths) == 1
        assert paths[0].facet_sequence == ()
        assert stats.rays_launched == 162
        assert stats.paths_captured == 1

    def test_corridor_path_multiset(self):
        scene = self.corridor()
        launch = tessellate(3)
        stats = RunStats()
        paths = trace_all(launch, scene, brute_intersector(scene),
                          self.config(launch), stats)
        wall_of = lambda fid: "A" if fid < 2 else "B"
        wall_seqs = sorted(tuple(wall_of(f) for f in p.facet_sequence) for p in paths)
        assert wall_seqs == [(), ("A",), ("A", "B"), ("B",), ("B", "A")]
        # captured lengths sit near the analytic image-source lengths
        tx, rx = vec3(5, 1.3, 1.5), vec3(9, 2.1, 1.5)
        plane = {"A": (vec3(0, 0, 0), vec3(0, 1, 0)), "B": (vec3(0, 4, 0), vec3(0, 1, 0))}
        for p in paths:
            seq = tuple(wall_of(f) for f in p.facet_sequence)
            analytic = image_source_path(tx, rx, [plane[w] for w in seq])
            length = sum(np.linalg.norm(b - a) for a, b in zip(analytic, analytic[1:]))
            assert p.unfolded_length == pytest.approx(length, rel=0.05)

    def test_sorted_and_unique_output(self):
        scene = self.corridor()
        launch = tessellate(2)
        paths = trace_all(launch, scene, brute_intersector(scene), self.config(launch))
        keys = [p.facet_sequence for p in paths]
        assert len(keys) == len(set(keys))
        order = [(p.bounces, p.unfolded_length) for p in paths]
        assert order == sorted(order)

    def test_monotone_capture_in_delta(self):
        scene = self.corridor()
        launch = tessellate(2)
        base = self.config(launch)
        wide = TraceConfig(max_reflections=2, tx=base.tx, rx=base.rx,
                           delta=2 * launch.delta)
        narrow_set = {p.facet_sequence for p in
                      trace_all(launch, scene, brute_intersector(scene), base)}
        wide_set = {p.facet_sequence for p in
                    trace_all(launch, scene, brute_intersector(scene), wide)}
        assert narrow_set <= wide_set

    def test_path_length_consistency(self):
        scene = self.corridor()
        launch = tessellate(2)
        cfg = self.config(launch)
        paths = trace_all(launch, scene, brute_intersector(scene), cfg)
        assert paths
        for p in paths:
            total = sum(np.linalg.norm(b - a) for a, b in zip(p.vertices, p.vertices[1:]))
            assert p.unfolded_length == pytest.approx(total, rel=1e-9)
            assert p.vertices.shape == (p.bounces + 2, 3)
            assert p.unfolded_length > 0
            assert p.miss_distance <= reception_radius(p.unfolded_length, cfg.delta)

    @pytest.mark.parametrize("strategy", list(Strategy))
    def test_acceleration_transparency(self, strategy):
        scene = synth_scene(SceneKind.CORRIDOR, 1, 200)
        launch = tessellate(2)
        cfg = TraceConfig(max_reflections=2, tx=vec3(5, 1.3, 1.5),
                          rx=vec3(14, 2.6, 1.2), delta=launch.delta)
        reference = trace_all(launch, scene, brute_intersector(scene), cfg)
        tree = build(scene, BuildConfig(strategy=strategy, leaf_threshold=8,
                                        alpha=0.7, source=cfg.tx))
        accelerated = trace_all(launch, scene,
                                lambda ray: traverse_closest(tree, ray), cfg)
        assert [p.facet_sequence for p in reference] == \
            [p.facet_sequence for p in accelerated]
        for a, b in zip(reference, accelerated):
            assert np.allclose(a.vertices, b.vertices, atol=1e-6)


class TestDumpPaths:
    def test_format(self):
        rec = PathRecord(facet_sequence=(3, 9), vertices=np.array(
            [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [1.5, 1.0, 0.0]]),
            unfolded_length=2.5, miss_distance=0.125)
        text = dump_paths([rec])
        assert text == ("path 2 2.5 0.125 : 3 9 : "
                        "0.0 0.0 0.0 1.0 0.0 0.0 1.0 1.0 0.0 1.5 1.0 0.0\n")

    def test_empty(self):
        assert dump_paths([]) == ""

    def test_config_validation(self):
        with pytest.raises(ValueError):
            TraceConfig(max_reflections=-1, tx=vec3(0, 0, 0), rx=vec3(1, 0, 0), delta=0.1)
        with pytest.raises(ValueError):
            TraceConfig(max_reflections=0, tx=vec3(0, 0, 0), rx=vec3(1, 0, 0), delta=0.0)
