"""Benchmark and verification harness: run strategies, compare counters and
timings, diff path sets.

Counters (deterministic, machine-independent) are the primary comparison
metric; wall-clock timings are medians of repeated runs on the monotonic
clock, with build and trace reported separately because the hybrid tree is
rebuilt per transmitter position.
"""
from __future__ import annotations

import io
import json
from dataclasses import dataclass, field
from time import perf_counter

from .bvh import BuildConfig, BvhTree, Strategy, brute_force_closest, build, traverse_closest
from .launch import tessellate
from .scene import RunConfig, Scene
from .stats import RunStats
from .tracer import PathRecord, TraceConfig, trace_all

STRATEGIES = ("brute", "median", "sah", "hybrid")

# Columns whose values depend on wall-clock time; everything else in the CSV
# output is bit-reproducible across runs with identical inputs.
TIMING_COLUMNS = ("build_time_s", "trace_time_s", "speedup_percent")


def build_config(config: RunConfig, strategy: str) -> BuildConfig:
    """BuildConfig for a tree strategy; the transmitter is the distance source."""
    return BuildConfig(strategy=Strategy(strategy), alpha=config.alpha,
                       t_i=config.t_i, t_trav=config.t_trav,
                       leaf_threshold=config.leaf_threshold, source=config.tx,
                       bins=config.bins, normalize_distance=config.normalize_distance)


def run(scene: Scene, config: RunConfig, strategy: str) -> tuple[list[PathRecord], RunStats]:
    """Build (unless brute), launch, trace, dedup; deterministic paths/counters."""
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")
    stats = RunStats()
    launch = tessellate(config.tessellation_level)
    if strategy == "brute":
        def intersector(ray):
            return brute_force_closest(scene, ray, stats)
    else:
        t0 = perf_counter()
        tree = build(scene, build_config(config, strategy))
        stats.build_time = perf_counter() - t0

        def intersector(ray):
            return traverse_closest(tree, ray, stats)
    tcfg = TraceConfig(max_reflections=config.max_reflections, tx=config.tx,
                       rx=config.rx, delta=launch.delta,
                       path_length_limit=config.path_length_limit)
    t0 = perf_counter()
    paths = trace_all(launch, scene, intersector, tcfg, stats)
    stats.trace_time = perf_counter() - t0
    return paths, stats


@dataclass
class PathDiff:
    only_in_baseline: list[tuple[int, ...]]
    only_in_candidate: list[tuple[int, ...]]
    common: int

    @property
    def empty(self) -> bool:
        return not self.only_in_baseline and not self.only_in_candidate


def diff_paths(base: list[PathRecord], cand: list[PathRecord]) -> PathDiff:
    base_keys = {p.facet_sequence for p in base}
    cand_keys = {p.facet_sequence for p in cand}
    return PathDiff(only_in_baseline=sorted(base_keys - cand_keys),
                    only_in_candidate=sorted(cand_keys - base_keys),
                    common=len(base_keys & cand_keys))


@dataclass
class ComparisonReport:
    scene: str
    baseline: str
    stats: dict[str, RunStats]                     # insertion order = strategy order
    path_diff: dict[str, PathDiff]                 # vs baseline, baseline omitted
    speedup_percent: dict[str, float]              # trace-time speedup vs baseline
    counter_improvement_percent: dict[str, float]  # (nodes+tri tests) vs baseline
    paths: dict[str, list[PathRecord]] = field(default_factory=dict, repr=False)


def _median(values: list[float]) -> float:
    ordered = sorted(values)
    return ordered[len(ordered) // 2]


def compare(scene: Scene, config: RunConfig, strategies, repeats: int = 3) -> ComparisonReport:
    """Run every strategy (timings: median of `repeats`), diff path sets
    against the first strategy and report speedups."""
    strategies = list(strategies)
    if len(strategies) < 2:
        raise ValueError("compare needs at least 2 strategies")
    stats: dict[str, RunStats] = {}
    paths: dict[str, list[PathRecord]] = {}
    for strategy in strategies:
        best_paths = None
        current = None
        builds, traces = [], []
        for _ in range(max(1, repeats)):
            p, s = run(scene, config, strategy)
            best_paths, current = p, s
            builds.append(s.build_time)
            traces.append(s.trace_time)
        current.build_time = _median(builds)
        current.trace_time = _median(traces)
        stats[strategy] = current
        paths[strategy] = best_paths
    baseline = strategies[0]
    base_stats = stats[baseline]
    diffs: dict[str, PathDiff] = {}
    speedup: dict[str, float] = {}
    counters: dict[str, float] = {}
    for strategy in strategies[1:]:
        diffs[strategy] = diff_paths(paths[baseline], paths[strategy])
        t_base = base_stats.trace_time
        speedup[strategy] = 100.0 * (t_base - stats[strategy].trace_time) / t_base if t_base > 0 else 0.0
        c_base = base_stats.counter_total()
        c_cand = stats[strategy].counter_total()
        counters[strategy] = 100.0 * (c_base - c_cand) / c_base if c_base > 0 else 0.0
    return ComparisonReport(scene=scene.name, baseline=baseline, stats=stats,
                            path_diff=diffs, speedup_percent=speedup,
                            counter_improvement_percent=counters, paths=paths)


@dataclass
class SweepRow:
    level: int
    ray_count: int
    stats: dict[str, RunStats]


def sweep_rays(scene: Scene, config: RunConfig, levels, strategies=None,
               repeats: int = 3) -> list[SweepRow]:
    """One comparison per tessellation level, rows ordered by ray count."""
    strategies = list(strategies) if strategies else [config.strategy]
    rows = []
    for level in sorted(levels):
        cfg = RunConfig(**{**_config_dict(config), "tessellation_level": level})
        row_stats: dict[str, RunStats] = {}
        for strategy in strategies:
            builds, traces = [], []
            current = None
            for _ in range(max(1, repeats)):
                _, s = run(scene, cfg, strategy)
                current = s
                builds.append(s.build_time)
                traces.append(s.trace_time)
            current.build_time = _median(builds)
            current.trace_time = _median(traces)
            row_stats[strategy] = current
        rows.append(SweepRow(level=level, ray_count=10 * 4 ** level + 2, stats=row_stats))
    return rows


def _config_dict(config: RunConfig) -> dict:
    return {"tx": tuple(config.tx), "rx": tuple(config.rx), "alpha": config.alpha,
            "leaf_threshold": config.leaf_threshold,
            "tessellation_level": config.tessellation_level,
            "max_reflections": config.max_reflections, "strategy": config.strategy,
            "frequency_ghz": config.frequency_ghz, "seed": config.seed,
            "bins": config.bins, "t_i": config.t_i, "t_trav": config.t_trav,
            "normalize_distance": config.normalize_distance,
            "path_length_limit": config.path_length_limit}


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


_STAT_COLUMNS = ("rays_launched", "paths_captured", "ray_aabb_tests",
                 "ray_triangle_tests", "nodes_visited", "counter_total")


def _stat_fields(stats: RunStats) -> list[str]:
    values = [stats.rays_launched, stats.paths_captured, stats.ray_aabb_tests,
              stats.ray_triangle_tests, stats.nodes_visited, stats.counter_total()]
    return [_fmt(v) for v in values]


def run_csv(scene_name: str, strategy: str, stats: RunStats) -> str:
    """Single-run CSV: one header, one row."""
    header = ("scene", "strategy", *_STAT_COLUMNS, "build_time_s", "trace_time_s")
    row = [scene_name, strategy, *_stat_fields(stats),
           _fmt(stats.build_time), _fmt(stats.trace_time)]
    return ",".join(header) + "\n" + ",".join(row) + "\n"


def compare_csv(report: ComparisonReport) -> str:
    """Comparison CSV, one row per strategy; timing-derived columns
    (build_time_s, trace_time_s, speedup_percent) come last."""
    out = io.StringIO()
    out.write("scene,strategy,baseline," + ",".join(_STAT_COLUMNS)
              + ",counter_improvement_percent,paths_only_in_baseline,paths_only_here,paths_common"
              + ",build_time_s,trace_time_s,speedup_percent\n")
    for strategy, stats in report.stats.items():
        diff = report.path_diff.get(strategy)
        fields = [report.scene, strategy, report.baseline]
        fields += _stat_fields(stats)
        fields.append(_fmt(report.counter_improvement_percent.get(strategy, 0.0)))
        if diff is None:  # the baseline row diffs against itself
            fields += ["0", "0", str(stats.paths_captured)]
        else:
            fields += [str(len(diff.only_in_baseline)), str(len(diff.only_in_candidate)),
                       str(diff.common)]
        fields += [_fmt(stats.build_time), _fmt(stats.trace_time),
                   _fmt(report.speedup_percent.get(strategy, 0.0))]
        out.write(",".join(fields) + "\n")
    return out.getvalue()


def sweep_csv(rows: list[SweepRow]) -> str:
    """Sweep CSV, one row per strategy x level."""
    out = io.StringIO()
    out.write("level,ray_count,strategy," + ",".join(_STAT_COLUMNS)
              + ",build_time_s,trace_time_s\n")
    for row in rows:
        for strategy, stats in row.stats.items():
            fields = [str(row.level), str(row.ray_count), strategy]
            fields += _stat_fields(stats)
            fields += [_fmt(stats.build_time), _fmt(stats.trace_time)]
            out.write(",".join(fields) + "\n")
    return out.getvalue()


def report_json(report: ComparisonReport) -> str:
    doc = {
        "scene": report.scene,
        "baseline": report.baseline,
        "stats": {k: v.as_dict() for k, v in report.stats.items()},
        "path_diff": {k: {"only_in_baseline": [list(s) for s in d.only_in_baseline],
                          "only_in_candidate": [list(s) for s in d.only_in_candidate],
                          "common": d.common}
                      for k, d in report.path_diff.items()},
        "speedup_percent": report.speedup_percent,
        "counter_improvement_percent": report.counter_improvement_percent,
    }
    return json.dumps(doc, indent=2) + "\n"


def sweep_json(rows: list[SweepRow]) -> str:
    doc = [{"level": r.level, "ray_count": r.ray_count,
            "stats": {k: v.as_dict() for k, v in r.stats.items()}} for r in rows]
    return json.dumps(doc, indent=2) + "\n"
