"""FastAPI service wrapping the tracing/benchmark core.

Stateless: every request carries its scene (inline mesh text or a synth
recipe) and configuration.  Core validation errors surface as HTTP 422.
"""
from __future__ import annotations

from fastapi import FastAPI
from fastapi.responses import JSONResponse, PlainTextResponse

from .. import __version__, bench
from ..bvh import build, dump_tree
from ..scene import RunConfig, SceneKind, parse_config_text, parse_mesh, synth_scene, serialize_mesh
from ..tracer import dump_paths
from .models import (CompareRequest, CompareResponse, ConfigModel, DumpPathsRequest,
                     DumpTreeRequest, HealthResponse, PathDiffModel, PathModel,
                     RunRequest, RunResponse, SceneSpec, StatsModel, SweepRequest,
                     SweepResponse, SweepRowModel, SynthRequest, SynthResponse)


def _load_scene(spec: SceneSpec):
    if spec.synth is not None:
        scene = synth_scene(SceneKind(spec.synth.kind), spec.synth.seed,
                            spec.synth.facet_budget)
    else:
        scene = parse_mesh(spec.mesh_text, name=spec.name or "mesh")
    if spec.name:
        scene.name = spec.name
    return scene


def _resolve_config(config: ConfigModel | None, config_text: str | None) -> RunConfig:
    values: dict = {}
    if config_text:
        values.update(parse_config_text(config_text))
    if config is not None:
        values.update({k: v for k, v in config.model_dump().items() if v is not None})
    for required in ("tx", "rx"):
        if required not in values:
            raise ValueError(f"{required}: missing")
    return RunConfig(**values)


def _stats_model(stats) -> StatsModel:
    return StatsModel(**stats.as_dict())


def create_app() -> FastAPI:
    app = FastAPI(title="raybvh", version=__version__,
                  description="BVH-accelerated specular ray tracing for "
                              "radio propagation path finding")

    @app.exception_handler(ValueError)
    async def _value_error(request, exc: ValueError):
        return JSONResponse(status_code=422, content={"detail": str(exc)})

    @app.get("/health", response_model=HealthResponse)
    def health():
        return HealthResponse(status="ok", version=__version__)

    @app.post("/synth", response_model=SynthResponse)
    def synth(req: SynthRequest):
        scene = synth_scene(SceneKind(req.synth.kind), req.synth.seed,
                            req.synth.facet_budget)
        return SynthResponse(name=scene.name, facet_count=len(scene),
                             mesh_text=serialize_mesh(scene))

    @app.post("/run", response_model=None)
    def run(req: RunRequest):
        scene = _load_scene(req.scene)
        config = _resolve_config(req.config, req.config_text)
        strategy = req.strategy or config.strategy
        paths, stats = bench.run(scene, config, strategy)
        if req.format == "csv":
            return PlainTextResponse(bench.run_csv(scene.name, strategy, stats))
        return RunResponse(
            scene=scene.name, facet_count=len(scene), strategy=strategy,
            stats=_stats_model(stats),
            paths=[PathModel(facet_sequence=list(p.facet_sequence),
                             vertices=[[float(c) for c in v] for v in p.vertices],
                             unfolded_length=p.unfolded_length,
                             miss_distance=p.miss_distance) for p in paths])

    @app.post("/compare", response_model=None)
    def compare(req: CompareRequest):
        scene = _load_scene(req.scene)
        config = _resolve_config(req.config, req.config_text)
        report = bench.compare(scene, config, req.strategies, repeats=req.repeats)
        if req.format == "csv":
            return PlainTextResponse(bench.compare_csv(report))
        return CompareResponse(
            scene=report.scene, baseline=report.baseline,
            stats={k: _stats_model(v) for k, v in report.stats.items()},
            path_diff={k: PathDiffModel(
                only_in_baseline=[list(s) for s in d.only_in_baseline],
                only_in_candidate=[list(s) for s in d.only_in_candidate],
                common=d.common) for k, d in report.path_diff.items()},
            speedup_percent=report.speedup_percent,
            counter_improvement_percent=report.counter_improvement_percent)

    @app.post("/sweep", response_model=None)
    def sweep(req: SweepRequest):
        scene = _load_scene(req.scene)
        config = _resolve_config(req.config, req.config_text)
        rows = bench.sweep_rays(scene, config, req.levels, req.strategies,
                                repeats=req.repeats)
        if req.format == "csv":
            return PlainTextResponse(bench.sweep_csv(rows))
        return SweepResponse(
            scene=scene.name,
            rows=[SweepRowModel(level=r.level, ray_count=r.ray_count,
                                stats={k: _stats_model(v) for k, v in r.stats.items()})
                  for r in rows])

    @app.post("/dump-tree", response_class=PlainTextResponse)
    def dump_tree_endpoint(req: DumpTreeRequest):
        scene = _load_scene(req.scene)
        config = _resolve_config(req.config, req.config_text)
        tree = build(scene, bench.build_config(config, req.strategy))
        return PlainTextResponse(dump_tree(tree))

    @app.post("/dump-paths", response_class=PlainTextResponse)
    def dump_paths_endpoint(req: DumpPathsRequest):
        scene = _load_scene(req.scene)
        config = _resolve_config(req.config, req.config_text)
        strategy = req.strategy or config.strategy
        paths, _ = bench.run(scene, config, strategy)
        return PlainTextResponse(dump_paths(paths))

    return app


app = create_app()
