"""Request/response schemas for the tracing service."""
from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field, model_validator

StrategyName = Literal["brute", "median", "sah", "hybrid"]
TreeStrategyName = Literal["median", "sah", "hybrid"]
OutputFormat = Literal["json", "csv"]


class SynthSpec(BaseModel):
    kind: Literal["random_boxes", "two_clusters", "corridor", "skewed_city"]
    seed: int = 1
    facet_budget: int = Field(default=500, ge=1)


class SceneSpec(BaseModel):
    """Scene payload: inline mesh text or a synthetic-scene recipe."""
    mesh_text: Optional[str] = None
    synth: Optional[SynthSpec] = None
    name: Optional[str] = None

    @model_validator(mode="after")
    def _exactly_one_source(self):
        if (self.mesh_text is None) == (self.synth is None):
            raise ValueError("provide exactly one of mesh_text or synth")
        return self


class ConfigModel(BaseModel):
    """Run parameters; unset fields fall back to config_text values, then defaults."""
    tx: Optional[tuple[float, float, float]] = None
    rx: Optional[tuple[float, float, float]] = None
    alpha: Optional[float] = None
    leaf_threshold: Optional[int] = None
    tessellation_level: Optional[int] = None
    max_reflections: Optional[int] = None
    strategy: Optional[StrategyName] = None
    frequency_ghz: Optional[float] = None
    seed: Optional[int] = None
    bins: Optional[int] = None
    t_i: Optional[float] = None
    t_trav: Optional[float] = None
    normalize_distance: Optional[bool] = None
    path_length_limit: Optional[float] = None


class RunRequest(BaseModel):
    scene: SceneSpec
    config: Optional[ConfigModel] = None
    config_text: Optional[str] = None
    strategy: Optional[StrategyName] = None  # defaults to the config strategy
    format: OutputFormat = "json"


class CompareRequest(BaseModel):
    scene: SceneSpec
    config: Optional[ConfigModel] = None
    config_text: Optional[str] = None
    strategies: list[StrategyName] = Field(min_length=2)
    repeats: int = Field(default=3, ge=1)
    format: OutputFormat = "json"


class SweepRequest(BaseModel):
    scene: SceneSpec
    config: Optional[ConfigModel] = None
    config_text: Optional[str] = None
    levels: list[int] = Field(min_length=1)
    strategies: list[StrategyName] = Field(min_length=1)
    repeats: int = Field(default=1, ge=1)
    format: OutputFormat = "json"


class DumpTreeRequest(BaseModel):
    scene: SceneSpec
    config: Optional[ConfigModel] = None
    config_text: Optional[str] = None
    strategy: TreeStrategyName = "sah"


class DumpPathsRequest(BaseModel):
    scene: SceneSpec
    config: Optional[ConfigModel] = None
    config_text: Optional[str] = None
    strategy: Optional[StrategyName] = None


class SynthRequest(BaseModel):
    synth: SynthSpec


class StatsModel(BaseModel):
    ray_aabb_tests: int
    ray_triangle_tests: int
    nodes_visited: int
    build_time: float
    trace_time: float
    rays_launched: int
    paths_captured: int


class PathModel(BaseModel):
    facet_sequence: list[int]
    vertices: list[list[float]]
    unfolded_length: float
    miss_distance: float


class RunResponse(BaseModel):
    scene: str
    facet_count: int
    strategy: StrategyName
    stats: StatsModel
    paths: list[PathModel]


class PathDiffModel(BaseModel):
    only_in_baseline: list[list[int]]
    only_in_candidate: list[list[int]]
    common: int


class CompareResponse(BaseModel):
    scene: str
    baseline: StrategyName
    stats: dict[str, StatsModel]
    path_diff: dict[str, PathDiffModel]
    speedup_percent: dict[str, float]
    counter_improvement_percent: dict[str, float]


class SweepRowModel(BaseModel):
    level: int
    ray_count: int
    stats: dict[str, StatsModel]


class SweepResponse(BaseModel):
    scene: str
    rows: list[SweepRowModel]


class SynthResponse(BaseModel):
    name: str
    facet_count: int
    mesh_text: str


class HealthResponse(BaseModel):
    status: str
    version: str
