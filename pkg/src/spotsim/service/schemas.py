"""Request/response models for the HTTP service.

File-based inputs travel as CSV/scenario text inside the request body so a
remote service needs no shared filesystem; the CLI reads local files and
fills these models.
"""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, Field


class CharacterizeRequest(BaseModel):
    loadtest_csv: str
    slo_min_rps: float = Field(gt=0)
    failure_threshold_pct: float = Field(default=2.0, gt=0)
    cpu_drop_pct: float = Field(default=5.0, gt=0)


class CharacterizeResponse(BaseModel):
    max_rps_per_pod: float
    inflection_index: int
    initial_pods: int
    failure_threshold_used: float


class ForecastRequest(BaseModel):
    history_csv: str
    instance_type: str
    zone: str | None = None  # default: lexicographically first zone with data
    horizon_hours: int = Field(ge=1)
    on_demand_usd_hr: float | None = Field(default=None, gt=0)  # enables bid output
    margin_fraction: float = 0.05
    cap_fraction: float = 0.9


class ForecastPoint(BaseModel):
    timestamp: int
    mean: float
    lower95: float
    upper95: float


class ForecastResponse(BaseModel):
    instance_type: str
    zone: str
    intercept: float
    slope_per_hour: float
    residual_sigma: float
    points: list[ForecastPoint]
    bid_usd_hr: float | None = None


class OptimizeRequest(BaseModel):
    catalog_csv: str
    required_pods: int = Field(ge=1)
    pod_cpu_millicores: int = Field(gt=0)
    pod_mem_mib: int = Field(gt=0)
    prices_csv: str | None = None  # None -> on-demand prices from the catalog
    algorithm: Literal["brute", "greedy", "nsga2"] = "nsga2"
    seed: int = 0
    max_per_type: int = Field(default=10, ge=1)
    min_nodes: int = Field(default=1, ge=0)
    exclude: list[str] = Field(default_factory=list)
    population: int = 64
    generations: int = 100
    crossover_p: float = 0.9
    mutation_p: float | None = None
    fixed_overhead_usd_hr: float = Field(default=0.0, ge=0)


class FrontMember(BaseModel):
    cost_usd_hr: float
    node_count: int
    allocation: dict[str, int]


class OptimizeResponse(BaseModel):
    front: list[FrontMember]
    selected: FrontMember
    price_source: str


class SimulateRequest(BaseModel):
    scenario: str
    files: dict[str, str] = Field(default_factory=dict)
    policy: str = "spotkube"
    seed: int = 0


class SeriesRow(BaseModel):
    time_s: float
    nodes: int
    pods: int
    avg_cpu_util: float
    required_pods: int
    offered_rps: float
    accrued_cost_usd: float


class DecisionRow(BaseModel):
    time_s: float
    decision: str


class NodeLogRow(BaseModel):
    node_id: str
    instance_type: str
    zone: str
    requested_t: float
    active_from: float | None
    active_to: float


class SimulateSummary(BaseModel):
    policy: str
    seed: int
    duration_s: int
    total_cost_usd: float
    cost_by_type: dict[str, float]
    slo_violation_s: float
    terminations_injected: int
    terminations_gracefully_handled: int
    reoptimizations: int


class SimulateResponse(BaseModel):
    summary: SimulateSummary
    series: list[SeriesRow]
    decisions: list[DecisionRow]
    node_log: list[NodeLogRow]


class CompareRequest(BaseModel):
    scenario: str
    files: dict[str, str] = Field(default_factory=dict)
    seed: int = 0
    baseline: str = "baseline_single_type"


class CompareResponse(BaseModel):
    spotkube: SimulateResponse
    baseline: SimulateResponse
    savings_pct: float


class ErrorBody(BaseModel):
    category: str
    detail: str
