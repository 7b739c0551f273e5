"""Pydantic models for metric reports."""

from typing import Optional

from pydantic import BaseModel, Field


class MetricStats(BaseModel):
    """Mean and sample standard deviation of one metric across seeds."""

    mean: float
    std: float = Field(..., ge=0)


class MetricReport(BaseModel):
    """Aggregated metrics of one technique over its seeds."""

    technique: str
    experiment: str = ""
    runs: int = Field(..., ge=1)
    ideal_min: float
    energy_gap_pct: float
    iterations: float
    user_cost: float
    throughput: float
    approximation_ratio: Optional[float] = None
    mean_best_energy: float
    mean_esp: float
    mean_depth: float
    mean_mapping_time_s: float
    concurrency: int = 1
    aggregates: dict[str, MetricStats]
    single_run: bool = False
