"""Metrics service: evaluation metrics, aggregation and result files."""

import json
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import numpy as np
import pandas as pd

from qwalk.core.config import settings
from qwalk.core.exceptions import (
    DivisionByZeroException,
    DomainError,
    EmptyInputException,
    ParseException,
    TooLargeForExactException,
)
from qwalk.core.logging import get_logger
from qwalk.models.metrics import MetricReport, MetricStats
from qwalk.models.run import ConcurrencyReport, IterationRow, RunRecord

logger = get_logger(__name__)

MAX_BRUTE_FORCE_VERTICES = 24
CUT_CHUNK = 1 << 16

RECORD_COLUMNS = ["iter", "cycle", "phase", "device", "energy", "esp", "depth", "map"]

WeightedEdges = Sequence[tuple[int, int, float]]


def energy_gap(ideal_min: float, achieved_min: float) -> float:
    """
    Percentage distance of the achieved minimum from the ideal one.

    Raises:
        DivisionByZeroException: If ideal_min is zero
    """
    if ideal_min == 0:
        raise DivisionByZeroException("energy gap is undefined for an ideal minimum of 0")
    return (ideal_min - achieved_min) / ideal_min * 100


def user_cost(c: float, q: int, mean_esp: float, mean_depth: float, iterations: float) -> float:
    """c * q * E[ESP] * E[d] * I."""
    for name, value in (("c", c), ("q", q), ("mean_esp", mean_esp), ("mean_depth", mean_depth), ("iterations", iterations)):
        if value < 0:
            raise DomainError(f"user cost input {name} must be non-negative, got {value}")
    return c * q * mean_esp * mean_depth * iterations


def throughput(k: int, mean_iterations: float) -> float:
    """
    Jobs completed per iteration tick.

    Raises:
        DomainError: If k < 1
        DivisionByZeroException: If mean_iterations is not positive
    """
    if k < 1:
        raise DomainError(f"concurrency must be >= 1, got {k}")
    if mean_iterations <= 0:
        raise DivisionByZeroException("throughput needs a positive mean iteration count")
    return k / mean_iterations


def _edge_arrays(edges: WeightedEdges) -> tuple[np.ndarray, np.ndarray, np.ndarray, int]:
    if not edges:
        raise DomainError("MaxCut needs at least one edge")
    u = np.array([e[0] for e in edges], dtype=np.int64)
    v = np.array([e[1] for e in edges], dtype=np.int64)
    w = np.array([e[2] for e in edges], dtype=float)
    return u, v, w, int(max(u.max(), v.max())) + 1


def cut_values(bits: np.ndarray, edges: WeightedEdges) -> np.ndarray:
    """Cut value of each row of a (samples, n) 0/1 array."""
    u, v, w, _ = _edge_arrays(edges)
    crossing = bits[:, u] != bits[:, v]
    return crossing.astype(float) @ w


def brute_force_max_cut(edges: WeightedEdges) -> float:
    """
    Exact maximum cut over all 2^(|V|-1) partitions (vertex 0 fixed).

    Raises:
        TooLargeForExactException: If the graph has more than 24 vertices
    """
    u, v, w, n = _edge_arrays(edges)
    if n > MAX_BRUTE_FORCE_VERTICES:
        raise TooLargeForExactException(f"brute-force MaxCut limited to {MAX_BRUTE_FORCE_VERTICES} vertices, got {n}")

    total = 1 << max(n - 1, 0)
    shifts = np.arange(max(n - 1, 0), dtype=np.int64)
    best = 0.0
    for start in range(0, total, CUT_CHUNK):
        labels = np.arange(start, min(start + CUT_CHUNK, total), dtype=np.int64)
        # Column 0 is vertex 0, fixed on side 0; column j reads bit j-1
        sides = np.zeros((labels.size, n), dtype=np.uint8)
        sides[:, 1:] = (labels[:, None] >> shifts) & 1
        cut = np.zeros(labels.size)
        for a, b, weight in zip(u, v, w):
            cut += weight * (sides[:, a] != sides[:, b])
        best = max(best, float(cut.max()))
    return best


def approximation_ratio(cut_value: float, edges: WeightedEdges) -> float:
    """Achieved cut over the exact maximum cut."""
    best = brute_force_max_cut(edges)
    if best == 0:
        raise DivisionByZeroException("graph has a maximum cut of 0")
    return cut_value / best


def _stats(series: pd.Series) -> MetricStats:
    if len(series) < 2:
        return MetricStats(mean=float(series.mean()), std=0.0)
    return MetricStats(mean=float(series.mean()), std=float(series.std(ddof=1)))


def records_frame(records: Sequence[RunRecord], ideal_min: float, c: Optional[float] = None) -> pd.DataFrame:
    """One row of per-run metrics per record."""
    c = settings.cost_constant if c is None else c
    frame = pd.DataFrame([
        {
            "seed": r.seed,
            "job_id": r.job_id or "",
            "best_energy": r.best_energy,
            "energy_gap_pct": energy_gap(ideal_min, r.best_energy),
            "iterations": r.iterations,
            "user_cost": user_cost(c, r.qubits, r.mean_esp, r.mean_depth, r.iterations),
            "mean_esp": r.mean_esp,
            "mean_depth": r.mean_depth,
            "mapping_time_s": r.mapping_time_s,
            "cut_value": r.cut_value,
        }
        for r in records
    ])
    return frame


def aggregate(
    records: Sequence[RunRecord],
    ideal_min: float,
    c: Optional[float] = None,
    concurrency: int = 1,
    edges: Optional[WeightedEdges] = None,
    experiment: str = "",
) -> MetricReport:
    """
    Mean and sample standard deviation of the metrics across seeds.

    A single record reports std 0 and is flagged as a single run.

    Raises:
        EmptyInputException: If records is empty
    """
    if not records:
        raise EmptyInputException("cannot aggregate an empty record list")

    frame = records_frame(records, ideal_min, c)
    if edges is not None and frame["cut_value"].notna().all():
        best_cut = brute_force_max_cut(edges)
        frame["approximation_ratio"] = frame["cut_value"] / best_cut

    aggregates = {
        column: _stats(frame[column])
        for column in ("energy_gap_pct", "iterations", "user_cost", "best_energy", "mean_esp", "mean_depth", "mapping_time_s")
    }
    ratio = None
    if "approximation_ratio" in frame:
        aggregates["approximation_ratio"] = _stats(frame["approximation_ratio"])
        ratio = aggregates["approximation_ratio"].mean

    mean_iterations = aggregates["iterations"].mean
    return MetricReport(
        technique=records[0].technique,
        experiment=experiment,
        runs=len(records),
        ideal_min=ideal_min,
        energy_gap_pct=aggregates["energy_gap_pct"].mean,
        iterations=mean_iterations,
        user_cost=aggregates["user_cost"].mean,
        throughput=throughput(concurrency, mean_iterations),
        approximation_ratio=ratio,
        mean_best_energy=aggregates["best_energy"].mean,
        mean_esp=aggregates["mean_esp"].mean,
        mean_depth=aggregates["mean_depth"].mean,
        mean_mapping_time_s=aggregates["mapping_time_s"].mean,
        concurrency=concurrency,
        aggregates=aggregates,
        single_run=len(records) == 1,
    )


def comparison_table(reports: Sequence[MetricReport], baseline: Optional[str] = None) -> pd.DataFrame:
    """One row per report, throughput normalized to the baseline experiment."""
    frame = pd.DataFrame([
        {
            "experiment": r.experiment,
            "technique": r.technique,
            "concurrency": r.concurrency,
            "runs": r.runs,
            "energy_gap_pct": r.energy_gap_pct,
            "energy_gap_std": r.aggregates["energy_gap_pct"].std,
            "iterations": r.iterations,
            "iterations_std": r.aggregates["iterations"].std,
            "user_cost": r.user_cost,
            "user_cost_std": r.aggregates["user_cost"].std,
            "throughput": r.throughput,
            "approximation_ratio": r.approximation_ratio,
            "mean_esp": r.mean_esp,
            "mean_depth": r.mean_depth,
            "mapping_time_s": r.mean_mapping_time_s,
        }
        for r in reports
    ])
    if frame.empty:
        return frame

    reference = frame.iloc[0]
    if baseline is not None:
        match = frame[(frame["experiment"] == baseline) | (frame["technique"] == baseline)]
        if not match.empty:
            reference = match.iloc[0]
    frame["throughput_ratio"] = frame["throughput"] / reference["throughput"]
    frame["user_cost_ratio"] = frame["user_cost"] / reference["user_cost"] if reference["user_cost"] else np.nan
    return frame


# Result files


def write_records_csv(record: RunRecord, path: Union[str, Path]) -> None:
    """Per-iteration CSV of a run."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame(
        [[r.iter, r.cycle, r.phase, r.device, r.energy, r.map_esp, r.circuit_depth, r.map] for r in record.rows],
        columns=RECORD_COLUMNS,
    )
    frame.to_csv(path, index=False)


def read_records_csv(path: Union[str, Path]) -> list[IterationRow]:
    """Parse a records CSV written by write_records_csv."""
    path = Path(path)
    try:
        frame = pd.read_csv(path, dtype={"device": str, "map": str})
    except FileNotFoundError:
        raise ParseException(f"Records file not found: {path}")
    missing = set(RECORD_COLUMNS) - set(frame.columns)
    if missing:
        raise ParseException(f"Records file {path} lacks columns {sorted(missing)}")
    return [
        IterationRow(
            iter=int(row["iter"]),
            cycle=int(row["cycle"]),
            phase=int(row["phase"]),
            device=row["device"],
            energy=float(row["energy"]),
            map_esp=float(row["esp"]),
            circuit_depth=int(row["depth"]),
            map=row["map"],
        )
        for row in frame.to_dict(orient="records")
    ]


def write_summary_json(
    report: MetricReport,
    records: Iterable[RunRecord],
    path: Union[str, Path],
    concurrency: Optional[Sequence[ConcurrencyReport]] = None,
) -> None:
    """Experiment summary: the aggregated report plus per-seed run summaries."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    summary = {
        "report": report.model_dump(mode="json"),
        "runs": [
            {
                "seed": r.seed,
                "job_id": r.job_id,
                "best_energy": r.best_energy,
                "iterations": r.iterations,
                "terminated_by": r.terminated_by,
                "mean_esp": r.mean_esp,
                "mean_depth": r.mean_depth,
                "cut_value": r.cut_value,
                "maps_used": [m.model_dump(mode="json") for m in r.maps_used],
                "phases": [p.model_dump(mode="json") for p in r.phases],
            }
            for r in records
        ],
    }
    if concurrency:
        summary["concurrency"] = [c.model_dump(mode="json") for c in concurrency]
    with open(path, "w", encoding="utf-8") as f:
        json.dump(summary, f, indent=2)
        f.write("\n")
