"""Experiment commands: run a suite, and multi-programming sweeps."""

import argparse
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional

import pandas as pd

from qwalk.cli.dependencies import build_problem, load_suite, resolve_devices
from qwalk.core.exceptions import ConfigException, ExperimentFailureException
from qwalk.core.logging import get_logger
from qwalk.models.device import DeviceSnapshot
from qwalk.models.experiment import ExperimentConfig, ExperimentSuite
from qwalk.models.metrics import MetricReport
from qwalk.models.run import ConcurrencyReport, Problem, RunRecord, TechniqueConfig
from qwalk.services import metrics_service
from qwalk.services.runner_service import run_concurrent, run_technique, select_available
from qwalk.services.simulator_service import exact_ground_energy

logger = get_logger(__name__)


class PreparedExperiment:
    """An experiment with its problem, devices and ideal minimum resolved."""

    def __init__(self, config: ExperimentConfig, problem: Problem, devices: list[DeviceSnapshot], ideal_min: float):
        self.config = config
        self.problem = problem
        self.devices = devices
        self.ideal_min = ideal_min
        self.technique: TechniqueConfig = config.technique_config()

    @property
    def name(self) -> str:
        return self.config.name

    def devices_for(self, seed: int) -> list[DeviceSnapshot]:
        """Devices of one repetition: the sampled available subset, if any."""
        devices = self.devices
        if self.config.available is not None:
            devices = select_available(devices, self.config.available, seed)
        return devices[: self.technique.devices_required]


def _ideal_minimum(problem: Problem) -> float:
    if problem.edges is not None:
        return -metrics_service.brute_force_max_cut(problem.edges)
    return exact_ground_energy(problem.hamiltonian)


def prepare_suite(
    suite: ExperimentSuite, base_dir: Path, seed: Optional[int] = None, shots: Optional[int] = None,
) -> list[PreparedExperiment]:
    """
    Resolve every experiment before anything runs or is written.

    Raises:
        ConfigException, ParseException, ValidationException: On bad inputs
        TooManyQubitsException: If a benchmark is too large for its oracle
    """
    prepared = []
    for config in suite.experiments:
        update = {}
        if seed is not None:
            update["seeds"] = [seed]
        if shots is not None:
            update["shots"] = shots
        if update:
            config = config.model_copy(update=update)

        problem = build_problem(config.benchmark, base_dir)
        devices = resolve_devices(config.snapshots, base_dir)
        for device in devices:
            if device.num_qubits < problem.n:
                raise ConfigException(
                    f"experiment '{config.name}': device '{device.name}' has {device.num_qubits} qubits, "
                    f"benchmark needs {problem.n}"
                )
        ideal_min = _ideal_minimum(problem)
        logger.info(f"Prepared '{config.name}': {config.technique} on {problem.name} ({problem.n} qubits), ideal {ideal_min:.6f}")
        prepared.append(PreparedExperiment(config, problem, devices, ideal_min))
    return prepared


def _run_seed(experiment: PreparedExperiment, seed: int) -> tuple[list[RunRecord], Optional[ConcurrencyReport]]:
    try:
        devices = experiment.devices_for(seed)
        k = experiment.config.concurrency
        if k > 1:
            records, report = run_concurrent([experiment.problem] * k, experiment.technique, seed, devices)
            return records, report
        return [run_technique(experiment.problem, experiment.technique, seed, devices)], None
    except Exception as e:
        raise ExperimentFailureException(experiment.name, seed, e)


def run_experiment(
    experiment: PreparedExperiment, parallel: int = 1,
) -> tuple[list[RunRecord], list[ConcurrencyReport]]:
    """Run all seeds of one experiment, in seed order."""
    seeds = experiment.config.seeds
    if parallel > 1 and len(seeds) > 1:
        with ThreadPoolExecutor(max_workers=parallel) as pool:
            results = list(pool.map(lambda s: _run_seed(experiment, s), seeds))
    else:
        results = [_run_seed(experiment, s) for s in seeds]

    records = [r for batch, _ in results for r in batch]
    reports = [report for _, report in results if report is not None]
    return records, reports


def _record_name(name: str, record: RunRecord, concurrent: bool) -> str:
    if concurrent:
        return f"{name}__seed{record.seed}__{record.job_id}.csv"
    return f"{name}__seed{record.seed}.csv"


def write_experiment(
    experiment: PreparedExperiment, records: list[RunRecord], reports: list[ConcurrencyReport], out_dir: Path,
    name: Optional[str] = None,
) -> MetricReport:
    """Records CSVs and summary JSON of one experiment; returns its metrics."""
    name = name or experiment.name
    concurrent = experiment.config.concurrency > 1
    for record in records:
        metrics_service.write_records_csv(record, out_dir / _record_name(name, record, concurrent))

    report = metrics_service.aggregate(
        records,
        experiment.ideal_min,
        concurrency=experiment.config.concurrency,
        edges=experiment.problem.edges,
        experiment=name,
    )
    metrics_service.write_summary_json(report, records, out_dir / f"{name}__summary.json", reports)
    logger.info(
        f"'{name}': gap {report.energy_gap_pct:.3f}% iterations {report.iterations:.1f} "
        f"user cost {report.user_cost:.4g} over {report.runs} runs"
    )
    return report


def _out_dir(args: argparse.Namespace, suite: ExperimentSuite, config_path: Path) -> Path:
    if args.out:
        return Path(args.out)
    out = Path(suite.output_dir)
    return out if out.is_absolute() else config_path.parent / out


def _load(args: argparse.Namespace) -> tuple[ExperimentSuite, list[PreparedExperiment], Path, int]:
    config_path = Path(args.config)
    suite = load_suite(config_path)
    prepared = prepare_suite(suite, config_path.parent, seed=args.seed, shots=args.shots)
    parallel = args.parallel if args.parallel is not None else suite.parallel_seeds
    return suite, prepared, _out_dir(args, suite, config_path), parallel


def cmd_run(args: argparse.Namespace) -> int:
    """Run every experiment of a suite and write records, summaries and the comparison table."""
    suite, prepared, out_dir, parallel = _load(args)

    reports = []
    for experiment in prepared:
        records, concurrency = run_experiment(experiment, parallel)
        reports.append(write_experiment(experiment, records, concurrency, out_dir))

    table = metrics_service.comparison_table(reports, suite.baseline)
    out_dir.mkdir(parents=True, exist_ok=True)
    table.to_csv(out_dir / "comparison.csv", index=False)
    logger.info(f"Wrote {len(prepared)} experiment summaries and comparison table to {out_dir}")
    return 0


def cmd_multiprog(args: argparse.Namespace) -> int:
    """Run each NEST experiment at concurrency 1..k and tabulate throughput and gap against k."""
    suite, prepared, out_dir, parallel = _load(args)
    if args.k < 1:
        raise ConfigException(f"k must be >= 1, got {args.k}")
    for experiment in prepared:
        if experiment.config.technique != "NEST":
            raise ConfigException(f"multiprog runs NEST experiments only, '{experiment.name}' is {experiment.config.technique}")

    rows = []
    for experiment in prepared:
        baseline_throughput = None
        for k in range(1, args.k + 1):
            variant = PreparedExperiment(
                experiment.config.model_copy(update={"concurrency": k}),
                experiment.problem,
                experiment.devices,
                experiment.ideal_min,
            )
            records, concurrency = run_experiment(variant, parallel)
            name = f"{experiment.name}__k{k}"
            report = write_experiment(variant, records, concurrency, out_dir, name=name)
            if baseline_throughput is None:
                baseline_throughput = report.throughput
            rows.append({
                "experiment": experiment.name,
                "k": k,
                "runs": report.runs,
                "mean_iterations": report.iterations,
                "throughput": report.throughput,
                "throughput_ratio": report.throughput / baseline_throughput,
                "energy_gap_pct": report.energy_gap_pct,
                "energy_gap_std": report.aggregates["energy_gap_pct"].std,
                "disjoint_every_tick": all(c.disjoint_every_tick for c in concurrency),
            })

    out_dir.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(rows).to_csv(out_dir / "multiprog.csv", index=False)
    logger.info(f"Wrote multi-programming table for k=1..{args.k} to {out_dir}")
    return 0
