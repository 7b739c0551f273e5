"""Runner service: NEST, BestMap, Qoncord and multi-programmed executions."""

import time
from typing import Optional, Sequence

import numpy as np

from qwalk.core.exceptions import ConfigException, InvalidBudgetException, NoFeasibleMapException
from qwalk.core.logging import get_logger
from qwalk.models.device import DeviceSnapshot
from qwalk.models.mapping import CircuitMap
from qwalk.models.optimizer import DefaultTol, OptimizerConfig, OptTrace, SlidingWindow
from qwalk.models.run import (
    ConcurrencyReport,
    IterationRow,
    MapUse,
    PhaseInfo,
    Problem,
    RunRecord,
    TechniqueConfig,
)
from qwalk.models.schedule import CyclePlan, EspSchedule
from qwalk.models.simulation import NoiseBinding
from qwalk.services import metrics_service
from qwalk.services.fidelity_service import EspScorer, qoncord_fidelity, qoncord_params
from qwalk.services.mapping_service import (
    ZoneAllocator,
    allocate_zones,
    best_map,
    enumerate_seed_maps,
    jump_to_target,
    walk_step,
)
from qwalk.services.optimizer_service import initial_params, minimize
from qwalk.services.schedule_service import default_sigma_bounds, discretize
from qwalk.services.simulator_service import bind_noise, expectation, sample_bitstrings

logger = get_logger(__name__)

# Per-evaluation shot seeds are seed * EVAL_STRIDE + evaluation index
EVAL_STRIDE = 1_000_000
AVAILABILITY_STREAM = 7


def select_available(pool: Sequence, k: int, seed: int) -> list:
    """
    Devices available to one repetition: k of the pool, drawn from the seed.

    The sampled devices keep their pool order.
    """
    if k > len(pool):
        raise ConfigException(f"cannot pick {k} available devices from a pool of {len(pool)}")
    if k == len(pool):
        return list(pool)
    rng = np.random.default_rng([seed, AVAILABILITY_STREAM])
    picked = sorted(rng.choice(len(pool), size=k, replace=False).tolist())
    return [pool[i] for i in picked]


class _MapContext:
    """Objective, noise and routed circuit of one problem on one device."""

    def __init__(self, problem: Problem, device: DeviceSnapshot, cfg: TechniqueConfig, seed: int):
        self.problem = problem
        self.device = device
        self.cfg = cfg
        self.seed = seed
        self.scorer = EspScorer(problem.circuit, device)
        self._noise: dict[tuple[int, ...], Optional[NoiseBinding]] = {}

    def noise(self, circuit_map: CircuitMap) -> Optional[NoiseBinding]:
        if not self.cfg.noisy:
            return None
        key = circuit_map.assignment
        if key not in self._noise:
            self._noise[key] = bind_noise(self.device, circuit_map)
        return self._noise[key]

    def objective(self, circuit_map: CircuitMap, trace: OptTrace):
        routed = self.scorer.routed(circuit_map)
        noise = self.noise(circuit_map)

        def energy(params: np.ndarray) -> float:
            eval_seed = self.seed * EVAL_STRIDE + trace.iteration_count
            return expectation(routed, params, self.problem.hamiltonian, self.cfg.shots, eval_seed, noise).value

        return energy

    def rows(self, trace: OptTrace, start: int, circuit_map: CircuitMap, cycle: int, phase: int) -> list[IterationRow]:
        esp_value = self.scorer.esp(circuit_map)
        depth = self.scorer.depth(circuit_map)
        return [
            IterationRow(
                iter=i + 1,
                cycle=cycle,
                phase=phase,
                device=self.device.name,
                energy=trace.evals[i].value,
                map=str(circuit_map),
                map_esp=esp_value,
                circuit_depth=depth,
            )
            for i in range(start, trace.iteration_count)
        ]

    def best_cut(self, circuit_map: CircuitMap, params) -> Optional[float]:
        """Best cut among sampled bitstrings at `params` (QAOA problems only)."""
        if self.problem.edges is None:
            return None
        bits = sample_bitstrings(
            self.scorer.routed(circuit_map), params, self.cfg.qaoa_samples, self.seed, self.noise(circuit_map)
        )
        return float(metrics_service.cut_values(bits, self.problem.edges).max())


def _maps_used(rows: list[IterationRow]) -> list[MapUse]:
    uses: list[MapUse] = []
    for row in rows:
        last = uses[-1] if uses else None
        if last is not None and (last.phase, last.device, last.map) == (row.phase, row.device, row.map):
            uses[-1] = last.model_copy(update={"last_iter": row.iter})
        else:
            uses.append(MapUse(
                phase=row.phase, device=row.device, map=row.map, esp=row.map_esp,
                first_iter=row.iter, last_iter=row.iter,
            ))
    return uses


def _record(
    technique: str, problem: Problem, seed: int, rows: list[IterationRow], trace: OptTrace,
    mapping_time: float, phases: list[PhaseInfo], cut: Optional[float], job_id: Optional[str] = None,
) -> RunRecord:
    return RunRecord(
        technique=technique,
        seed=seed,
        problem=problem.name,
        qubits=problem.n,
        rows=rows,
        best_energy=min(r.energy for r in rows),
        iterations=len(rows),
        maps_used=_maps_used(rows),
        mean_esp=float(np.mean([r.map_esp for r in rows])),
        mean_depth=float(np.mean([r.circuit_depth for r in rows])),
        terminated_by=trace.terminated_by,
        mapping_time_s=mapping_time,
        phases=phases,
        final_params=trace.best_params or (),
        cut_value=cut,
        job_id=job_id,
    )


class NestJob:
    """One NEST execution, advanced a cycle at a time.

    The job owns its optimizer trace and incumbent parameters; the map it
    runs on is decided at cycle boundaries against an exclusion set handed
    in by the caller.
    """

    def __init__(
        self, problem: Problem, cfg: TechniqueConfig, seed: int, device: DeviceSnapshot,
        job_id: str = "job0", technique: str = "NEST",
    ):
        if cfg.cycles * cfg.iters_per_cycle <= 0:
            raise InvalidBudgetException(
                f"NEST needs a positive budget, got {cfg.cycles} cycles x {cfg.iters_per_cycle} iterations"
            )
        self.problem = problem
        self.cfg = cfg
        self.seed = seed
        self.device = device
        self.job_id = job_id
        self.technique = technique
        self.context = _MapContext(problem, device, cfg, seed)
        self.trace = OptTrace()
        self.params = initial_params(problem.circuit.num_params, seed)
        self.rows: list[IterationRow] = []
        self.cycle_maps: list[CircuitMap] = []
        self.current: Optional[CircuitMap] = None
        self.finished = False
        self.mapping_time = 0.0

        started = time.perf_counter()
        self.seed_maps = enumerate_seed_maps(device, problem.n)
        sigma_min, sigma_max = default_sigma_bounds(self.context.scorer.scored(m) for m in self.seed_maps)
        schedule = EspSchedule.for_cycles(
            cfg.schedule, sigma_min, sigma_max, cfg.cycles, cfg.iters_per_cycle,
            alpha=cfg.alpha, beta=cfg.beta, gamma=cfg.gamma,
        )
        self.plan: CyclePlan = discretize(schedule, cfg.cycles, cfg.iters_per_cycle, technique)
        self.mapping_time += time.perf_counter() - started
        logger.info(
            f"[{job_id}] {cfg.schedule} plan on '{device.name}': sigma in [{sigma_min:.4f}, {sigma_max:.4f}], "
            f"targets {[round(t, 4) for t in self.plan.targets]}"
        )

    @property
    def scorer(self) -> EspScorer:
        return self.context.scorer

    def start(self, circuit_map: CircuitMap) -> None:
        self.current = circuit_map

    def initial_map(self, exclude: frozenset[int] = frozenset()) -> CircuitMap:
        started = time.perf_counter()
        candidates = self.seed_maps if not exclude else enumerate_seed_maps(self.device, self.problem.n, exclude)
        chosen = jump_to_target(candidates, self.problem.circuit, self.device, self.plan.targets[0], self.scorer)
        self.mapping_time += time.perf_counter() - started
        return chosen

    def transition(self, cycle: int, exclude: frozenset[int] = frozenset()) -> CircuitMap:
        """Move to the map for `cycle` by walking one step or jumping."""
        target = self.plan.targets[cycle]
        started = time.perf_counter()
        if self.cfg.transition == "walk":
            chosen = walk_step(self.current, target, self.problem.circuit, self.device, exclude, self.scorer)
        else:
            try:
                candidates = enumerate_seed_maps(self.device, self.problem.n, exclude)
            except NoFeasibleMapException:
                candidates = []
            chosen = jump_to_target(candidates + [self.current], self.problem.circuit, self.device, target, self.scorer)
        self.mapping_time += time.perf_counter() - started
        if chosen != self.current:
            logger.info(
                f"[{self.job_id}] cycle {cycle}: {self.cfg.transition} {self.current} -> {chosen} "
                f"(ESP {self.scorer.esp(chosen):.4f}, target {target:.4f})"
            )
        self.current = chosen
        return chosen

    def run_cycle(self, cycle: int) -> bool:
        """Optimize for one cycle on the current map; True when the job is done."""
        self.cycle_maps.append(self.current)
        start = self.trace.iteration_count
        cfg = OptimizerConfig(
            method=self.cfg.method,
            initial_step=self.cfg.initial_step,
            max_evals=self.cfg.iters_per_cycle,
            termination=SlidingWindow(window=self.cfg.window, min_rel_improvement=self.cfg.min_rel_improvement),
        )
        minimize(self.context.objective(self.current, self.trace), self.params, cfg, self.seed, self.trace)
        self.rows.extend(self.context.rows(self.trace, start, self.current, cycle, 0))
        self.params = np.asarray(self.trace.best_params, dtype=float)

        if self.trace.terminated_by == "window" or cycle == self.plan.cycles - 1:
            self.finished = True
        return self.finished

    def record(self) -> RunRecord:
        phases = [PhaseInfo(
            device=self.device.name,
            map=str(self.cycle_maps[0]),
            esp=self.scorer.esp(self.cycle_maps[0]),
            initial_step=self.cfg.initial_step,
            iterations=self.trace.iteration_count,
        )]
        cut = self.context.best_cut(self.current, self.params)
        logger.info(
            f"[{self.job_id}] {self.technique} seed {self.seed}: best energy {self.trace.best_value:.6f} "
            f"after {self.trace.iteration_count} iterations ({self.trace.terminated_by}); "
            f"mapping time {self.mapping_time * 1000:.1f} ms"
        )
        return _record(
            self.technique, self.problem, self.seed, self.rows, self.trace,
            self.mapping_time, phases, cut, self.job_id,
        )


def _single_device(devices: Sequence[DeviceSnapshot], technique: str) -> DeviceSnapshot:
    if len(devices) != 1:
        raise ConfigException(f"{technique} runs on exactly one device, got {len(devices)}")
    return devices[0]


def run_nest(problem: Problem, cfg: TechniqueConfig, seed: int, devices: Sequence[DeviceSnapshot]) -> RunRecord:
    """
    NEST: schedule-driven map transitions with a global sliding-window stop.

    Raises:
        InvalidBudgetException: If cycles * iters_per_cycle is 0
        NoFeasibleMapException: If the circuit does not fit the device
    """
    device = _single_device(devices, cfg.technique)
    job = NestJob(problem, cfg, seed, device, technique=cfg.technique)
    job.start(job.initial_map())
    for cycle in range(job.plan.cycles):
        if cycle > 0:
            job.transition(cycle)
        if job.run_cycle(cycle):
            break
    return job.record()


def run_raw_schedule(
    problem: Problem, cfg: TechniqueConfig, seed: int, devices: Sequence[DeviceSnapshot], kind: Optional[str] = None,
) -> RunRecord:
    """NEST flow under any schedule kind, for schedule comparisons."""
    update = {"technique": "RawSchedule"}
    if kind is not None:
        update["schedule"] = kind
    return run_nest(problem, cfg.model_copy(update=update), seed, devices)


def run_bestmap(problem: Problem, cfg: TechniqueConfig, seed: int, devices: Sequence[DeviceSnapshot]) -> RunRecord:
    """All iterations on the highest-ESP seed map, step 1, default tolerance."""
    device = _single_device(devices, "BestMap")
    context = _MapContext(problem, device, cfg, seed)

    started = time.perf_counter()
    chosen = best_map(enumerate_seed_maps(device, problem.n), problem.circuit, device, context.scorer)
    mapping_time = time.perf_counter() - started
    logger.info(f"BestMap seed {seed}: map {chosen} on '{device.name}' (ESP {context.scorer.esp(chosen):.4f})")

    trace = OptTrace()
    opt = OptimizerConfig(
        method=cfg.method,
        initial_step=cfg.initial_step,
        max_evals=cfg.max_evals,
        termination=DefaultTol(tol=cfg.default_tolerance),
    )
    minimize(context.objective(chosen, trace), None, opt, seed, trace, num_params=problem.circuit.num_params)
    rows = context.rows(trace, 0, chosen, 0, 0)
    phases = [PhaseInfo(
        device=device.name, map=str(chosen), esp=context.scorer.esp(chosen),
        initial_step=cfg.initial_step, tolerance=cfg.default_tolerance, iterations=trace.iteration_count,
    )]
    cut = context.best_cut(chosen, trace.best_params)
    logger.info(f"BestMap seed {seed}: best energy {trace.best_value:.6f} after {trace.iteration_count} iterations")
    return _record("BestMap", problem, seed, rows, trace, mapping_time, phases, cut)


def run_qoncord(problem: Problem, cfg: TechniqueConfig, seed: int, devices: Sequence[DeviceSnapshot]) -> RunRecord:
    """
    Qoncord: explore on the lower-fidelity device, fine-tune on the higher one.

    Each device runs the circuit on its own best map; devices are ranked by
    the Qoncord fidelity estimate, ties keeping their given order.
    """
    if len(devices) != 2:
        raise ConfigException(f"Qoncord runs on exactly two devices, got {len(devices)}")

    started = time.perf_counter()
    ranked = []
    for order, device in enumerate(devices):
        context = _MapContext(problem, device, cfg, seed)
        chosen = best_map(enumerate_seed_maps(device, problem.n), problem.circuit, device, context.scorer)
        fidelity = qoncord_fidelity(context.scorer.profile(chosen), qoncord_params(device, cfg.qoncord_constant))
        ranked.append((fidelity, order, context, chosen))
    ranked.sort(key=lambda item: (item[0], item[1]))
    mapping_time = time.perf_counter() - started

    phase_settings = [
        (cfg.qoncord_low_step, cfg.qoncord_low_tolerance),
        (cfg.qoncord_high_step, cfg.default_tolerance),
    ]
    trace = OptTrace()
    rows: list[IterationRow] = []
    phases: list[PhaseInfo] = []
    params = initial_params(problem.circuit.num_params, seed)
    for phase, ((fidelity, _, context, chosen), (step, tol)) in enumerate(zip(ranked, phase_settings)):
        logger.info(
            f"Qoncord seed {seed} phase {phase + 1}: '{context.device.name}' map {chosen} "
            f"(estimated fidelity {fidelity:.4f}, step {step}, tol {tol})"
        )
        start = trace.iteration_count
        opt = OptimizerConfig(
            method=cfg.method, initial_step=step, max_evals=cfg.max_evals, termination=DefaultTol(tol=tol),
        )
        minimize(context.objective(chosen, trace), params, opt, seed, trace)
        rows.extend(context.rows(trace, start, chosen, phase, phase))
        params = np.asarray(trace.best_params, dtype=float)
        phases.append(PhaseInfo(
            device=context.device.name, map=str(chosen), esp=context.scorer.esp(chosen),
            initial_step=step, tolerance=tol, iterations=trace.iteration_count - start,
            estimated_fidelity=fidelity,
        ))

    _, _, final_context, final_map = ranked[-1]
    cut = final_context.best_cut(final_map, params)
    logger.info(f"Qoncord seed {seed}: best energy {trace.best_value:.6f} after {trace.iteration_count} iterations")
    return _record("Qoncord", problem, seed, rows, trace, mapping_time, phases, cut)


def run_concurrent(
    problems: Sequence[Problem], cfg: TechniqueConfig, seed: int, devices: Sequence[DeviceSnapshot],
) -> tuple[list[RunRecord], ConcurrencyReport]:
    """
    Multi-programmed NEST: k jobs on disjoint zones of one device.

    Jobs start together and advance in lockstep cycles. At each boundary they
    walk in arrival order, avoiding every other job's claimed qubits; a job
    that finishes releases its zone to the others.

    Raises:
        AllocationFailureException: If a job cannot get an initial zone
    """
    device = _single_device(devices, "NEST")
    jobs = [
        NestJob(problem, cfg, seed + index, device, job_id=f"job{index}")
        for index, problem in enumerate(problems)
    ]
    allocator = ZoneAllocator(device)
    allocate_zones(
        [(job.job_id, job.problem.circuit) for job in jobs],
        device,
        targets=[job.plan.targets[0] for job in jobs],
        allocator=allocator,
        scorers=[job.scorer for job in jobs],
    )
    zones = {z.owner: str(z.initial_map) for z in allocator.zones()}
    for job, zone in zip(jobs, allocator.zones()):
        job.start(zone.initial_map)

    disjoint = allocator.is_disjoint()
    active = list(jobs)
    for cycle in range(cfg.cycles):
        if not active:
            break
        if cycle > 0:
            for job in active:
                allocator.claim(job.job_id, job.transition(cycle, allocator.exclude_for(job.job_id)))
        disjoint = disjoint and allocator.is_disjoint()
        for job in list(active):
            if job.run_cycle(cycle):
                allocator.release(job.job_id)
                active.remove(job)

    records = [job.record() for job in jobs]
    iterations = [r.iterations for r in records]
    mean_iterations = float(np.mean(iterations))
    report = ConcurrencyReport(
        k=len(jobs),
        job_ids=[job.job_id for job in jobs],
        iterations=iterations,
        mean_iterations=mean_iterations,
        throughput=metrics_service.throughput(len(jobs), mean_iterations),
        zones=zones,
        disjoint_every_tick=disjoint,
    )
    logger.info(f"Concurrent run k={len(jobs)}: mean iterations {mean_iterations:.1f}, throughput {report.throughput:.5f}")
    return records, report


RUNNERS = {
    "NEST": run_nest,
    "BestMap": run_bestmap,
    "Qoncord": run_qoncord,
    "RawSchedule": run_raw_schedule,
}


def run_technique(problem: Problem, cfg: TechniqueConfig, seed: int, devices: Sequence[DeviceSnapshot]) -> RunRecord:
    """Dispatch on cfg.technique."""
    return RUNNERS[cfg.technique](problem, cfg, seed, devices)
