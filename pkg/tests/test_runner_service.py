import networkx as nx
import numpy as np
import pytest

from qwalk.core.config import settings
from qwalk.core.exceptions import AllocationFailureException, ConfigException, InvalidBudgetException
from qwalk.models.circuit import PauliHamiltonian
from qwalk.models.run import Problem, TechniqueConfig
from qwalk.services.circuit_service import efficient_su2, load_hamiltonian, measure_all, qaoa_maxcut
from qwalk.services.device_service import parse_synthetic_ref, synthesize_device
from qwalk.services.mapping_service import ZoneAllocator, validate_map
from qwalk.services.metrics_service import aggregate
from qwalk.services.runner_service import (
    NestJob,
    run_bestmap,
    run_concurrent,
    run_nest,
    run_qoncord,
    run_raw_schedule,
    run_technique,
    select_available,
)
from qwalk.services.simulator_service import exact_ground_energy


def _qubits(map_label):
    return {int(q) for q in map_label.strip("{}").split(",")}


def test_nest_uses_the_whole_budget(zz_problem, small_cfg, line5):
    record = run_nest(zz_problem, small_cfg, 0, [line5])
    assert record.iterations == 24
    assert [r.iter for r in record.rows] == list(range(1, 25))
    assert [r.cycle for r in record.rows] == [0] * 8 + [1] * 8 + [2] * 8
    assert record.best_energy == min(record.energies)
    assert record.terminated_by == "budget"


def test_flat_schedule_stays_on_the_best_map(zz_problem, small_cfg, line5):
    nest = run_nest(zz_problem, small_cfg.model_copy(update={"schedule": "Flat"}), 0, [line5])
    best = run_bestmap(zz_problem, small_cfg, 0, [line5])
    assert {r.map for r in nest.rows} == {best.rows[0].map} == {"{1,2}"}


def test_walk_moves_one_qubit_per_cycle(zz_problem, line5):
    cfg = TechniqueConfig(schedule="InvertedReLU", cycles=4, iters_per_cycle=5, shots=64)
    record = run_nest(zz_problem, cfg, 3, [line5])
    labels = [record.rows[i].map for i in range(0, record.iterations, cfg.iters_per_cycle)]
    assert labels[0] == "{0,1}"
    for before, after in zip(labels, labels[1:]):
        assert len(_qubits(before) ^ _qubits(after)) in (0, 2)
    assert len(record.maps_used) >= 2


def test_empty_budget_is_rejected(zz_problem, line5):
    with pytest.raises(InvalidBudgetException):
        run_nest(zz_problem, TechniqueConfig(cycles=0, iters_per_cycle=10), 0, [line5])


def test_single_device_techniques_reject_device_lists(zz_problem, small_cfg, line5):
    with pytest.raises(ConfigException):
        run_nest(zz_problem, small_cfg, 0, [line5, line5])
    with pytest.raises(ConfigException):
        run_qoncord(zz_problem, small_cfg, 0, [line5])


def test_bestmap_is_deterministic(zz_problem, small_cfg, line5):
    first = run_bestmap(zz_problem, small_cfg, 5, [line5])
    second = run_bestmap(zz_problem, small_cfg, 5, [line5])
    assert first.rows == second.rows
    assert first.phases[0].map == "{1,2}"
    assert first.iterations <= small_cfg.max_evals


def test_qoncord_runs_two_phases(zz_problem, small_cfg, line5):
    record = run_qoncord(zz_problem, small_cfg, 0, [line5, line5])
    assert len(record.phases) == 2
    assert [p.initial_step for p in record.phases] == [small_cfg.qoncord_low_step, small_cfg.qoncord_high_step]
    assert [p.tolerance for p in record.phases] == [small_cfg.qoncord_low_tolerance, small_cfg.default_tolerance]
    assert len(record.maps_used) == 2
    assert sum(p.iterations for p in record.phases) == record.iterations
    assert {r.phase for r in record.rows} == {0, 1}


def test_raw_schedule_labels_its_records(zz_problem, small_cfg, line5):
    record = run_raw_schedule(zz_problem, small_cfg, 0, [line5], kind="StepUp")
    assert record.technique == "RawSchedule"
    assert run_technique(zz_problem, small_cfg, 0, [line5]).technique == "NEST"


def test_qaoa_records_carry_a_cut_value(small_cfg, line5):
    circuit, hamiltonian = qaoa_maxcut(nx.cycle_graph(3))
    problem = Problem(
        name="triangle", kind="qaoa", circuit=measure_all(circuit), hamiltonian=hamiltonian,
        edges=((0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0)),
    )
    record = run_bestmap(problem, small_cfg, 0, [line5])
    assert record.cut_value in (0.0, 1.0, 2.0)


def test_concurrent_jobs_get_disjoint_zones(zz_problem, small_cfg, line5):
    cfg = small_cfg.model_copy(update={"schedule": "Flat"})
    records, report = run_concurrent([zz_problem, zz_problem], cfg, 0, [line5])
    assert report.zones == {"job0": "{1,2}", "job1": "{3,4}"}
    assert report.disjoint_every_tick
    assert [r.job_id for r in records] == ["job0", "job1"]
    assert [r.seed for r in records] == [0, 1]
    assert report.throughput == pytest.approx(2 / report.mean_iterations)


def test_one_concurrent_job_matches_nest(zz_problem, small_cfg, line5):
    records, report = run_concurrent([zz_problem], small_cfg, 4, [line5])
    alone = run_nest(zz_problem, small_cfg, 4, [line5])
    assert records[0].rows == alone.rows
    assert report.k == 1


def test_third_job_does_not_fit(zz_problem, small_cfg, line5):
    with pytest.raises(AllocationFailureException) as exc_info:
        run_concurrent([zz_problem] * 3, small_cfg, 0, [line5])
    assert exc_info.value.job_id == "job2"


def test_select_available():
    pool = ["a", "b", "c", "d", "e"]
    assert select_available(pool, 5, seed=1) == pool
    picked = select_available(pool, 2, seed=1)
    assert picked == select_available(pool, 2, seed=1)
    assert len(picked) == 2
    assert picked == sorted(picked, key=pool.index)
    with pytest.raises(ConfigException):
        select_available(pool, 6, seed=1)


FUZZ_DEVICES = (
    "synthetic:heavy-hex-27:seed=3,correlation=0.4",
    "synthetic:ring:n=12,seed=5",
    "synthetic:path:n=10,seed=6",
    "synthetic:heavy-hex-lattice:rows=3,width=9,seed=2",
)
SCHEDULES = ("Flat", "StepUp", "Linear", "VShape", "ReLU", "InvertedReLU", "StepDown", "LinearDown")


def test_paired_walks_keep_maps_valid_over_random_runs():
    devices = [synthesize_device(parse_synthetic_ref(ref)) for ref in FUZZ_DEVICES]
    rng = np.random.default_rng(30)
    for run in range(200):
        device = devices[run % len(devices)]
        n = int(rng.integers(2, 4))
        problem = Problem(
            name="fuzz", circuit=efficient_su2(n, 1), hamiltonian=PauliHamiltonian.from_pairs([(1.0, "Z" * n)]),
        )
        cfg = TechniqueConfig(
            schedule=str(rng.choice(SCHEDULES)),
            transition="walk",
            cycles=int(rng.integers(2, 7)),
            iters_per_cycle=1,
            shots=16,
        )
        jobs = [NestJob(problem, cfg, 2 * run + i, device, job_id=f"job{i}") for i in range(2)]
        allocator = ZoneAllocator(device)
        for job in jobs:
            job.start(job.initial_map(allocator.claimed()))
            allocator.claim(job.job_id, job.current)

        for cycle in range(cfg.cycles):
            for job in jobs:
                if cycle > 0:
                    before, target = job.current, job.plan.targets[cycle]
                    after = job.transition(cycle, allocator.exclude_for(job.job_id))
                    allocator.claim(job.job_id, after)
                    assert len(before.physical_set ^ after.physical_set) in (0, 2)
                    assert abs(job.scorer.esp(after) - target) <= abs(job.scorer.esp(before) - target)
                validate_map(job.current, device)
                assert len(job.current.physical_set) == n
                assert 0 <= job.scorer.esp(job.current) <= 1
                job.run_cycle(cycle)
            assert allocator.is_disjoint()

        for job in jobs:
            assert job.record().iterations == cfg.cycles


def test_ideal_zz_vqe_reaches_the_ground_state(zz_problem, line5):
    cfg = TechniqueConfig(noisy=False, shots=4096, max_evals=300)
    record = run_bestmap(zz_problem, cfg, 0, [line5])
    assert record.iterations <= 300
    assert record.best_energy <= -0.98


# Reduced versions of the bundled experiment suites

SUITE_DEVICE = "synthetic:heavy-hex-27:seed=7,correlation=0.5"
SECOND_DEVICE = "synthetic:heavy-hex-27:seed=11,correlation=0.5"
SUITE_SEEDS = range(4)


def _h2_problem():
    hamiltonian = load_hamiltonian(settings.resolved_data_dir() / "hamiltonians" / "h2.txt")
    return Problem(name="h2", circuit=measure_all(efficient_su2(4, 3)), hamiltonian=hamiltonian)


def _device(ref):
    return synthesize_device(parse_synthetic_ref(ref))


def _report(records, problem):
    return aggregate(records, ideal_min=exact_ground_energy(problem.hamiltonian))


@pytest.mark.slow
def test_nest_against_bestmap_and_qoncord():
    problem = _h2_problem()
    device, second = _device(SUITE_DEVICE), _device(SECOND_DEVICE)
    cfg = TechniqueConfig(shots=1024)

    nest = _report([run_nest(problem, cfg, s, [device]) for s in SUITE_SEEDS], problem)
    bestmap = _report([run_bestmap(problem, cfg, s, [device]) for s in SUITE_SEEDS], problem)
    qoncord = _report([run_qoncord(problem, cfg, s, [device, second]) for s in SUITE_SEEDS], problem)

    assert nest.energy_gap_pct <= bestmap.energy_gap_pct + 1.0
    assert nest.user_cost < bestmap.user_cost
    assert nest.iterations < qoncord.iterations


@pytest.mark.slow
def test_inverted_relu_is_best_or_tied_among_schedules():
    problem = _h2_problem()
    device = _device(SUITE_DEVICE)
    cfg = TechniqueConfig(shots=1024)

    gaps = {}
    for kind in ("Flat", "StepUp", "Linear", "VShape", "ReLU", "InvertedReLU"):
        records = [run_raw_schedule(problem, cfg, s, [device], kind=kind) for s in SUITE_SEEDS]
        gaps[kind] = _report(records, problem).energy_gap_pct
    assert gaps["InvertedReLU"] <= min(gaps.values()) + 0.5


@pytest.mark.slow
def test_two_concurrent_jobs_nearly_double_throughput():
    problem = _h2_problem()
    device = _device(SUITE_DEVICE)
    cfg = TechniqueConfig(shots=1024)

    single = [run_concurrent([problem], cfg, s, [device])[1] for s in SUITE_SEEDS]
    double = [run_concurrent([problem, problem], cfg, s, [device])[1] for s in SUITE_SEEDS]
    assert all(report.disjoint_every_tick for report in double)
    assert np.mean([r.throughput for r in double]) >= 1.7 * np.mean([r.throughput for r in single])


def _largest_switch_rise(record):
    rises = [b.energy - a.energy for a, b in zip(record.rows, record.rows[1:]) if a.map != b.map]
    return max(rises, default=0.0)


@pytest.mark.slow
def test_jumps_spike_the_energy_more_than_walks():
    problem = _h2_problem()
    device = _device(SUITE_DEVICE)
    # ESP target drops from the best to the worst seed map halfway through
    cfg = TechniqueConfig(
        schedule="StepDown", cycles=4, iters_per_cycle=40, shots=1024, initial_step=0.2, window=10_000,
    )

    spikes = {}
    for transition in ("walk", "jump"):
        run_cfg = cfg.model_copy(update={"transition": transition})
        records = [run_nest(problem, run_cfg, s, [device]) for s in SUITE_SEEDS]
        spikes[transition] = np.mean([_largest_switch_rise(r) for r in records])
    assert spikes["jump"] > spikes["walk"]
