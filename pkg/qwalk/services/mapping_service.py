"""Mapping service: seed maps, BestMap, qubit jump, qubit walk and zones."""

import itertools
from typing import Iterable, Optional, Sequence

import networkx as nx

from qwalk.core.exceptions import (
    AllocationFailureException,
    EmptyCandidatesException,
    NoFeasibleMapException,
    QubitIndexError,
)
from qwalk.core.logging import get_logger
from qwalk.models.circuit import ParamCircuit
from qwalk.models.device import DeviceSnapshot
from qwalk.models.mapping import CircuitMap, ScoredMap, Zone
from qwalk.services.fidelity_service import EspScorer

logger = get_logger(__name__)


def validate_map(circuit_map: CircuitMap, snapshot: DeviceSnapshot) -> None:
    """
    Check that a map lies on the device and induces a connected subgraph.

    Raises:
        QubitIndexError: If a physical index is outside the device
        NoFeasibleMapException: If the physical set is not connected
    """
    for q in circuit_map.assignment:
        if q >= snapshot.num_qubits:
            raise QubitIndexError(f"map {circuit_map} uses qubit {q} outside device of {snapshot.num_qubits}")
    if not nx.is_connected(snapshot.graph().subgraph(circuit_map.assignment)):
        raise NoFeasibleMapException(f"map {circuit_map} is not connected on '{snapshot.name}'")


def enumerate_seed_maps(
    snapshot: DeviceSnapshot, n: int, exclude: Iterable[int] = frozenset()
) -> list[CircuitMap]:
    """
    Grow one candidate per free qubit by BFS, ties by ascending index.

    Logical order is BFS visit order. Candidates that cannot reach n free
    qubits are dropped and repeated physical sets keep their first growth.

    Raises:
        NoFeasibleMapException: If no connected set of n free qubits is found
    """
    excluded = frozenset(exclude)
    if n < 1 or n > snapshot.num_qubits - len(excluded):
        raise NoFeasibleMapException(
            f"cannot place {n} qubits on '{snapshot.name}' with {len(excluded)} of {snapshot.num_qubits} excluded"
        )

    free = nx.restricted_view(snapshot.graph(), excluded, [])
    seen: set[frozenset[int]] = set()
    maps: list[CircuitMap] = []
    for q in range(snapshot.num_qubits):
        if q in excluded:
            continue
        visit = [q] + [v for _, v in itertools.islice(nx.bfs_edges(free, q, sort_neighbors=sorted), n - 1)]
        if len(visit) < n:
            continue
        key = frozenset(visit)
        if key in seen:
            continue
        seen.add(key)
        maps.append(CircuitMap(assignment=tuple(visit)))

    if not maps:
        raise NoFeasibleMapException(f"no connected {n}-qubit region left on '{snapshot.name}'")
    return maps


def _scorer(circuit: ParamCircuit, snapshot: DeviceSnapshot, scorer: Optional[EspScorer]) -> EspScorer:
    return scorer if scorer is not None else EspScorer(circuit, snapshot)


def score_candidates(
    candidates: Sequence[CircuitMap], circuit: ParamCircuit, snapshot: DeviceSnapshot,
    scorer: Optional[EspScorer] = None,
) -> list[ScoredMap]:
    scorer = _scorer(circuit, snapshot, scorer)
    return [scorer.scored(m) for m in candidates]


def best_map(
    candidates: Sequence[CircuitMap], circuit: ParamCircuit, snapshot: DeviceSnapshot,
    scorer: Optional[EspScorer] = None,
) -> CircuitMap:
    """
    Highest-ESP candidate; ties go to the lexicographically smallest set.

    Raises:
        EmptyCandidatesException: If candidates is empty
    """
    if not candidates:
        raise EmptyCandidatesException("best_map needs at least one candidate")
    scorer = _scorer(circuit, snapshot, scorer)
    return min(candidates, key=lambda m: (-scorer.esp(m), m.sorted_key))


def jump_to_target(
    candidates: Sequence[CircuitMap], circuit: ParamCircuit, snapshot: DeviceSnapshot, target: float,
    scorer: Optional[EspScorer] = None,
) -> CircuitMap:
    """
    Candidate whose ESP is closest to `target`.

    Ties go to the higher ESP, then to the lexicographically smallest set.

    Raises:
        EmptyCandidatesException: If candidates is empty
    """
    if not candidates:
        raise EmptyCandidatesException("jump_to_target needs at least one candidate")
    scorer = _scorer(circuit, snapshot, scorer)
    return min(candidates, key=lambda m: (abs(scorer.esp(m) - target), -scorer.esp(m), m.sorted_key))


def walk_neighbors(
    circuit_map: CircuitMap, snapshot: DeviceSnapshot, exclude: Iterable[int] = frozenset()
) -> list[CircuitMap]:
    """
    Maps one qubit away: drop a physical qubit p and add a free qubit p'
    adjacent to the rest, keeping the set connected. A one-qubit map may
    move to any free qubit.

    The logical qubit that sat on p moves to p'; everyone else stays put.
    Results are ordered by their sorted physical set.
    """
    graph = snapshot.graph()
    excluded = frozenset(exclude)
    current = circuit_map.physical_set
    neighbors: list[CircuitMap] = []

    for position, p in enumerate(circuit_map.assignment):
        rest = current - {p}
        if rest:
            options = {nb for a in rest for nb in graph.neighbors(a)} - current - excluded
        else:
            options = set(graph.nodes) - current - excluded
        for p_new in sorted(options):
            if rest and not nx.is_connected(graph.subgraph(rest | {p_new})):
                continue
            assignment = list(circuit_map.assignment)
            assignment[position] = p_new
            neighbors.append(CircuitMap(assignment=tuple(assignment)))

    neighbors.sort(key=lambda m: m.sorted_key)
    return neighbors


def walk_step(
    current: CircuitMap, target: float, circuit: ParamCircuit, snapshot: DeviceSnapshot,
    exclude: Iterable[int] = frozenset(), scorer: Optional[EspScorer] = None,
) -> CircuitMap:
    """
    One greedy walk move toward `target`, staying put when nothing is closer.

    Ties prefer staying, then the higher ESP, then the lexicographically
    smallest set, so the distance to target never grows.
    """
    scorer = _scorer(circuit, snapshot, scorer)
    candidates = walk_neighbors(current, snapshot, exclude)
    logger.debug(f"Walk from {current}: {len(candidates)} neighbors toward target {target:.4f}")

    def key(m: CircuitMap):
        return (abs(scorer.esp(m) - target), m != current, -scorer.esp(m), m.sorted_key)

    return min([current] + candidates, key=key)


class ZoneAllocator:
    """Registry of claimed physical qubits, one writer for all jobs."""

    def __init__(self, snapshot: DeviceSnapshot):
        self.snapshot = snapshot
        self._claims: dict[str, frozenset[int]] = {}
        self._initial: dict[str, CircuitMap] = {}

    def claimed(self) -> frozenset[int]:
        return frozenset().union(*self._claims.values()) if self._claims else frozenset()

    def exclude_for(self, job_id: str) -> frozenset[int]:
        """Qubits held by every job except `job_id`."""
        others = [qs for owner, qs in self._claims.items() if owner != job_id]
        return frozenset().union(*others) if others else frozenset()

    def claim(self, job_id: str, circuit_map: CircuitMap) -> None:
        """Set a job's claim to its current map."""
        clash = circuit_map.physical_set & self.exclude_for(job_id)
        if clash:
            raise AllocationFailureException(job_id, f"job {job_id} map {circuit_map} overlaps qubits {sorted(clash)}")
        self._claims[job_id] = circuit_map.physical_set
        self._initial.setdefault(job_id, circuit_map)

    def release(self, job_id: str) -> None:
        if self._claims.pop(job_id, None) is not None:
            logger.info(f"Job {job_id} released its qubits")

    def zones(self) -> list[Zone]:
        return [
            Zone(owner=owner, claimed=claimed, initial_map=self._initial.get(owner))
            for owner, claimed in self._claims.items()
        ]

    def is_disjoint(self) -> bool:
        total = sum(len(qs) for qs in self._claims.values())
        return total == len(self.claimed())


def allocate_zones(
    jobs: Sequence[tuple[str, ParamCircuit]],
    snapshot: DeviceSnapshot,
    targets: Optional[Sequence[Optional[float]]] = None,
    allocator: Optional[ZoneAllocator] = None,
    scorers: Optional[Sequence[EspScorer]] = None,
) -> list[Zone]:
    """
    First-come-first-served initial zones for (job_id, circuit) pairs.

    Each job picks from seed maps that avoid earlier claims: the map
    closest to its target when one is given, the best map otherwise.

    Raises:
        AllocationFailureException: If a job has no feasible map left
    """
    allocator = allocator or ZoneAllocator(snapshot)
    for index, (job_id, circuit) in enumerate(jobs):
        scorer = scorers[index] if scorers is not None else EspScorer(circuit, snapshot)
        try:
            candidates = enumerate_seed_maps(snapshot, circuit.n, allocator.claimed())
        except NoFeasibleMapException as e:
            raise AllocationFailureException(job_id, f"No feasible zone left for job {job_id}: {e.message}")

        target = targets[index] if targets is not None else None
        if target is None:
            chosen = best_map(candidates, circuit, snapshot, scorer)
        else:
            chosen = jump_to_target(candidates, circuit, snapshot, target, scorer)
        allocator.claim(job_id, chosen)
        logger.info(f"Job {job_id} allocated zone {chosen} (ESP {scorer.esp(chosen):.4f})")

    return [z for z in allocator.zones() if z.owner in {job_id for job_id, _ in jobs}]
