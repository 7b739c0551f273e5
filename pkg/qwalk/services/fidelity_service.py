"""Fidelity service: circuit profiling, ESP and the Qoncord estimator."""

import math
from typing import Optional

import numpy as np

from qwalk.core.config import settings
from qwalk.core.exceptions import DomainError, MissingEdgePropsException, UnmappedQubitException
from qwalk.core.logging import get_logger
from qwalk.models.circuit import ParamCircuit, RoutedCircuit
from qwalk.models.device import DeviceSnapshot
from qwalk.models.fidelity import CircuitProfile, EspValue, GateInstance, QoncordParams
from qwalk.models.mapping import CircuitMap, ScoredMap
from qwalk.services.circuit_service import asap_layers, native_gates, route

logger = get_logger(__name__)

# Smallest ESP reported; deep circuits on poor devices underflow otherwise
ESP_FLOOR = float(np.finfo(float).tiny)


def profile_circuit(routed: RoutedCircuit, circuit_map: CircuitMap, snapshot: DeviceSnapshot) -> CircuitProfile:
    """
    Collect gate success probabilities, depth and durations of a routed circuit.

    SWAPs count as three CX instances. Measurements contribute
    1 - readout_error and are excluded from depth and from the average gate
    time t_g, which is the mean over 1q and 2q instances only: snapshots
    have no readout duration.

    Raises:
        UnmappedQubitException: If a gate touches a qubit outside the map
        MissingEdgePropsException: If a 2q gate acts on a non-coupled pair
    """
    allowed = circuit_map.physical_set
    gates = native_gates(routed.gates)
    instances: list[GateInstance] = []

    for gate in gates:
        for q in gate.qubits:
            if q not in allowed:
                raise UnmappedQubitException(f"{gate.op} on physical qubit {q} outside map {circuit_map}")
        if gate.op == "MEASURE":
            q = gate.qubits[0]
            instances.append(GateInstance(
                kind="measure",
                physical_qubits=gate.qubits,
                success_prob=1 - snapshot.qubits[q].readout_error,
                duration_us=0.0,
            ))
        elif len(gate.qubits) == 1:
            props = snapshot.qubits[gate.qubits[0]]
            instances.append(GateInstance(
                kind="1q",
                physical_qubits=gate.qubits,
                success_prob=1 - props.sq_error,
                duration_us=props.sq_duration_us,
            ))
        else:
            edge = snapshot.edge(*gate.qubits)
            if edge is None:
                raise MissingEdgePropsException(f"{gate.op} on non-coupled pair {gate.qubits}; route the circuit first")
            instances.append(GateInstance(
                kind="2q",
                physical_qubits=gate.qubits,
                success_prob=1 - edge.tq_error,
                duration_us=edge.tq_duration_us,
            ))

    timed = [g.duration_us for g in instances if g.kind != "measure"]
    one_q = [g.duration_us for g in instances if g.kind == "1q"]
    two_q = [g.duration_us for g in instances if g.kind == "2q"]
    mapped = sorted(allowed)

    return CircuitProfile(
        gate_instances=tuple(instances),
        depth=len(asap_layers(gates)),
        avg_gate_time_us=float(np.mean(timed)) if timed else 0.0,
        G1=len(one_q),
        G2=len(two_q),
        M=len(instances) - len(timed),
        mu1_us=float(np.mean(one_q)) if one_q else 0.0,
        mu2_us=float(np.mean(two_q)) if two_q else 0.0,
        t1_us=float(np.mean([snapshot.qubits[q].t1_us for q in mapped])),
        t2_us=float(np.mean([snapshot.qubits[q].t2_us for q in mapped])),
    )


def esp(profile: CircuitProfile) -> EspValue:
    """
    Estimated success probability of a profiled circuit.

    ESP = prod(success) * exp(-d * t_g / T1) * exp(-d * t_g / T2)

    Raises:
        DomainError: If T1 or T2 is not positive
    """
    if profile.t1_us <= 0 or profile.t2_us <= 0:
        raise DomainError(f"coherence times must be positive, got T1={profile.t1_us}, T2={profile.t2_us}")

    log_value = sum(math.log(g.success_prob) for g in profile.gate_instances)
    decay = profile.depth * profile.avg_gate_time_us
    log_value -= decay / profile.t1_us + decay / profile.t2_us
    return EspValue(value=min(1.0, max(ESP_FLOOR, math.exp(log_value))))


def qoncord_params(snapshot: DeviceSnapshot, C: Optional[float] = None) -> QoncordParams:
    """Device-uniform error rates and coherence times of a snapshot."""
    gamma, beta, omega = snapshot.mean_errors()
    return QoncordParams(
        C=settings.qoncord_constant if C is None else C,
        gamma=gamma,
        beta=beta,
        omega=omega,
        t1_us=float(np.mean([q.t1_us for q in snapshot.qubits])),
        t2_us=float(np.mean([q.t2_us for q in snapshot.qubits])),
    )


def qoncord_fidelity(profile: CircuitProfile, params: QoncordParams) -> float:
    """
    Qoncord execution fidelity estimator.

    P = exp(-(C * D * (mu1 * G1 + mu2 * G2) / 2) / (T1 * T2))
        * (1 - gamma)^G1 * (1 - beta)^G2 * (1 - omega)^M

    Raises:
        DomainError: If T1 or T2 is not positive
    """
    t1 = profile.t1_us if params.t1_us is None else params.t1_us
    t2 = profile.t2_us if params.t2_us is None else params.t2_us
    if t1 <= 0 or t2 <= 0:
        raise DomainError(f"coherence times must be positive, got T1={t1}, T2={t2}")

    busy = profile.mu1_us * profile.G1 + profile.mu2_us * profile.G2
    decoherence = math.exp(-(params.C * profile.depth * busy / 2) / (t1 * t2))
    return (
        decoherence
        * (1 - params.gamma) ** profile.G1
        * (1 - params.beta) ** profile.G2
        * (1 - params.omega) ** profile.M
    )


def score_map(circuit: ParamCircuit, circuit_map: CircuitMap, snapshot: DeviceSnapshot) -> float:
    """Route, profile and score a circuit on one map."""
    routed = route(circuit, circuit_map, snapshot)
    return esp(profile_circuit(routed, circuit_map, snapshot)).value


class EspScorer:
    """Caches routed circuits and ESPs of one circuit on one device.

    Keys are full assignments: the logical order changes routing and hence
    the ESP, so two maps over the same physical set may score differently.
    """

    def __init__(self, circuit: ParamCircuit, snapshot: DeviceSnapshot):
        self.circuit = circuit
        self.snapshot = snapshot
        self._routed: dict[tuple[int, ...], RoutedCircuit] = {}
        self._esp: dict[tuple[int, ...], float] = {}

    def routed(self, circuit_map: CircuitMap) -> RoutedCircuit:
        key = circuit_map.assignment
        if key not in self._routed:
            self._routed[key] = route(self.circuit, circuit_map, self.snapshot)
        return self._routed[key]

    def profile(self, circuit_map: CircuitMap) -> CircuitProfile:
        return profile_circuit(self.routed(circuit_map), circuit_map, self.snapshot)

    def esp(self, circuit_map: CircuitMap) -> float:
        key = circuit_map.assignment
        if key not in self._esp:
            self._esp[key] = esp(self.profile(circuit_map)).value
        return self._esp[key]

    def scored(self, circuit_map: CircuitMap) -> ScoredMap:
        return ScoredMap(map=circuit_map, esp=self.esp(circuit_map))

    def depth(self, circuit_map: CircuitMap) -> int:
        return len(asap_layers(native_gates(self.routed(circuit_map).gates)))
