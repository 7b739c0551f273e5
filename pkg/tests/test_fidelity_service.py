import math

import numpy as np
import pytest

from qwalk.core.exceptions import DomainError, MissingEdgePropsException, UnmappedQubitException
from qwalk.models.circuit import Gate, ParamCircuit, RoutedCircuit
from qwalk.models.fidelity import CircuitProfile, GateInstance, QoncordParams
from qwalk.models.mapping import CircuitMap
from qwalk.services.circuit_service import route
from qwalk.services.fidelity_service import (
    EspScorer,
    esp,
    profile_circuit,
    qoncord_fidelity,
    qoncord_params,
    score_map,
)


def _gate(kind, p, duration=0.1):
    qubits = (0, 1) if kind == "2q" else (0,)
    return GateInstance(kind=kind, physical_qubits=qubits, success_prob=p, duration_us=duration)


def test_single_cx_profile_on_line5(line5, single_cx):
    circuit_map = CircuitMap(assignment=(1, 2))
    profile = profile_circuit(route(single_cx, circuit_map, line5), circuit_map, line5)

    assert (profile.G1, profile.G2, profile.M) == (0, 1, 0)
    assert profile.depth == 1
    assert [g.success_prob for g in profile.gate_instances] == [pytest.approx(0.99)]


def test_empty_circuit_profile(line5):
    circuit_map = CircuitMap(assignment=(0,))
    profile = profile_circuit(route(ParamCircuit(n=1), circuit_map, line5), circuit_map, line5)
    assert (profile.G1, profile.G2, profile.M, profile.depth) == (0, 0, 0, 0)
    assert esp(profile).value == 1.0


def test_unrouted_pair_is_rejected(line5):
    circuit_map = CircuitMap(assignment=(0, 2))
    routed = RoutedCircuit(
        n=2, gates=(Gate(op="CX", qubits=(0, 2)),), source_map=circuit_map, final_layout=(0, 2),
    )
    with pytest.raises(MissingEdgePropsException):
        profile_circuit(routed, circuit_map, line5)


def test_gate_outside_map_is_rejected(line5):
    routed = RoutedCircuit(
        n=2, gates=(Gate(op="CX", qubits=(2, 3)),), source_map=CircuitMap(assignment=(2, 3)), final_layout=(2, 3),
    )
    with pytest.raises(UnmappedQubitException):
        profile_circuit(routed, CircuitMap(assignment=(1, 2)), line5)


def test_esp_closed_form():
    profile = CircuitProfile(
        gate_instances=(_gate("2q", 0.99),), depth=1, avg_gate_time_us=0.1, G2=1, t1_us=100.0, t2_us=100.0,
    )
    expected = 0.99 * math.exp(-0.001) * math.exp(-0.001)
    assert esp(profile).value == pytest.approx(expected, rel=1e-12)


def _random_profile(rng):
    probs = rng.uniform(0.9, 0.9999, size=int(rng.integers(1, 30)))
    return CircuitProfile(
        gate_instances=tuple(_gate("2q", float(p)) for p in probs),
        depth=int(rng.integers(1, 40)),
        avg_gate_time_us=float(rng.uniform(0.01, 0.5)),
        G2=len(probs),
        t1_us=float(rng.uniform(20, 300)),
        t2_us=float(rng.uniform(20, 300)),
    )


def test_esp_matches_closed_form_on_random_inputs():
    rng = np.random.default_rng(3)
    for _ in range(100):
        profile = _random_profile(rng)
        decay = profile.depth * profile.avg_gate_time_us
        expected = (
            math.prod(g.success_prob for g in profile.gate_instances)
            * math.exp(-decay / profile.t1_us)
            * math.exp(-decay / profile.t2_us)
        )
        assert esp(profile).value == pytest.approx(expected, rel=1e-10)


def test_esp_is_monotone():
    rng = np.random.default_rng(4)
    for _ in range(100):
        profile = _random_profile(rng)
        base = esp(profile).value

        worse_gate = list(profile.gate_instances)
        worse_gate[0] = _gate("2q", worse_gate[0].success_prob * 0.95)
        assert esp(profile.model_copy(update={"gate_instances": tuple(worse_gate)})).value < base

        assert esp(profile.model_copy(update={"depth": profile.depth + 1})).value <= base
        assert esp(profile.model_copy(update={"avg_gate_time_us": profile.avg_gate_time_us * 1.5})).value <= base
        assert esp(profile.model_copy(update={"t1_us": profile.t1_us / 2})).value <= base
        assert esp(profile.model_copy(update={"t2_us": profile.t2_us / 2})).value <= base


def test_esp_of_two_gates_on_line5(line5):
    circuit = ParamCircuit(n=3, gates=(Gate(op="CX", qubits=(0, 1)), Gate(op="CX", qubits=(1, 2))))
    assert score_map(circuit, CircuitMap(assignment=(0, 1, 2)), line5) == pytest.approx(0.9405, rel=1e-6)


def test_measurements_contribute_readout_but_not_depth(homogeneous5, single_cx):
    measured = ParamCircuit(
        n=2,
        gates=single_cx.gates + (Gate(op="MEASURE", qubits=(0,)), Gate(op="MEASURE", qubits=(1,))),
    )
    circuit_map = CircuitMap(assignment=(0, 1))
    bare = profile_circuit(route(single_cx, circuit_map, homogeneous5), circuit_map, homogeneous5)
    full = profile_circuit(route(measured, circuit_map, homogeneous5), circuit_map, homogeneous5)

    assert full.M == 2
    assert full.depth == bare.depth
    assert full.avg_gate_time_us == bare.avg_gate_time_us
    assert esp(full).value == pytest.approx(esp(bare).value * 0.98 ** 2)


def test_swaps_count_as_three_cx(line5):
    circuit = ParamCircuit(n=3, gates=(Gate(op="CX", qubits=(0, 2)),))
    circuit_map = CircuitMap(assignment=(0, 1, 2))
    profile = profile_circuit(route(circuit, circuit_map, line5), circuit_map, line5)
    assert profile.G2 == 4


def test_esp_rejects_nonpositive_coherence():
    with pytest.raises(DomainError):
        esp(CircuitProfile(t1_us=0.0, t2_us=10.0))


def test_esp_never_underflows_to_zero():
    gates = tuple(_gate("2q", 1e-3) for _ in range(200))
    profile = CircuitProfile(gate_instances=gates, depth=200, avg_gate_time_us=0.1, G2=200, t1_us=1.0, t2_us=1.0)
    assert esp(profile).value > 0


def test_qoncord_examples():
    empty = CircuitProfile(t1_us=100.0, t2_us=100.0)
    assert qoncord_fidelity(empty, QoncordParams(gamma=0.0, beta=0.0, omega=0.0)) == 1.0

    one_cx = CircuitProfile(
        gate_instances=(_gate("2q", 0.99),), depth=1, G2=1, mu2_us=0.5, t1_us=100.0, t2_us=100.0,
    )
    assert qoncord_fidelity(one_cx, QoncordParams(C=0.0, gamma=0.0, beta=0.01, omega=0.0)) == pytest.approx(0.99)

    readout = CircuitProfile(
        gate_instances=(_gate("measure", 0.5, 0.0), _gate("measure", 0.5, 0.0)), M=2, t1_us=100.0, t2_us=100.0,
    )
    assert qoncord_fidelity(readout, QoncordParams(gamma=0.0, beta=0.0, omega=0.5)) == pytest.approx(0.25)


def test_qoncord_matches_closed_form_on_random_inputs():
    rng = np.random.default_rng(0)
    for _ in range(100):
        g1, g2, m, depth = (int(x) for x in rng.integers(1, 20, size=4))
        mu1, mu2 = rng.uniform(0.01, 0.1), rng.uniform(0.1, 1.0)
        t1, t2 = rng.uniform(50, 300, size=2)
        gamma, beta, omega, c = rng.uniform(0, 0.05, size=4)
        instances = (
            tuple(_gate("1q", 0.999, mu1) for _ in range(g1))
            + tuple(_gate("2q", 0.99, mu2) for _ in range(g2))
            + tuple(_gate("measure", 0.98, 0.0) for _ in range(m))
        )
        profile = CircuitProfile(
            gate_instances=instances, depth=depth, G1=g1, G2=g2, M=m, mu1_us=mu1, mu2_us=mu2, t1_us=t1, t2_us=t2,
        )
        expected = (
            math.exp(-(c * depth * (mu1 * g1 + mu2 * g2) / 2) / (t1 * t2))
            * (1 - gamma) ** g1 * (1 - beta) ** g2 * (1 - omega) ** m
        )
        params = QoncordParams(C=c, gamma=gamma, beta=beta, omega=omega)
        assert qoncord_fidelity(profile, params) == pytest.approx(expected, rel=1e-10)


def test_qoncord_params_are_device_means(homogeneous5):
    params = qoncord_params(homogeneous5, C=2.0)
    assert params.C == 2.0
    assert params.gamma == pytest.approx(1e-3)
    assert params.beta == pytest.approx(1e-2)
    assert params.omega == pytest.approx(2e-2)
    assert params.t1_us == pytest.approx(100.0)


def test_scorer_caches_per_assignment(line5, single_cx):
    scorer = EspScorer(single_cx, line5)
    circuit_map = CircuitMap(assignment=(1, 2))
    assert scorer.esp(circuit_map) == pytest.approx(0.99, rel=1e-6)
    assert scorer.routed(circuit_map) is scorer.routed(circuit_map)
    assert scorer.depth(circuit_map) == 1
