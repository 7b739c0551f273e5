import networkx as nx
import numpy as np
import pytest

from qwalk.core.config import settings
from qwalk.core.exceptions import EmptyGraphException, InvalidArityException, LengthMismatchException, ParseException
from qwalk.models.circuit import Gate, ParamCircuit
from qwalk.models.mapping import CircuitMap
from qwalk.services.circuit_service import (
    asap_layers,
    efficient_su2,
    graph_family,
    load_graph,
    load_hamiltonian,
    maxcut_hamiltonian,
    measure_all,
    native_gates,
    qaoa_maxcut,
    random_connected_graph,
    route,
)
from qwalk.services.simulator_service import exact_ground_energy, hamiltonian_matrix


def test_efficient_su2_single_qubit():
    circuit = efficient_su2(1, 0)
    assert [g.op for g in circuit.gates] == ["RY", "RZ"]
    assert circuit.num_params == 2


def test_efficient_su2_counts():
    circuit = efficient_su2(4, 3)
    assert circuit.num_params == 32
    assert circuit.count("CX") == 9


def test_efficient_su2_gate_sequence():
    circuit = efficient_su2(2, 1)
    ops = [(g.op, g.qubits) for g in circuit.gates]
    assert ops == [
        ("RY", (0,)), ("RY", (1,)), ("RZ", (0,)), ("RZ", (1,)), ("CX", (0, 1)),
        ("RY", (0,)), ("RY", (1,)), ("RZ", (0,)), ("RZ", (1,)),
    ]


def test_efficient_su2_rejects_bad_arity():
    with pytest.raises(InvalidArityException):
        efficient_su2(0, 1)


def test_measure_all_is_idempotent():
    measured = measure_all(efficient_su2(2, 1))
    assert measured.count("MEASURE") == 2
    assert measure_all(measured) == measured


def test_maxcut_minimum_is_negative_max_cut():
    triangle = nx.cycle_graph(3)
    assert exact_ground_energy(maxcut_hamiltonian(triangle)) == pytest.approx(-2.0)
    assert exact_ground_energy(maxcut_hamiltonian(nx.path_graph(2))) == pytest.approx(-1.0)


def test_qaoa_on_ten_vertex_instance():
    graph = random_connected_graph(10, 21, seed=0)
    circuit, hamiltonian = qaoa_maxcut(graph)
    assert graph.number_of_edges() == 21
    assert circuit.num_params == 2
    assert circuit.count("CX") == 42
    assert hamiltonian.n == 10


def test_qaoa_rejects_empty_graph():
    graph = nx.empty_graph(3)
    with pytest.raises(EmptyGraphException):
        qaoa_maxcut(graph)


def test_load_hamiltonian_merges_repeated_terms(tmp_path):
    path = tmp_path / "h.txt"
    path.write_text("1.0 ZZ\n2.0 ZZ\n")
    hamiltonian = load_hamiltonian(path)
    assert hamiltonian.n == 2
    assert len(hamiltonian.terms) == 1
    assert hamiltonian.terms[0].coeff == pytest.approx(3.0)


def test_load_hamiltonian_errors(tmp_path):
    path = tmp_path / "h.txt"
    path.write_text("1.0 ZQ\n")
    with pytest.raises(ParseException):
        load_hamiltonian(path)

    path.write_text("1.0 ZZ\n0.5 Z\n")
    with pytest.raises(LengthMismatchException):
        load_hamiltonian(path)


def test_load_graph_defaults_weight(tmp_path):
    path = tmp_path / "g.txt"
    path.write_text("0 1\n1 2 2.5\n")
    graph = load_graph(path)
    assert graph[0][1]["weight"] == 1.0
    assert graph[1][2]["weight"] == 2.5


@pytest.mark.parametrize("kind, edges", [("path", 13), ("cycle", 14), ("star", 13), ("two-star", 13), ("ladder", 19)])
def test_graph_families_at_fourteen_vertices(kind, edges):
    graph = graph_family(kind, 14)
    assert graph.number_of_nodes() == 14
    assert graph.number_of_edges() == edges
    assert nx.is_connected(graph)


def test_adjacent_cx_needs_no_swap(line5):
    circuit = ParamCircuit(n=2, gates=(Gate(op="CX", qubits=(0, 1)),))
    assert route(circuit, CircuitMap(assignment=(1, 2)), line5).inserted_swap_count == 0


def test_distant_cx_inserts_one_swap(line5):
    circuit = ParamCircuit(n=3, gates=(Gate(op="CX", qubits=(0, 2)),))
    routed = route(circuit, CircuitMap(assignment=(0, 1, 2)), line5)
    assert routed.inserted_swap_count == 1
    assert routed.final_layout == (1, 0, 2)
    assert routed.gates[-1].qubits == (1, 2)


def test_linear_ansatz_on_path_map_needs_no_swaps(line5):
    routed = route(efficient_su2(4, 3), CircuitMap(assignment=(1, 2, 3, 4)), line5)
    assert routed.inserted_swap_count == 0


def test_measurements_follow_the_final_layout(line5):
    circuit = measure_all(ParamCircuit(n=3, gates=(Gate(op="CX", qubits=(0, 2)),)))
    routed = route(circuit, CircuitMap(assignment=(0, 1, 2)), line5)
    measured = {g.label: g.qubits[0] for g in routed.gates if g.op == "MEASURE"}
    assert measured == {0: 1, 1: 0, 2: 2}


def test_route_rejects_wrong_map_size(line5):
    with pytest.raises(InvalidArityException):
        route(efficient_su2(3, 1), CircuitMap(assignment=(0, 1)), line5)


def test_swap_expands_to_three_cx_and_layers():
    gates = native_gates([Gate(op="SWAP", qubits=(0, 1)), Gate(op="RY", qubits=(2,), angle=0.3)])
    assert [g.op for g in gates] == ["CX", "CX", "CX", "RY"]
    assert len(asap_layers(gates)) == 3


def _two_electron_minimum(hamiltonian):
    matrix = hamiltonian_matrix(hamiltonian).toarray()
    sector = [i for i in range(matrix.shape[0]) if bin(i).count("1") == 2]
    return float(np.linalg.eigvalsh(matrix[np.ix_(sector, sector)])[0])


@pytest.mark.parametrize("name, qubits, ground, two_electron, hartree_fock", [
    ("heh", 4, -3.016324472348568, -2.851600506520028, -2.841974545529953),
    ("h3p", 6, -1.2974853700244728, -1.2622476942403285, -1.2377308136398333),
])
def test_bundled_molecules_match_reference_energies(name, qubits, ground, two_electron, hartree_fock):
    hamiltonian = load_hamiltonian(settings.resolved_data_dir() / "hamiltonians" / f"{name}.txt")
    assert hamiltonian.n == qubits
    assert exact_ground_energy(hamiltonian) == pytest.approx(ground, abs=1e-6)
    assert _two_electron_minimum(hamiltonian) == pytest.approx(two_electron, abs=1e-6)

    # Both electrons in the lowest spatial orbital: qubits 0 and 1 set
    occupied = 0b11 << (qubits - 2)
    diagonal = hamiltonian_matrix(hamiltonian).diagonal().real
    assert diagonal[occupied] == pytest.approx(hartree_fock, abs=1e-6)
