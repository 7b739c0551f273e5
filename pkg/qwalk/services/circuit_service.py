"""Circuit service: ansatz builders, Hamiltonian and graph loading, routing."""

import itertools
from pathlib import Path
from typing import Union

import networkx as nx
from pydantic import ValidationError

from qwalk.core.exceptions import (
    EmptyGraphException,
    InvalidArityException,
    LengthMismatchException,
    ParseException,
    UnroutableGateException,
)
from qwalk.core.logging import get_logger
from qwalk.models.circuit import Gate, ParamCircuit, PauliHamiltonian, RoutedCircuit
from qwalk.models.device import DeviceSnapshot
from qwalk.models.mapping import CircuitMap

logger = get_logger(__name__)


# Ansatz builders


def efficient_su2(n: int, reps: int = 3) -> ParamCircuit:
    """
    Hardware-efficient SU(2) ansatz.

    (reps + 1) rotation layers of RY then RZ on every qubit, with a linear
    CX(q, q+1) entangling layer between consecutive rotation layers.
    Parameters are indexed in circuit order: 2 * n * (reps + 1) in total.

    Raises:
        InvalidArityException: If n < 1 or reps < 0
    """
    if n < 1 or reps < 0:
        raise InvalidArityException(f"efficient_su2 needs n >= 1 and reps >= 0, got n={n}, reps={reps}")

    gates: list[Gate] = []
    index = 0
    for layer in range(reps + 1):
        for op in ("RY", "RZ"):
            for q in range(n):
                gates.append(Gate(op=op, qubits=(q,), param_index=index))
                index += 1
        if layer < reps:
            gates.extend(Gate(op="CX", qubits=(q, q + 1)) for q in range(n - 1))
    return ParamCircuit(n=n, gates=gates, num_params=index)


def maxcut_hamiltonian(graph: nx.Graph) -> PauliHamiltonian:
    """Sum over edges of (w/2)(Z_u Z_v - I); its minimum is -(max cut)."""
    n = graph.number_of_nodes()
    pairs: list[tuple[float, str]] = []
    for u, v, data in sorted(graph.edges(data=True)):
        w = float(data.get("weight", 1.0))
        zz = ["I"] * n
        zz[u] = "Z"
        zz[v] = "Z"
        pairs.append((w / 2, "".join(zz)))
        pairs.append((-w / 2, "I" * n))
    return PauliHamiltonian.from_pairs(pairs)


def qaoa_maxcut(graph: nx.Graph, p: int = 1) -> tuple[ParamCircuit, PauliHamiltonian]:
    """
    One-layer QAOA for MaxCut.

    Hadamards, then CX-RZ-CX per edge with RZ angle 2w*gamma (parameter 0),
    then RX(2*beta) on every qubit (parameter 1).

    Raises:
        EmptyGraphException: If the graph has no edges
        InvalidArityException: If p != 1
    """
    if p != 1:
        raise InvalidArityException(f"only one-layer QAOA is supported, got p={p}")
    if graph.number_of_edges() == 0:
        raise EmptyGraphException("MaxCut instance has no edges")

    n = graph.number_of_nodes()
    if sorted(graph.nodes) != list(range(n)):
        raise InvalidArityException("graph vertices must be labelled 0..n-1")

    gates = [Gate(op="H", qubits=(q,)) for q in range(n)]
    for u, v, data in sorted(graph.edges(data=True)):
        w = float(data.get("weight", 1.0))
        gates.append(Gate(op="CX", qubits=(u, v)))
        gates.append(Gate(op="RZ", qubits=(v,), param_index=0, scale=2 * w))
        gates.append(Gate(op="CX", qubits=(u, v)))
    gates.extend(Gate(op="RX", qubits=(q,), param_index=1, scale=2.0) for q in range(n))

    return ParamCircuit(n=n, gates=gates, num_params=2), maxcut_hamiltonian(graph)


def measure_all(circuit: ParamCircuit) -> ParamCircuit:
    """Append a terminal measurement on every logical qubit."""
    if circuit.count("MEASURE"):
        return circuit
    gates = list(circuit.gates) + [Gate(op="MEASURE", qubits=(q,), label=q) for q in range(circuit.n)]
    return ParamCircuit(n=circuit.n, gates=gates, num_params=circuit.num_params)


# File loaders


def load_hamiltonian(path: Union[str, Path]) -> PauliHamiltonian:
    """
    Load a Hamiltonian from "coeff PAULISTRING" lines ('#' comments).

    Raises:
        ParseException: If a line is malformed or uses a non-Pauli letter
        LengthMismatchException: If Pauli strings differ in length
    """
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except FileNotFoundError:
        raise ParseException(f"Hamiltonian file not found: {path}")

    pairs: list[tuple[float, str]] = []
    for lineno, line in enumerate(lines, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ParseException(f"{path}:{lineno}: expected 'coeff PAULISTRING', got '{line}'")
        try:
            coeff = float(parts[0])
        except ValueError:
            raise ParseException(f"{path}:{lineno}: bad coefficient '{parts[0]}'")
        pauli = parts[1].upper()
        if set(pauli) - set("IXYZ"):
            raise ParseException(f"{path}:{lineno}: invalid Pauli string '{parts[1]}'")
        pairs.append((coeff, pauli))

    if not pairs:
        raise ParseException(f"Hamiltonian file {path} has no terms")
    lengths = {len(p) for _, p in pairs}
    if len(lengths) > 1:
        raise LengthMismatchException(f"{path}: Pauli strings have mixed lengths {sorted(lengths)}")

    try:
        return PauliHamiltonian.from_pairs(pairs)
    except ValidationError as e:
        raise ParseException(f"{path}: {e.errors()[0]['msg']}")


def load_graph(path: Union[str, Path]) -> nx.Graph:
    """Load a MaxCut graph from "u v [weight]" lines (default weight 1)."""
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except FileNotFoundError:
        raise ParseException(f"Graph file not found: {path}")

    graph = nx.Graph()
    for lineno, line in enumerate(lines, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) not in (2, 3):
            raise ParseException(f"{path}:{lineno}: expected 'u v [weight]', got '{line}'")
        try:
            u, v = int(parts[0]), int(parts[1])
            w = float(parts[2]) if len(parts) == 3 else 1.0
        except ValueError:
            raise ParseException(f"{path}:{lineno}: malformed edge '{line}'")
        if u == v:
            raise ParseException(f"{path}:{lineno}: self-loop on vertex {u}")
        graph.add_edge(u, v, weight=w)

    if graph.number_of_nodes():
        graph.add_nodes_from(range(max(graph.nodes) + 1))
    return graph


def graph_family(kind: str, n: int) -> nx.Graph:
    """
    MaxCut test graphs: path, cycle, star, two-star (two stars joined by a
    bridge edge between their centers) and ladder (n must be even).
    """
    if kind == "path":
        graph = nx.path_graph(n)
    elif kind == "cycle":
        graph = nx.cycle_graph(n)
    elif kind == "star":
        graph = nx.star_graph(n - 1)
    elif kind == "two-star":
        left = n // 2
        graph = nx.Graph()
        graph.add_edges_from((0, leaf) for leaf in range(1, left))
        graph.add_edges_from((left, leaf) for leaf in range(left + 1, n))
        graph.add_edge(0, left)
    elif kind == "ladder":
        if n % 2:
            raise InvalidArityException(f"ladder graph needs an even vertex count, got {n}")
        graph = nx.ladder_graph(n // 2)
    else:
        raise ParseException(f"Unknown graph family '{kind}'")
    nx.set_edge_attributes(graph, 1.0, "weight")
    return graph


def random_connected_graph(n: int, m: int, seed: int = 0) -> nx.Graph:
    """First connected G(n, m) graph at or after `seed`."""
    for s in itertools.count(seed):
        graph = nx.gnm_random_graph(n, m, seed=s)
        if nx.is_connected(graph):
            nx.set_edge_attributes(graph, 1.0, "weight")
            return graph
    raise AssertionError("unreachable")


# Routing


def native_gates(gates) -> list[Gate]:
    """Expand each SWAP into three CX gates on the same pair."""
    out: list[Gate] = []
    for gate in gates:
        if gate.op == "SWAP":
            a, b = gate.qubits
            out.extend([
                Gate(op="CX", qubits=(a, b)),
                Gate(op="CX", qubits=(b, a)),
                Gate(op="CX", qubits=(a, b)),
            ])
        else:
            out.append(gate)
    return out


def asap_layers(gates) -> list[list[Gate]]:
    """ASAP layering of non-measurement gates."""
    layers: list[list[Gate]] = []
    ready: dict[int, int] = {}
    for gate in gates:
        if gate.op == "MEASURE":
            continue
        layer = max((ready.get(q, 0) for q in gate.qubits), default=0)
        if layer == len(layers):
            layers.append([])
        layers[layer].append(gate)
        for q in gate.qubits:
            ready[q] = layer + 1
    return layers


def _shortest_path(subgraph: nx.Graph, source: int, target: int) -> list[int]:
    try:
        paths = list(nx.all_shortest_paths(subgraph, source, target))
    except nx.NetworkXNoPath:
        raise UnroutableGateException(f"No path between physical qubits {source} and {target} inside the map")
    return min(paths)


def route(circuit: ParamCircuit, circuit_map: CircuitMap, snapshot: DeviceSnapshot) -> RoutedCircuit:
    """
    Place a logical circuit on a map, inserting SWAPs for distant operands.

    For a 2q gate on non-adjacent physical qubits the first operand is
    swapped along the lexicographically smallest shortest path inside the
    map until it neighbors the second. The resulting logical permutation
    relabels later gates and measurements.

    Raises:
        InvalidArityException: If the map size differs from circuit.n
        UnroutableGateException: If operands lie in different components
    """
    if len(circuit_map) != circuit.n:
        raise InvalidArityException(
            f"map of {len(circuit_map)} qubits cannot host a {circuit.n}-qubit circuit"
        )

    subgraph = snapshot.graph().subgraph(circuit_map.assignment)
    l2p = list(circuit_map.assignment)
    p2l = {p: q for q, p in enumerate(l2p)}

    routed: list[Gate] = []
    swaps = 0
    for gate in circuit.gates:
        if gate.op == "MEASURE":
            routed.append(gate.model_copy(update={"qubits": (l2p[gate.qubits[0]],), "label": gate.qubits[0]}))
            continue
        if len(gate.qubits) == 1:
            routed.append(gate.model_copy(update={"qubits": (l2p[gate.qubits[0]],)}))
            continue

        a, b = gate.qubits
        if not subgraph.has_edge(l2p[a], l2p[b]):
            path = _shortest_path(subgraph, l2p[a], l2p[b])
            for x, y in zip(path[:-2], path[1:-1]):
                routed.append(Gate(op="SWAP", qubits=(x, y)))
                swaps += 1
                qx, qy = p2l[x], p2l[y]
                l2p[qx], l2p[qy] = y, x
                p2l[x], p2l[y] = qy, qx
        routed.append(gate.model_copy(update={"qubits": (l2p[a], l2p[b])}))

    return RoutedCircuit(
        n=circuit.n,
        gates=routed,
        num_params=circuit.num_params,
        source_map=circuit_map,
        final_layout=tuple(l2p),
        inserted_swap_count=swaps,
    )


def unrouted(circuit: ParamCircuit) -> RoutedCircuit:
    """Identity-layout wrapper used for ideal reference simulations."""
    identity = CircuitMap(assignment=tuple(range(circuit.n)))
    gates = [
        g.model_copy(update={"label": g.qubits[0]}) if g.op == "MEASURE" else g
        for g in circuit.gates
    ]
    return RoutedCircuit(
        n=circuit.n,
        gates=gates,
        num_params=circuit.num_params,
        source_map=identity,
        final_layout=identity.assignment,
    )
