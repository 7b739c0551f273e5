"""Simulator service: ideal statevectors, noisy shot trajectories and exact oracles.

Physical qubits of a routed circuit are simulated on local tensor axes in
ascending physical order. Results reported per logical qubit go through the
circuit's final layout, so inserted SWAPs never leak into outputs.
"""

import math
from typing import Optional, Sequence

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg
from pydantic import BaseModel, ConfigDict

from qwalk.core.config import settings
from qwalk.core.exceptions import (
    DimensionMismatchException,
    DomainError,
    ParamLengthMismatchException,
    TooManyQubitsException,
    UnmappedQubitException,
)
from qwalk.core.logging import get_logger
from qwalk.models.circuit import Gate, PauliHamiltonian, RoutedCircuit
from qwalk.models.device import DeviceSnapshot
from qwalk.models.mapping import CircuitMap
from qwalk.models.simulation import ExpectationEstimate, NoiseBinding
from qwalk.services.circuit_service import asap_layers, native_gates

logger = get_logger(__name__)

MAX_STATEVECTOR_QUBITS = 20
MAX_EXACT_QUBITS = 12
MAX_DENSITY_QUBITS = 6
DENSE_EIGEN_DIM = 1024

# Independent RNG streams derived from the run seed
TRAJECTORY_STREAM = 0
READOUT_STREAM = 1
SAMPLE_STREAM = 2

PAULI_MATRICES = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
SWAP_MATRIX = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)

# Measurement basis changes: H for X, S-dagger then H for Y
BASIS_CHANGE = {
    "X": HADAMARD,
    "Y": HADAMARD @ np.diag([1, -1j]).astype(complex),
}


class _Op(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    matrix: np.ndarray
    axes: tuple[int, ...]
    physical: tuple[int, ...]


class _Program(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    layers: list[list[_Op]]
    qubits: list[int]
    logical_axes: list[int]

    @property
    def width(self) -> int:
        return len(self.qubits)


def gate_matrix(gate: Gate, params: Sequence[float]) -> np.ndarray:
    """Unitary of one gate; the first operand of a 2q gate is the high bit."""
    if gate.op == "H":
        return HADAMARD
    if gate.op == "CX":
        return CNOT
    if gate.op == "SWAP":
        return SWAP_MATRIX

    theta = gate.bound_angle(params)
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    if gate.op == "RX":
        return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)
    if gate.op == "RY":
        return np.array([[c, -s], [s, c]], dtype=complex)
    if gate.op == "RZ":
        return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])
    raise DomainError(f"gate {gate.op} has no unitary")


def _apply(tensor: np.ndarray, matrix: np.ndarray, axes: Sequence[int]) -> np.ndarray:
    """Contract a 2^k x 2^k matrix into k tensor axes."""
    k = len(axes)
    op = matrix.reshape((2,) * (2 * k))
    out = np.tensordot(op, tensor, axes=(list(range(k, 2 * k)), list(axes)))
    return np.moveaxis(out, list(range(k)), list(axes))


def _pauli_string_matrix(code: int, k: int) -> np.ndarray:
    letters = []
    for _ in range(k):
        letters.append("IXYZ"[code % 4])
        code //= 4
    matrix = np.eye(1, dtype=complex)
    for letter in reversed(letters):
        matrix = np.kron(matrix, PAULI_MATRICES[letter])
    return matrix


def _pauli_code(pauli: str) -> int:
    return sum("IXYZ".index(letter) * 4 ** i for i, letter in enumerate(pauli))


def _compile(routed: RoutedCircuit, params: Sequence[float], limit: int) -> _Program:
    if len(params) != routed.num_params:
        raise ParamLengthMismatchException(f"expected {routed.num_params} parameters, got {len(params)}")
    qubits = routed.physical_qubits
    if len(qubits) > limit:
        raise TooManyQubitsException(f"{len(qubits)} qubits exceed the simulation bound of {limit}")

    local = {p: i for i, p in enumerate(qubits)}
    gates = [g for g in native_gates(routed.gates) if g.op != "MEASURE"]
    layers = []
    for layer in asap_layers(gates):
        ops = []
        for gate in layer:
            missing = [q for q in gate.qubits if q not in local]
            if missing:
                raise UnmappedQubitException(f"{gate.op} touches qubits {missing} outside the routed circuit's map")
            axes = tuple(local[q] for q in gate.qubits)
            ops.append(_Op(matrix=gate_matrix(gate, params), axes=axes, physical=gate.qubits))
        layers.append(ops)
    return _Program(
        layers=layers,
        qubits=qubits,
        logical_axes=[local[p] for p in routed.final_layout],
    )


def _zero_state(batch: int, width: int) -> np.ndarray:
    state = np.zeros((batch,) + (2,) * width, dtype=complex)
    state[(slice(None),) + (0,) * width] = 1.0
    return state


def _ideal_state(program: _Program) -> np.ndarray:
    state = _zero_state(1, program.width)
    for layer in program.layers:
        for op in layer:
            state = _apply(state, op.matrix, [a + 1 for a in op.axes])
    return state


def simulate_ideal(routed: RoutedCircuit, params: Sequence[float]) -> np.ndarray:
    """
    Exact statevector, indexed by logical bitstrings (qubit 0 most significant).

    Raises:
        TooManyQubitsException: If the circuit is wider than the statevector bound
        ParamLengthMismatchException: If params has the wrong length
    """
    program = _compile(routed, params, MAX_STATEVECTOR_QUBITS)
    state = _ideal_state(program)[0]
    return state.transpose(program.logical_axes).reshape(-1)


# Trajectory noise


def _renormalize(state: np.ndarray) -> np.ndarray:
    norms = np.sqrt(np.sum(np.abs(state) ** 2, axis=tuple(range(1, state.ndim))))
    return state / norms.reshape((-1,) + (1,) * (state.ndim - 1))


def _depolarize(state: np.ndarray, axes: tuple[int, ...], p: float, rng: np.random.Generator) -> np.ndarray:
    """Uniform non-identity Pauli on the gate's support with probability p."""
    k = len(axes)
    batch = state.shape[0]
    hit = rng.random(batch) < p
    choice = rng.integers(1, 4 ** k, size=batch)
    shifted = [a + 1 for a in axes]
    for code in np.unique(choice[hit]):
        idx = np.flatnonzero(hit & (choice == code))
        state[idx] = _apply(state[idx], _pauli_string_matrix(int(code), k), shifted)
    return state


def _damp(state: np.ndarray, axis: int, p: float, rng: np.random.Generator, amplitude: bool) -> np.ndarray:
    """Sample one Kraus branch of amplitude or phase damping per trajectory."""
    low = [slice(None)] * state.ndim
    high = [slice(None)] * state.ndim
    low[axis] = 0
    high[axis] = 1
    low_part, high_part = state[tuple(low)], state[tuple(high)]

    pop1 = np.sum(np.abs(high_part) ** 2, axis=tuple(range(1, high_part.ndim)))
    jump = (rng.random(state.shape[0]) < p * pop1).reshape((-1,) + (1,) * (high_part.ndim - 1))

    out = np.empty_like(state)
    if amplitude:
        out[tuple(low)] = np.where(jump, math.sqrt(p) * high_part, low_part)
        out[tuple(high)] = np.where(jump, 0, math.sqrt(1 - p) * high_part)
    else:
        out[tuple(low)] = np.where(jump, 0, low_part)
        out[tuple(high)] = np.where(jump, math.sqrt(p) * high_part, math.sqrt(1 - p) * high_part)
    return _renormalize(out)


def _layer_time(layer: list[_Op], noise: NoiseBinding) -> float:
    return max((noise.gate_duration(op.physical) for op in layer), default=0.0)


def _run_trajectories(program: _Program, batch: int, noise: NoiseBinding, rng: np.random.Generator) -> np.ndarray:
    state = _zero_state(batch, program.width)
    for layer in program.layers:
        busy: set[int] = set()
        for op in layer:
            state = _apply(state, op.matrix, [a + 1 for a in op.axes])
            p = noise.gate_error(op.physical)
            if p > 0:
                state = _depolarize(state, op.axes, p, rng)
            busy.update(op.axes)

        t_layer = _layer_time(layer, noise)
        for axis, phys in enumerate(program.qubits):
            if axis in busy:
                continue
            p_amp, p_phase = noise.idle_probs(phys, t_layer)
            if p_amp > 0:
                state = _damp(state, axis + 1, p_amp, rng, amplitude=True)
            if p_phase > 0:
                state = _damp(state, axis + 1, p_phase, rng, amplitude=False)
    return state


def _sample_indices(probs: np.ndarray, count: int, rng: np.random.Generator) -> np.ndarray:
    """One basis-state index per shot from (1, D) or (count, D) probabilities."""
    u = rng.random(count)
    cum = np.cumsum(probs, axis=1)
    if probs.shape[0] == 1:
        idx = np.searchsorted(cum[0], u * cum[0, -1], side="right")
    else:
        idx = np.sum(cum <= (u * cum[:, -1])[:, None], axis=1)
    return np.minimum(idx, probs.shape[1] - 1)


def _batch_size(width: int) -> int:
    return max(1, settings.max_amplitudes_per_batch // (2 ** width))


def _states(program: _Program, shots: int, seed: int, noise: Optional[NoiseBinding]):
    """Yield (chunk index, shot count, state batch) covering `shots` trajectories."""
    batch = _batch_size(program.width)
    ideal = _ideal_state(program) if noise is None else None
    for chunk, start in enumerate(range(0, shots, batch)):
        count = min(batch, shots - start)
        if ideal is not None:
            yield chunk, count, ideal
        else:
            rng = np.random.default_rng([seed, TRAJECTORY_STREAM, chunk])
            yield chunk, count, _run_trajectories(program, count, noise, rng)


def expectation(
    routed: RoutedCircuit,
    params: Sequence[float],
    hamiltonian: PauliHamiltonian,
    shots: int,
    seed: int,
    noise: Optional[NoiseBinding] = None,
) -> ExpectationEstimate:
    """
    Shot estimate of <H> for the parameter-bound circuit.

    Each non-identity term is measured after a noiseless basis change, with
    its own readout stream keyed by (seed, term), while all terms share the
    circuit trajectories of a shot. The standard error is that of the
    per-shot total energy.

    Raises:
        DimensionMismatchException: If H and the circuit disagree in size
    """
    if hamiltonian.n != routed.n:
        raise DimensionMismatchException(f"Hamiltonian on {hamiltonian.n} qubits, circuit on {routed.n}")
    if shots < 1:
        raise DomainError(f"shots must be >= 1, got {shots}")

    program = _compile(routed, params, MAX_STATEVECTOR_QUBITS)
    offset = hamiltonian.identity_offset
    terms = [t for t in hamiltonian.terms if not t.is_identity]
    if not terms:
        return ExpectationEstimate(value=offset, shots=shots, std_error=0.0, seed=seed)

    readout = noise or NoiseBinding()
    width = program.width
    energies = np.empty(shots)
    position = 0
    for chunk, count, state in _states(program, shots, seed, noise):
        rotated: dict[tuple, np.ndarray] = {}
        total = np.zeros(count)
        for term in terms:
            support = term.support
            basis = tuple((q, term.pauli[q]) for q in support if term.pauli[q] != "Z")
            if basis not in rotated:
                changed = state
                for q, letter in basis:
                    changed = _apply(changed, BASIS_CHANGE[letter], [program.logical_axes[q] + 1])
                rotated[basis] = np.abs(changed.reshape(changed.shape[0], -1)) ** 2

            rng = np.random.default_rng([seed, READOUT_STREAM, _pauli_code(term.pauli), chunk])
            idx = _sample_indices(rotated[basis], count, rng)
            parity = np.zeros(count, dtype=np.int64)
            for q in support:
                axis = program.logical_axes[q]
                bits = (idx >> (width - 1 - axis)) & 1
                flips = rng.random(count) < readout.readout(program.qubits[axis])
                parity ^= bits ^ flips
            total += term.coeff * (1 - 2 * parity)
        energies[position:position + count] = total
        position += count

    std_error = float(np.std(energies, ddof=1) / math.sqrt(shots)) if shots > 1 else 0.0
    return ExpectationEstimate(
        value=float(offset + energies.mean()),
        shots=shots,
        std_error=std_error,
        seed=seed,
    )


def sample_bitstrings(
    routed: RoutedCircuit,
    params: Sequence[float],
    shots: int,
    seed: int,
    noise: Optional[NoiseBinding] = None,
) -> np.ndarray:
    """Measured logical bitstrings, shape (shots, n), readout flips included."""
    program = _compile(routed, params, MAX_STATEVECTOR_QUBITS)
    readout = noise or NoiseBinding()
    width = program.width
    out = np.empty((shots, routed.n), dtype=np.uint8)
    position = 0
    for chunk, count, state in _states(program, shots, seed, noise):
        rng = np.random.default_rng([seed, SAMPLE_STREAM, chunk])
        idx = _sample_indices(np.abs(state.reshape(state.shape[0], -1)) ** 2, count, rng)
        for q, axis in enumerate(program.logical_axes):
            bits = (idx >> (width - 1 - axis)) & 1
            flips = rng.random(count) < readout.readout(program.qubits[axis])
            out[position:position + count, q] = bits ^ flips
        position += count
    return out


# Exact oracles


def hamiltonian_matrix(hamiltonian: PauliHamiltonian) -> scipy.sparse.csr_matrix:
    """Sparse 2^n x 2^n matrix of H; qubit 0 is the most significant factor."""
    dim = 2 ** hamiltonian.n
    total = scipy.sparse.csr_matrix((dim, dim), dtype=complex)
    for term in hamiltonian.terms:
        matrix = scipy.sparse.identity(1, dtype=complex, format="csr")
        for letter in term.pauli:
            matrix = scipy.sparse.kron(matrix, PAULI_MATRICES[letter], format="csr")
        total = total + term.coeff * matrix
    return total


def exact_ground_energy(hamiltonian: PauliHamiltonian) -> float:
    """
    Minimum eigenvalue of H by direct eigensolve.

    Raises:
        TooManyQubitsException: If H acts on more than 12 qubits
    """
    if hamiltonian.n > MAX_EXACT_QUBITS:
        raise TooManyQubitsException(f"exact eigensolve limited to {MAX_EXACT_QUBITS} qubits, got {hamiltonian.n}")
    matrix = hamiltonian_matrix(hamiltonian)
    if matrix.shape[0] <= DENSE_EIGEN_DIM:
        return float(scipy.linalg.eigvalsh(matrix.toarray())[0])
    values = scipy.sparse.linalg.eigsh(matrix, k=1, which="SA", return_eigenvectors=False)
    return float(values[0].real)


def _channel(rho: np.ndarray, kraus: list[np.ndarray], axes: Sequence[int], width: int) -> np.ndarray:
    bra = [a + width for a in axes]
    return sum(_apply(_apply(rho, k, axes), k.conj(), bra) for k in kraus)


def exact_noisy_expectation(
    routed: RoutedCircuit,
    params: Sequence[float],
    hamiltonian: PauliHamiltonian,
    noise: Optional[NoiseBinding] = None,
) -> float:
    """
    Exact <H> under the trajectory sampler's channels, by density-matrix evolution.

    Symmetric readout flips scale each term by prod(1 - 2 r_q) over its support.

    Raises:
        TooManyQubitsException: If the circuit exceeds 6 qubits
    """
    if hamiltonian.n != routed.n:
        raise DimensionMismatchException(f"Hamiltonian on {hamiltonian.n} qubits, circuit on {routed.n}")
    program = _compile(routed, params, MAX_DENSITY_QUBITS)
    noise = noise or NoiseBinding()
    width = program.width

    rho = np.zeros((2,) * (2 * width), dtype=complex)
    rho[(0,) * (2 * width)] = 1.0
    for layer in program.layers:
        busy: set[int] = set()
        for op in layer:
            rho = _channel(rho, [op.matrix], op.axes, width)
            p = noise.gate_error(op.physical)
            if p > 0:
                k = len(op.axes)
                paulis = [_pauli_string_matrix(c, k) * math.sqrt(p / (4 ** k - 1)) for c in range(1, 4 ** k)]
                rho = _channel(rho, [math.sqrt(1 - p) * np.eye(2 ** k, dtype=complex)] + paulis, op.axes, width)
            busy.update(op.axes)

        t_layer = _layer_time(layer, noise)
        for axis, phys in enumerate(program.qubits):
            if axis in busy:
                continue
            p_amp, p_phase = noise.idle_probs(phys, t_layer)
            if p_amp > 0:
                rho = _channel(rho, [
                    np.array([[1, 0], [0, math.sqrt(1 - p_amp)]], dtype=complex),
                    np.array([[0, math.sqrt(p_amp)], [0, 0]], dtype=complex),
                ], [axis], width)
            if p_phase > 0:
                rho = _channel(rho, [
                    np.array([[1, 0], [0, math.sqrt(1 - p_phase)]], dtype=complex),
                    np.array([[0, 0], [0, math.sqrt(p_phase)]], dtype=complex),
                ], [axis], width)

    dim = 2 ** width
    value = 0.0
    for term in hamiltonian.terms:
        if term.is_identity:
            value += term.coeff
            continue
        applied = rho
        factor = 1.0
        for q in term.support:
            axis = program.logical_axes[q]
            applied = _apply(applied, PAULI_MATRICES[term.pauli[q]], [axis])
            factor *= 1 - 2 * noise.readout(program.qubits[axis])
        value += term.coeff * factor * float(np.trace(applied.reshape(dim, dim)).real)
    return value


def bind_noise(snapshot: DeviceSnapshot, circuit_map: CircuitMap) -> NoiseBinding:
    """Noise parameters of a map's qubits and the couplers between them."""
    qubits = sorted(circuit_map.physical_set)
    edges = [e for e in snapshot.edge_props if e.u in circuit_map.physical_set and e.v in circuit_map.physical_set]
    return NoiseBinding(
        sq_error={q: snapshot.qubits[q].sq_error for q in qubits},
        readout_error={q: snapshot.qubits[q].readout_error for q in qubits},
        t1_us={q: snapshot.qubits[q].t1_us for q in qubits},
        t2_us={q: snapshot.qubits[q].t2_us for q in qubits},
        sq_duration_us={q: snapshot.qubits[q].sq_duration_us for q in qubits},
        tq_error={(min(e.u, e.v), max(e.u, e.v)): e.tq_error for e in edges},
        tq_duration_us={(min(e.u, e.v), max(e.u, e.v)): e.tq_duration_us for e in edges},
    )
