"""Pydantic models for parameterized circuits, routed circuits and Hamiltonians."""

import math
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from qwalk.models.mapping import CircuitMap

GateOp = Literal["RY", "RZ", "RX", "H", "CX", "SWAP", "MEASURE"]

ONE_QUBIT_OPS = frozenset({"RY", "RZ", "RX", "H"})
TWO_QUBIT_OPS = frozenset({"CX", "SWAP"})
ROTATION_OPS = frozenset({"RY", "RZ", "RX"})
PAULI_LETTERS = frozenset("IXYZ")


class Gate(BaseModel):
    """One gate instance.

    Rotation angles are ``scale * params[param_index]`` when the gate is
    parameterized, ``angle`` otherwise. MEASURE gates carry the logical
    qubit they report in ``label``.
    """

    model_config = ConfigDict(frozen=True)

    op: GateOp
    qubits: tuple[int, ...]
    param_index: Optional[int] = Field(default=None, ge=0)
    scale: float = 1.0
    angle: float = 0.0
    label: Optional[int] = None

    @model_validator(mode="after")
    def check_arity(self) -> "Gate":
        expected = 2 if self.op in TWO_QUBIT_OPS else 1
        if len(self.qubits) != expected:
            raise ValueError(f"{self.op} acts on {expected} qubit(s), got {self.qubits}")
        if expected == 2 and self.qubits[0] == self.qubits[1]:
            raise ValueError(f"{self.op} operands must differ, got {self.qubits}")
        if self.param_index is not None and self.op not in ROTATION_OPS:
            raise ValueError(f"{self.op} takes no parameter")
        return self

    def bound_angle(self, params) -> float:
        if self.param_index is None:
            return self.angle
        return self.scale * float(params[self.param_index])


def _check_gate_list(gates: list[Gate], width: int, num_params: int, what: str) -> None:
    used = set()
    measured = False
    for gate in gates:
        if any(q < 0 or q >= width for q in gate.qubits):
            raise ValueError(f"{what}: gate {gate.op}{gate.qubits} outside {width} qubits")
        if gate.op == "MEASURE":
            measured = True
        elif measured:
            raise ValueError(f"{what}: {gate.op} after a measurement; measurements must be terminal")
        if gate.param_index is not None:
            used.add(gate.param_index)
    if used != set(range(num_params)):
        raise ValueError(f"{what}: parameter indices {sorted(used)} are not dense in [0, {num_params})")


class ParamCircuit(BaseModel):
    """Gate-list circuit over logical qubits with symbolic parameters."""

    model_config = ConfigDict(frozen=True)

    n: int = Field(..., ge=1)
    gates: tuple[Gate, ...] = ()
    num_params: int = Field(default=0, ge=0)

    @model_validator(mode="after")
    def check_gates(self) -> "ParamCircuit":
        _check_gate_list(list(self.gates), self.n, self.num_params, "circuit")
        return self

    def count(self, op: str) -> int:
        return sum(1 for g in self.gates if g.op == op)


class RoutedCircuit(BaseModel):
    """Circuit on physical qubits produced by routing a ParamCircuit onto a map.

    ``final_layout[q]`` is the physical qubit holding logical qubit ``q`` at
    the end of the circuit (after inserted SWAPs).
    """

    model_config = ConfigDict(frozen=True)

    n: int = Field(..., ge=1)
    gates: tuple[Gate, ...] = ()
    num_params: int = Field(default=0, ge=0)
    source_map: CircuitMap
    final_layout: tuple[int, ...]
    inserted_swap_count: int = Field(default=0, ge=0)

    @model_validator(mode="after")
    def check_layout(self) -> "RoutedCircuit":
        if len(self.source_map.assignment) != self.n or len(self.final_layout) != self.n:
            raise ValueError("layouts must assign every logical qubit")
        if sorted(self.final_layout) != sorted(self.source_map.assignment):
            raise ValueError("final layout must permute the source map's qubits")
        return self

    @property
    def physical_qubits(self) -> list[int]:
        return sorted(self.source_map.assignment)


class PauliTerm(BaseModel):
    """Weighted Pauli string; character i acts on logical qubit i."""

    model_config = ConfigDict(frozen=True)

    coeff: float
    pauli: str

    @model_validator(mode="after")
    def check_term(self) -> "PauliTerm":
        if not math.isfinite(self.coeff):
            raise ValueError(f"coefficient of {self.pauli} is not finite")
        bad = set(self.pauli) - PAULI_LETTERS
        if bad:
            raise ValueError(f"invalid Pauli letters {sorted(bad)} in '{self.pauli}'")
        return self

    @property
    def is_identity(self) -> bool:
        return set(self.pauli) <= {"I"}

    @property
    def support(self) -> list[int]:
        return [i for i, p in enumerate(self.pauli) if p != "I"]


class PauliHamiltonian(BaseModel):
    """Observable H = sum_j c_j P_j with merged, unique Pauli strings."""

    model_config = ConfigDict(frozen=True)

    n: int = Field(..., ge=1)
    terms: tuple[PauliTerm, ...]

    @model_validator(mode="after")
    def check_terms(self) -> "PauliHamiltonian":
        seen = set()
        for term in self.terms:
            if len(term.pauli) != self.n:
                raise ValueError(f"Pauli string '{term.pauli}' has length {len(term.pauli)}, expected {self.n}")
            if term.pauli in seen:
                raise ValueError(f"duplicate Pauli string '{term.pauli}'")
            seen.add(term.pauli)
        return self

    @classmethod
    def from_pairs(cls, pairs: list[tuple[float, str]]) -> "PauliHamiltonian":
        """Build from (coeff, pauli) pairs, merging repeated strings in first-seen order."""
        if not pairs:
            raise ValueError("a Hamiltonian needs at least one term")
        merged: dict[str, float] = {}
        for coeff, pauli in pairs:
            merged[pauli] = merged.get(pauli, 0.0) + float(coeff)
        n = len(next(iter(merged)))
        return cls(n=n, terms=tuple(PauliTerm(coeff=c, pauli=p) for p, c in merged.items()))

    @property
    def identity_offset(self) -> float:
        return sum(t.coeff for t in self.terms if t.is_identity)
