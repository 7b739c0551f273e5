"""Pydantic models for bound noise and expectation estimates."""

import math

from pydantic import BaseModel, ConfigDict, Field, model_validator

from qwalk.models.device import edge_key


class NoiseBinding(BaseModel):
    """Noise parameters of the physical qubits a circuit runs on.

    Missing entries mean a noiseless qubit or pair: zero error, zero
    duration and infinite coherence.
    """

    model_config = ConfigDict(frozen=True)

    sq_error: dict[int, float] = Field(default_factory=dict)
    tq_error: dict[tuple[int, int], float] = Field(default_factory=dict)
    readout_error: dict[int, float] = Field(default_factory=dict)
    t1_us: dict[int, float] = Field(default_factory=dict)
    t2_us: dict[int, float] = Field(default_factory=dict)
    sq_duration_us: dict[int, float] = Field(default_factory=dict)
    tq_duration_us: dict[tuple[int, int], float] = Field(default_factory=dict)

    @model_validator(mode="after")
    def check_probabilities(self) -> "NoiseBinding":
        for name in ("sq_error", "tq_error", "readout_error"):
            for key, p in getattr(self, name).items():
                if not 0 <= p <= 1:
                    raise ValueError(f"{name}[{key}] = {p} is not a probability")
        for name in ("t1_us", "t2_us"):
            for key, t in getattr(self, name).items():
                if t <= 0:
                    raise ValueError(f"{name}[{key}] must be positive")
        return self

    def gate_error(self, qubits: tuple[int, ...]) -> float:
        if len(qubits) == 1:
            return self.sq_error.get(qubits[0], 0.0)
        return self.tq_error.get(edge_key(*qubits), 0.0)

    def gate_duration(self, qubits: tuple[int, ...]) -> float:
        if len(qubits) == 1:
            return self.sq_duration_us.get(qubits[0], 0.0)
        return self.tq_duration_us.get(edge_key(*qubits), 0.0)

    def readout(self, q: int) -> float:
        return self.readout_error.get(q, 0.0)

    def idle_probs(self, q: int, t_layer_us: float) -> tuple[float, float]:
        """(amplitude damping, phase damping) probabilities for an idle span."""
        if t_layer_us <= 0:
            return 0.0, 0.0
        t1 = self.t1_us.get(q, math.inf)
        t2 = self.t2_us.get(q, math.inf)
        return 1 - math.exp(-t_layer_us / t1), 1 - math.exp(-t_layer_us / t2)


class ExpectationEstimate(BaseModel):
    """Shot estimate of a Hamiltonian expectation."""

    model_config = ConfigDict(frozen=True)

    value: float
    shots: int = Field(..., ge=1)
    std_error: float = Field(..., ge=0)
    seed: int
