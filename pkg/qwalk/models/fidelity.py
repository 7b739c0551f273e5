"""Pydantic models for circuit profiles and fidelity estimates."""

from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

GateKind = Literal["1q", "2q", "measure"]


class GateInstance(BaseModel):
    """One physical gate with its success probability and duration."""

    model_config = ConfigDict(frozen=True)

    kind: GateKind
    physical_qubits: tuple[int, ...]
    success_prob: float = Field(..., gt=0, le=1)
    duration_us: float = Field(..., ge=0)


class CircuitProfile(BaseModel):
    """Everything the fidelity estimators need about a mapped circuit."""

    model_config = ConfigDict(frozen=True)

    gate_instances: tuple[GateInstance, ...] = ()
    depth: int = Field(default=0, ge=0)
    avg_gate_time_us: float = Field(default=0.0, ge=0)
    G1: int = Field(default=0, ge=0)
    G2: int = Field(default=0, ge=0)
    M: int = Field(default=0, ge=0)
    mu1_us: float = Field(default=0.0, ge=0)
    mu2_us: float = Field(default=0.0, ge=0)
    t1_us: float
    t2_us: float

    @model_validator(mode="after")
    def check_counts(self) -> "CircuitProfile":
        kinds = [g.kind for g in self.gate_instances]
        if (kinds.count("1q"), kinds.count("2q"), kinds.count("measure")) != (self.G1, self.G2, self.M):
            raise ValueError("gate counts disagree with gate_instances")
        if self.G1 + self.G2 > 0 and self.depth < 1:
            raise ValueError("a profile with gates has depth >= 1")
        return self


class EspValue(BaseModel):
    """Estimated success probability in (0, 1]."""

    model_config = ConfigDict(frozen=True)

    value: float = Field(..., gt=0, le=1)

    def __float__(self) -> float:
        return self.value


class QoncordParams(BaseModel):
    """Inputs of the Qoncord execution fidelity estimator.

    gamma, beta and omega are device-uniform 1q, 2q and readout error
    rates. T1/T2 default to the profile's mapped-qubit means.
    """

    C: float = Field(default=1.0, ge=0)
    gamma: float = Field(..., ge=0, lt=1)
    beta: float = Field(..., ge=0, lt=1)
    omega: float = Field(..., ge=0, lt=1)
    t1_us: Optional[float] = None
    t2_us: Optional[float] = None
