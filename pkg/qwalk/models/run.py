"""Pydantic models for problems, technique settings and run records."""

from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from qwalk.core.config import settings
from qwalk.models.circuit import ParamCircuit, PauliHamiltonian
from qwalk.models.optimizer import OptimizerMethod
from qwalk.models.schedule import ScheduleKind

Technique = Literal["NEST", "BestMap", "Qoncord", "RawSchedule"]
Transition = Literal["walk", "jump"]


class Problem(BaseModel):
    """A VQA benchmark: ansatz, observable and optional MaxCut graph."""

    model_config = ConfigDict(frozen=True)

    name: str
    kind: Literal["vqe", "qaoa"] = "vqe"
    circuit: ParamCircuit
    hamiltonian: PauliHamiltonian
    edges: Optional[tuple[tuple[int, int, float], ...]] = None

    @model_validator(mode="after")
    def check_sizes(self) -> "Problem":
        if self.circuit.n != self.hamiltonian.n:
            raise ValueError(f"circuit has {self.circuit.n} qubits, Hamiltonian {self.hamiltonian.n}")
        if self.kind == "qaoa" and not self.edges:
            raise ValueError("a QAOA problem needs its graph edges")
        return self

    @property
    def n(self) -> int:
        return self.circuit.n


class TechniqueConfig(BaseModel):
    """Technique-specific run settings."""

    model_config = ConfigDict(frozen=True)

    technique: Technique = "NEST"
    schedule: ScheduleKind = "InvertedReLU"
    alpha: float = Field(default_factory=lambda: settings.alpha, gt=0, lt=1)
    beta: float = Field(default_factory=lambda: settings.beta, gt=0, lt=1)
    gamma: float = Field(default_factory=lambda: settings.gamma, gt=0, lt=1)
    transition: Transition = "walk"
    cycles: int = Field(default_factory=lambda: settings.cycles, ge=0)
    iters_per_cycle: int = Field(default_factory=lambda: settings.iters_per_cycle, ge=0)
    shots: int = Field(default_factory=lambda: settings.shots, ge=1)
    noisy: bool = True

    method: OptimizerMethod = "COBYLA"
    initial_step: float = Field(default_factory=lambda: settings.initial_step, gt=0)
    window: int = Field(default_factory=lambda: settings.window, ge=1)
    min_rel_improvement: float = Field(default_factory=lambda: settings.min_rel_improvement, gt=0, lt=1)
    default_tolerance: float = Field(default_factory=lambda: settings.default_tolerance, gt=0)
    max_evals: int = Field(default_factory=lambda: settings.max_evals, ge=1)
    qoncord_low_step: float = Field(default_factory=lambda: settings.qoncord_low_step, gt=0)
    qoncord_low_tolerance: float = Field(default_factory=lambda: settings.qoncord_low_tolerance, gt=0)
    qoncord_high_step: float = Field(default_factory=lambda: settings.qoncord_high_step, gt=0)
    qoncord_constant: float = Field(default_factory=lambda: settings.qoncord_constant, ge=0)
    qaoa_samples: int = Field(default_factory=lambda: settings.qaoa_samples, ge=1)

    @property
    def devices_required(self) -> int:
        return 2 if self.technique == "Qoncord" else 1


class IterationRow(BaseModel):
    """One optimizer iteration of a run."""

    model_config = ConfigDict(frozen=True)

    iter: int = Field(..., ge=1)
    cycle: int = Field(..., ge=0)
    phase: int = Field(default=0, ge=0)
    device: str
    energy: float
    map: str
    map_esp: float
    circuit_depth: int


class PhaseInfo(BaseModel):
    """Device, map and optimizer settings of one run phase."""

    model_config = ConfigDict(frozen=True)

    device: str
    map: str
    esp: float
    initial_step: float
    tolerance: Optional[float] = None
    iterations: int
    estimated_fidelity: Optional[float] = None


class MapUse(BaseModel):
    """A stretch of consecutive iterations on one map."""

    model_config = ConfigDict(frozen=True)

    phase: int
    device: str
    map: str
    esp: float
    first_iter: int
    last_iter: int


class RunRecord(BaseModel):
    """Full trajectory and summary of one VQA run."""

    technique: str
    seed: int
    problem: str
    qubits: int
    rows: list[IterationRow]
    best_energy: float
    iterations: int
    maps_used: list[MapUse]
    mean_esp: float
    mean_depth: float
    terminated_by: Optional[str] = None
    mapping_time_s: float = 0.0
    phases: list[PhaseInfo] = Field(default_factory=list)
    final_params: tuple[float, ...] = ()
    cut_value: Optional[float] = None
    job_id: Optional[str] = None

    @property
    def energies(self) -> list[float]:
        return [r.energy for r in self.rows]


class ConcurrencyReport(BaseModel):
    """Throughput accounting of a multi-programmed run."""

    k: int = Field(..., ge=1)
    job_ids: list[str]
    iterations: list[int]
    mean_iterations: float
    throughput: float
    zones: dict[str, str]
    disjoint_every_tick: bool
