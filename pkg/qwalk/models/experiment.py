"""Pydantic models for experiment suite configs."""

from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from qwalk.core.config import settings
from qwalk.models.optimizer import OptimizerMethod
from qwalk.models.run import Technique, TechniqueConfig, Transition
from qwalk.models.schedule import ScheduleKind


class BenchmarkSpec(BaseModel):
    """
    The problem an experiment optimizes.

    VQE benchmarks name a Hamiltonian (bundled name or file path) and use an
    EfficientSU2 ansatz of `reps` repetitions. QAOA benchmarks take their
    graph from a file, a named family of `n` vertices, or a seeded random
    connected graph with `n` vertices and `m` edges.
    """

    model_config = ConfigDict(extra="forbid")

    kind: Literal["vqe", "qaoa"] = "vqe"
    hamiltonian: Optional[str] = None
    reps: int = Field(default=3, ge=0)
    graph: Optional[str] = None
    family: Optional[Literal["path", "cycle", "star", "two-star", "ladder"]] = None
    n: Optional[int] = Field(default=None, ge=2)
    m: Optional[int] = Field(default=None, ge=1)
    graph_seed: int = Field(default=0, ge=0)

    @model_validator(mode="after")
    def check_source(self) -> "BenchmarkSpec":
        if self.kind == "vqe":
            if not self.hamiltonian:
                raise ValueError("a vqe benchmark needs a hamiltonian")
            return self

        sources = [self.graph is not None, self.family is not None, self.m is not None]
        if sum(sources) != 1:
            raise ValueError("a qaoa benchmark needs exactly one of graph, family or m")
        if (self.family is not None or self.m is not None) and self.n is None:
            raise ValueError("family and random graphs need a vertex count n")
        return self

    @property
    def label(self) -> str:
        if self.kind == "vqe":
            return self.hamiltonian
        if self.graph is not None:
            return self.graph
        if self.family is not None:
            return f"{self.family}-{self.n}"
        return f"random-{self.n}-{self.m}-s{self.graph_seed}"


class ScheduleSpec(BaseModel):
    """Schedule kind and its shape fractions."""

    model_config = ConfigDict(extra="forbid")

    kind: ScheduleKind = "InvertedReLU"
    alpha: float = Field(default_factory=lambda: settings.alpha, gt=0, lt=1)
    beta: float = Field(default_factory=lambda: settings.beta, gt=0, lt=1)
    gamma: float = Field(default_factory=lambda: settings.gamma, gt=0, lt=1)


class ExperimentConfig(BaseModel):
    """One technique on one benchmark over a list of seeds."""

    model_config = ConfigDict(extra="forbid")

    name: str = Field(..., min_length=1)
    technique: Technique
    benchmark: BenchmarkSpec
    snapshots: list[str] = Field(..., min_length=1)
    available: Optional[int] = Field(default=None, ge=1)
    schedule: ScheduleSpec = Field(default_factory=ScheduleSpec)
    transition: Transition = "walk"
    cycles: int = Field(default_factory=lambda: settings.cycles, ge=0)
    iters_per_cycle: int = Field(default_factory=lambda: settings.iters_per_cycle, ge=0)
    shots: int = Field(default_factory=lambda: settings.shots, ge=1)
    seeds: list[int] = Field(..., min_length=1)
    concurrency: int = Field(default=1, ge=1)
    method: OptimizerMethod = "COBYLA"
    noisy: bool = True
    max_evals: Optional[int] = Field(default=None, ge=1)
    initial_step: Optional[float] = Field(default=None, gt=0)

    @field_validator("seeds")
    @classmethod
    def check_seeds(cls, seeds: list[int]) -> list[int]:
        if len(set(seeds)) != len(seeds):
            raise ValueError(f"seeds must be unique, got {seeds}")
        if min(seeds) < 0:
            raise ValueError("seeds must be non-negative")
        return seeds

    @model_validator(mode="after")
    def check_devices(self) -> "ExperimentConfig":
        required = 2 if self.technique == "Qoncord" else 1
        offered = self.available if self.available is not None else len(self.snapshots)
        if self.available is not None and self.available > len(self.snapshots):
            raise ValueError(f"available={self.available} exceeds the {len(self.snapshots)} snapshots given")
        if self.technique == "Qoncord" and offered != 2:
            raise ValueError(f"Qoncord needs exactly two devices, got {offered}")
        if self.technique != "Qoncord" and self.available is None and offered != required:
            raise ValueError(f"{self.technique} needs exactly one snapshot, got {offered}")
        if self.concurrency > 1 and self.technique != "NEST":
            raise ValueError("concurrency > 1 is only supported for NEST")
        return self

    def technique_config(self) -> TechniqueConfig:
        overrides = {}
        if self.max_evals is not None:
            overrides["max_evals"] = self.max_evals
        if self.initial_step is not None:
            overrides["initial_step"] = self.initial_step
        return TechniqueConfig(
            technique=self.technique,
            schedule=self.schedule.kind,
            alpha=self.schedule.alpha,
            beta=self.schedule.beta,
            gamma=self.schedule.gamma,
            transition=self.transition,
            cycles=self.cycles,
            iters_per_cycle=self.iters_per_cycle,
            shots=self.shots,
            noisy=self.noisy,
            method=self.method,
            **overrides,
        )


class ExperimentSuite(BaseModel):
    """A suite file: experiments, output location and seed parallelism."""

    model_config = ConfigDict(extra="forbid")

    experiments: list[ExperimentConfig] = Field(..., min_length=1)
    output_dir: str = "results"
    parallel_seeds: int = Field(default=1, ge=1)
    baseline: Optional[str] = None

    @model_validator(mode="after")
    def check_names(self) -> "ExperimentSuite":
        names = [e.name for e in self.experiments]
        if len(set(names)) != len(names):
            raise ValueError(f"experiment names must be unique, got {names}")
        return self
