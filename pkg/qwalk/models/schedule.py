"""Pydantic models for ESP schedules and their cycle plans."""

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator

ScheduleKind = Literal[
    "Flat", "StepUp", "Linear", "VShape", "ReLU", "InvertedReLU", "StepDown", "LinearDown"
]

INCREASING_KINDS: tuple[str, ...] = ("Flat", "StepUp", "Linear", "VShape", "ReLU", "InvertedReLU")
DECREASING_KINDS: tuple[str, ...] = ("StepDown", "LinearDown")


class EspSchedule(BaseModel):
    """Target ESP as a function of the iteration index t in [0, T]."""

    model_config = ConfigDict(frozen=True)

    kind: ScheduleKind = "InvertedReLU"
    sigma_min: float = Field(..., gt=0, le=1)
    sigma_max: float = Field(..., gt=0, le=1)
    T: int = Field(..., ge=1)
    alpha: float = Field(default=0.5, gt=0, lt=1)
    beta: float = Field(default=1 / 3, gt=0, lt=1)
    gamma: float = Field(default=0.5, gt=0, lt=1)

    @model_validator(mode="after")
    def check_bounds(self) -> "EspSchedule":
        if self.sigma_min > self.sigma_max:
            raise ValueError(f"sigma_min: {self.sigma_min} exceeds sigma_max {self.sigma_max}")
        return self

    @property
    def is_decreasing(self) -> bool:
        return self.kind in DECREASING_KINDS

    @classmethod
    def for_cycles(cls, kind: str, sigma_min: float, sigma_max: float, cycles: int, iters_per_cycle: int, **fractions) -> "EspSchedule":
        """Schedule whose horizon T equals cycles * iters_per_cycle."""
        return cls(
            kind=kind,
            sigma_min=sigma_min,
            sigma_max=sigma_max,
            T=cycles * iters_per_cycle,
            **fractions,
        )


class CyclePlan(BaseModel):
    """Stepwise discretization of a schedule: one target ESP per cycle."""

    model_config = ConfigDict(frozen=True)

    cycles: int = Field(..., ge=1)
    iters_per_cycle: int = Field(..., ge=1)
    targets: tuple[float, ...]
    sigma_min: float
    sigma_max: float
    technique: str = "NEST"

    @model_validator(mode="after")
    def check_targets(self) -> "CyclePlan":
        if len(self.targets) != self.cycles:
            raise ValueError(f"targets: expected {self.cycles} entries, got {len(self.targets)}")
        for target in self.targets:
            if not self.sigma_min <= target <= self.sigma_max:
                raise ValueError(f"targets: {target} outside [{self.sigma_min}, {self.sigma_max}]")
        return self

    @property
    def total_iterations(self) -> int:
        return self.cycles * self.iters_per_cycle
