"""Pydantic models for optimizer configuration and traces."""

import math
from typing import Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

OptimizerMethod = Literal["COBYLA", "Nelder-Mead"]
StopReason = Literal["budget", "window", "tolerance"]


class DefaultTol(BaseModel):
    """Stop when the method's own trust region or simplex shrinks below tol."""

    model_config = ConfigDict(frozen=True)

    rule: Literal["default_tol"] = "default_tol"
    tol: float = Field(default=1e-4, gt=0)


class SlidingWindow(BaseModel):
    """Stop when the best value improved by less than a fraction over a window."""

    model_config = ConfigDict(frozen=True)

    rule: Literal["sliding_window"] = "sliding_window"
    window: int = Field(default=100, ge=1)
    min_rel_improvement: float = Field(default=0.04, gt=0, lt=1)


Termination = Union[DefaultTol, SlidingWindow]


class OptimizerConfig(BaseModel):
    """Derivative-free optimizer settings for one phase."""

    model_config = ConfigDict(frozen=True)

    method: OptimizerMethod = "COBYLA"
    initial_step: float = Field(default=1.0, gt=0)
    max_evals: int = Field(default=1000, ge=1)
    termination: Termination = Field(default_factory=DefaultTol, discriminator="rule")

    @property
    def tolerance(self) -> float:
        """Tolerance handed to the method's own convergence test."""
        if isinstance(self.termination, DefaultTol):
            return self.termination.tol
        return 1e-8


class EvalRecord(BaseModel):
    """One objective evaluation."""

    model_config = ConfigDict(frozen=True)

    params: tuple[float, ...]
    value: float


class OptTrace(BaseModel):
    """Every evaluation of a run, possibly spanning several phases or cycles."""

    evals: list[EvalRecord] = Field(default_factory=list)
    best_value: float = math.inf
    best_params: Optional[tuple[float, ...]] = None
    terminated_by: Optional[StopReason] = None
    converged: bool = False
    restarts: int = 0

    @property
    def iteration_count(self) -> int:
        return len(self.evals)

    def record(self, params, value: float) -> None:
        params = tuple(float(x) for x in params)
        self.evals.append(EvalRecord(params=params, value=value))
        if value < self.best_value:
            self.best_value = value
            self.best_params = params

    def best_so_far(self) -> np.ndarray:
        """Running minimum of the evaluated values."""
        return np.minimum.accumulate([e.value for e in self.evals])

    def best_at(self, count: int) -> float:
        """Best value among the first `count` evaluations."""
        return min(e.value for e in self.evals[:count])
