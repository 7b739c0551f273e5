"""Schedule service: continuous ESP schedules and their discretization."""

from typing import Iterable, Union

import pandas as pd

from qwalk.core.exceptions import EmptyCandidatesException, InvalidShapeException, OutOfRangeException
from qwalk.models.mapping import ScoredMap
from qwalk.models.schedule import CyclePlan, EspSchedule


def sigma_at(schedule: EspSchedule, t: Union[int, float]) -> float:
    """
    Target ESP at iteration t.

    Raises:
        OutOfRangeException: If t lies outside [0, T]
    """
    T = schedule.T
    if not 0 <= t <= T:
        raise OutOfRangeException(f"iteration {t} outside schedule horizon [0, {T}]")

    lo, hi = schedule.sigma_min, schedule.sigma_max
    span = hi - lo
    x = t / T
    kind = schedule.kind

    if kind == "Flat":
        value = hi
    elif kind == "StepUp":
        value = lo if x < schedule.alpha else hi
    elif kind == "Linear":
        value = lo + x * span
    elif kind == "VShape":
        value = hi - 2 * x * span if x < 0.5 else lo + 2 * (t - T / 2) / T * span
    elif kind == "ReLU":
        beta = schedule.beta
        value = lo if x < beta else lo + (t - beta * T) / ((1 - beta) * T) * span
    elif kind == "InvertedReLU":
        gamma = schedule.gamma
        value = lo + t / (gamma * T) * span if x < gamma else hi
    elif kind == "StepDown":
        value = hi if x < schedule.alpha else lo
    elif kind == "LinearDown":
        value = hi - x * span
    else:
        raise OutOfRangeException(f"unknown schedule kind '{kind}'")

    # Float rounding at the segment ends must not leave [lo, hi]
    return min(hi, max(lo, value))


def discretize(schedule: EspSchedule, cycles: int, iters_per_cycle: int, technique: str = "NEST") -> CyclePlan:
    """
    Sample the schedule at the first iteration of every cycle.

    Raises:
        InvalidShapeException: If cycles * iters_per_cycle != schedule.T
    """
    if cycles < 1 or iters_per_cycle < 1:
        raise InvalidShapeException(f"need cycles >= 1 and iters_per_cycle >= 1, got {cycles} x {iters_per_cycle}")
    if cycles * iters_per_cycle != schedule.T:
        raise InvalidShapeException(
            f"{cycles} cycles x {iters_per_cycle} iterations does not cover horizon T={schedule.T}"
        )
    return CyclePlan(
        cycles=cycles,
        iters_per_cycle=iters_per_cycle,
        targets=tuple(sigma_at(schedule, c * iters_per_cycle) for c in range(cycles)),
        sigma_min=schedule.sigma_min,
        sigma_max=schedule.sigma_max,
        technique=technique,
    )


def default_sigma_bounds(maps: Iterable[ScoredMap]) -> tuple[float, float]:
    """(min ESP, max ESP) over a candidate set."""
    values = [m.esp for m in maps]
    if not values:
        raise EmptyCandidatesException("cannot derive schedule bounds from an empty candidate set")
    return min(values), max(values)


def schedule_table(schedule: EspSchedule) -> pd.DataFrame:
    """One row (t, sigma) per integer iteration 0..T."""
    return pd.DataFrame({
        "t": range(schedule.T + 1),
        "sigma": [sigma_at(schedule, t) for t in range(schedule.T + 1)],
    })
