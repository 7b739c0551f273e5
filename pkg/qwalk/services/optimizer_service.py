"""Optimizer service: scipy derivative-free minimization with run-level termination."""

import math
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.optimize

from qwalk.core.exceptions import ObjectiveFailureException, ParamLengthMismatchException
from qwalk.core.logging import get_logger
from qwalk.models.optimizer import DefaultTol, OptimizerConfig, OptTrace, SlidingWindow, Termination

logger = get_logger(__name__)

Objective = Callable[[np.ndarray], float]


class _Stop(Exception):
    """Raised inside the objective to unwind scipy when a run-level rule fires."""

    def __init__(self, reason: str):
        self.reason = reason
        super().__init__(reason)


def initial_params(num_params: int, seed: int) -> np.ndarray:
    """Uniform draws in [-pi, pi), one per parameter."""
    rng = np.random.default_rng(seed)
    return rng.uniform(-math.pi, math.pi, size=num_params)


def should_stop(trace: OptTrace, rule: Termination) -> bool:
    """
    Evaluate a termination rule on a trace.

    SlidingWindow(w, r) fires once w+1 evaluations exist and the best value
    improved by less than r * |best w evaluations ago|. When that
    earlier best is 0 the rule never fires.
    DefaultTol fires when the method reported its own convergence.
    """
    if isinstance(rule, DefaultTol):
        return trace.converged

    length = trace.iteration_count
    if length < rule.window + 1:
        return False
    before = trace.best_at(length - rule.window)
    improvement = before - trace.best_value
    return improvement < rule.min_rel_improvement * abs(before)


def _scipy_options(cfg: OptimizerConfig, x0: np.ndarray, remaining: int) -> dict:
    # Our own budget check fires first; scipy's cap only bounds runaway passes
    cap = remaining + len(x0) + 2
    if cfg.method == "COBYLA":
        return {"rhobeg": cfg.initial_step, "maxiter": cap}
    simplex = np.vstack([x0] + [x0 + cfg.initial_step * e for e in np.eye(len(x0))])
    return {
        "initial_simplex": simplex,
        "maxfev": cap,
        "xatol": cfg.tolerance,
        "fatol": cfg.tolerance,
    }


def minimize(
    objective: Objective,
    x0: Optional[Sequence[float]],
    cfg: OptimizerConfig,
    seed: int,
    trace: Optional[OptTrace] = None,
    num_params: Optional[int] = None,
) -> OptTrace:
    """
    Minimize a noisy objective with COBYLA or Nelder-Mead.

    One objective evaluation is one iteration. The budget counts evaluations
    added by this call, so a shared trace can be continued phase by phase
    while a SlidingWindow rule looks at the whole trace. Under SlidingWindow
    the method restarts from the incumbent when it converges on its own.

    Args:
        objective: Maps a parameter vector to a scalar
        x0: Start point; drawn uniformly in [-pi, pi) from `seed` when None
        cfg: Method, step, budget and termination rule
        seed: Run seed
        trace: Trace to continue, a fresh one when None
        num_params: Dimension when x0 is None

    Raises:
        ObjectiveFailureException: If the objective raises or returns a
            non-finite value; carries the partial trace
    """
    if x0 is None:
        if num_params is None:
            raise ParamLengthMismatchException("num_params is required when x0 is not given")
        x = initial_params(num_params, seed)
    else:
        x = np.asarray(x0, dtype=float)
    trace = trace if trace is not None else OptTrace()
    trace.terminated_by = None
    trace.converged = False
    budget_end = trace.iteration_count + cfg.max_evals
    rule = cfg.termination

    def wrapped(params: np.ndarray) -> float:
        if trace.iteration_count >= budget_end:
            raise _Stop("budget")
        try:
            value = float(objective(np.asarray(params, dtype=float)))
        except _Stop:
            raise
        except Exception as e:
            raise ObjectiveFailureException(f"Objective failed at evaluation {trace.iteration_count + 1}: {e}", trace)
        if not math.isfinite(value):
            raise ObjectiveFailureException(f"Objective returned {value} at evaluation {trace.iteration_count + 1}", trace)

        trace.record(params, value)
        if isinstance(rule, SlidingWindow) and should_stop(trace, rule):
            raise _Stop("window")
        if trace.iteration_count >= budget_end:
            raise _Stop("budget")
        return value

    while True:
        before = trace.iteration_count
        try:
            scipy.optimize.minimize(
                wrapped,
                x,
                method=cfg.method,
                tol=cfg.tolerance,
                options=_scipy_options(cfg, x, budget_end - before),
            )
        except _Stop as stop:
            trace.terminated_by = stop.reason
            break

        if isinstance(rule, DefaultTol) or trace.iteration_count == before:
            trace.converged = True
            trace.terminated_by = "tolerance"
            break

        trace.restarts += 1
        x = np.asarray(trace.best_params, dtype=float)
        logger.debug(f"{cfg.method} converged after {trace.iteration_count} evals; restarting from incumbent")

    return trace
