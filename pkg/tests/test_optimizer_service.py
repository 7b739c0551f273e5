import math

import numpy as np
import pytest

from qwalk.core.exceptions import ObjectiveFailureException, ParamLengthMismatchException
from qwalk.models.optimizer import DefaultTol, OptimizerConfig, OptTrace, SlidingWindow
from qwalk.services.optimizer_service import initial_params, minimize, should_stop

TARGET = np.array([0.5, -0.3])


def _quadratic(x):
    return float(np.sum((x - TARGET) ** 2))


@pytest.mark.parametrize("method", ["COBYLA", "Nelder-Mead"])
def test_quadratic_converges(method):
    cfg = OptimizerConfig(method=method, initial_step=0.5, max_evals=200, termination=DefaultTol(tol=1e-6))
    trace = minimize(_quadratic, [1.0, 1.0], cfg, seed=0)
    assert trace.best_value <= 1e-4
    assert trace.iteration_count <= 200
    assert trace.terminated_by in ("tolerance", "budget")


def test_constant_objective_stops_on_window():
    cfg = OptimizerConfig(max_evals=1000, termination=SlidingWindow(window=100, min_rel_improvement=0.04))
    trace = minimize(lambda x: 1.0, None, cfg, seed=0, num_params=2)
    assert trace.iteration_count == 101
    assert trace.terminated_by == "window"


def test_single_evaluation_budget():
    trace = minimize(_quadratic, [0.0, 0.0], OptimizerConfig(max_evals=1), seed=0)
    assert trace.iteration_count == 1
    assert trace.terminated_by == "budget"


def test_continued_trace_counts_budget_per_call():
    cfg = OptimizerConfig(max_evals=10, termination=SlidingWindow())
    trace = minimize(_quadratic, [2.0, 2.0], cfg, seed=0)
    minimize(_quadratic, trace.best_params, cfg, seed=0, trace=trace)
    assert trace.iteration_count == 20
    assert trace.best_value == min(e.value for e in trace.evals)


def _trace_with_best(candidate):
    trace = OptTrace()
    trace.record([0.0], -1.0)
    for _ in range(100):
        trace.record([0.0], candidate)
    return trace


@pytest.mark.parametrize(
    "candidate, stops",
    [(-1.0, True), (-1.03, True), (-1.05, False), (-2.0, False)],
)
def test_sliding_window_examples(candidate, stops):
    assert should_stop(_trace_with_best(candidate), SlidingWindow(window=100, min_rel_improvement=0.04)) is stops


def test_sliding_window_needs_a_full_window():
    trace = OptTrace()
    for _ in range(100):
        trace.record([0.0], 1.0)
    assert not should_stop(trace, SlidingWindow(window=100))


def test_sliding_window_is_relative_only_at_zero():
    trace = OptTrace()
    for _ in range(6):
        trace.record([0.0], 0.0)
    assert not should_stop(trace, SlidingWindow(window=5))

    cfg = OptimizerConfig(max_evals=30, termination=SlidingWindow(window=5))
    run = minimize(lambda x: 0.0, None, cfg, seed=0, num_params=2)
    assert run.iteration_count == 30
    assert run.terminated_by == "budget"


def test_default_tol_follows_convergence_flag():
    trace = OptTrace()
    assert not should_stop(trace, DefaultTol())
    trace.converged = True
    assert should_stop(trace, DefaultTol())


def _noisy_quadratic():
    noise = np.random.default_rng(0).normal(size=500)
    count = [0]

    def objective(x):
        count[0] += 1
        return _quadratic(x) + 0.01 * noise[count[0] % 500]

    return objective


def test_minimize_is_deterministic():
    cfg = OptimizerConfig(max_evals=60, termination=SlidingWindow(window=20))
    first = minimize(_noisy_quadratic(), None, cfg, seed=7, num_params=2)
    second = minimize(_noisy_quadratic(), None, cfg, seed=7, num_params=2)
    assert first.model_dump() == second.model_dump()


def test_initial_params_range():
    params = initial_params(16, seed=3)
    assert params.shape == (16,)
    assert np.all((params >= -math.pi) & (params < math.pi))
    assert np.array_equal(params, initial_params(16, seed=3))


def test_nan_objective_carries_trace():
    values = iter([1.0, 0.5, float("nan")])
    with pytest.raises(ObjectiveFailureException) as exc_info:
        minimize(lambda x: next(values), [0.0], OptimizerConfig(max_evals=10), seed=0)
    assert exc_info.value.trace.iteration_count == 2
    assert exc_info.value.exit_code == 3


def test_missing_dimension():
    with pytest.raises(ParamLengthMismatchException):
        minimize(_quadratic, None, OptimizerConfig(), seed=0)
