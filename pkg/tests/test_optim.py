import numpy as np
import pytest
from scipy.optimize import rosen, rosen_der

from nisqkit.optim import (OptimProblem, best_of_restarts, minimize_evolutionary,
                           minimize_quasi_newton, minimize_two_stage)


def _quadratic(dim=10):
    rng = np.random.default_rng(0)
    a = rng.normal(size=(dim, dim))
    h = a @ a.T + dim * np.eye(dim)
    c = rng.normal(size=dim)
    return OptimProblem(dim, lambda x: 0.5 * (x - c) @ h @ (x - c), lambda x: h @ (x - c)), c


def _rastrigin(x):
    return 10 * x.size + float(np.sum(x * x - 10 * np.cos(2 * np.pi * x)))


def test_quadratic_converges_quickly():
    prob, c = _quadratic()
    res = minimize_quasi_newton(prob, np.zeros(10), max_evals=100)
    assert res.evaluations < 100
    assert np.allclose(res.best_params, c, atol=1e-6)


@pytest.mark.parametrize("with_grad", [True, False])
def test_rosenbrock(with_grad):
    prob = OptimProblem(2, rosen, rosen_der if with_grad else None)
    res = minimize_quasi_newton(prob, np.array([-1.2, 1.0]), max_evals=2000)
    assert res.best_loss < 1e-6
    assert np.allclose(res.best_params, [1, 1], atol=1e-2)


def test_quasi_newton_trace_monotone():
    prob = OptimProblem(2, rosen, rosen_der)
    res = minimize_quasi_newton(prob, np.array([-1.2, 1.0]), max_evals=500)
    vals = [v for _, v in res.trace]
    assert all(b <= a for a, b in zip(vals, vals[1:]))


def test_evolution_is_deterministic():
    prob = OptimProblem(5, _rastrigin)
    a = minimize_evolutionary(prob, np.ones(5), max_evals=800, seed=3)
    b = minimize_evolutionary(prob, np.ones(5), max_evals=800, seed=3)
    assert np.array_equal(a.best_params, b.best_params) and a.best_loss == b.best_loss
    assert a.trace == b.trace


def test_evolution_sphere_dim20():
    prob = OptimProblem(20, lambda x: float(x @ x))
    res = minimize_evolutionary(prob, np.full(20, 3.0), max_evals=5000, seed=0)
    assert res.best_loss < 1e-4


def test_evolution_rastrigin_success_rate():
    prob = OptimProblem(2, _rastrigin)
    rng = np.random.default_rng(7)
    hits = 0
    for seed in range(20):
        res = minimize_evolutionary(prob, rng.uniform(-5.12, 5.12, 2), population=20,
                                    max_evals=3000, seed=seed, sigma0=2.0)
        hits += res.best_loss < 1
    assert hits >= 10


def test_zero_step_size_stays_put():
    prob = OptimProblem(3, lambda x: float(np.sum((x - 1) ** 2)))
    x0 = np.array([0.3, -0.2, 0.5])
    res = minimize_evolutionary(prob, x0, max_evals=200, sigma0=0.0)
    assert np.array_equal(res.best_params, x0)
    assert res.message == "zero step size"


@pytest.mark.parametrize("method", ["qn", "evo"])
def test_bounds_and_budget_respected(method):
    seen = []

    def loss(x):
        seen.append(x.copy())
        return float(np.sum((x - 3) ** 2))

    prob = OptimProblem(4, loss, bounds=(-1.0, 1.0))
    if method == "qn":
        res = minimize_quasi_newton(prob, np.zeros(4), max_evals=150)
    else:
        res = minimize_evolutionary(prob, np.zeros(4), max_evals=150, seed=1)
    pts = np.array(seen)
    assert pts.min() >= -1 and pts.max() <= 1
    assert res.evaluations <= 150
    assert np.allclose(res.best_params, 1.0, atol=1e-3)


def test_budget_caps_expensive_runs():
    prob = OptimProblem(6, _rastrigin)
    for budget in (1, 13, 100):
        assert minimize_quasi_newton(prob, np.ones(6), max_evals=budget).evaluations <= budget
        assert minimize_evolutionary(prob, np.ones(6), max_evals=budget).evaluations <= budget


def test_best_loss_reevaluates():
    prob = OptimProblem(3, _rastrigin)
    for res in (minimize_quasi_newton(prob, np.full(3, 0.7), max_evals=300),
                minimize_evolutionary(prob, np.full(3, 0.7), max_evals=300, seed=2),
                minimize_two_stage(prob, np.full(3, 0.7), max_evals=600, seed=2)):
        assert abs(prob.loss(res.best_params) - res.best_loss) < 1e-12


def test_best_of_restarts_is_minimum():
    prob = OptimProblem(2, _rastrigin)
    starts = np.random.default_rng(1).uniform(-4, 4, (6, 2))
    best, runs = best_of_restarts(prob, starts, minimize_quasi_newton, max_evals=200)
    assert len(runs) == 6 and all(best.best_loss <= r.best_loss for r in runs)


def test_non_finite_start_raises():
    prob = OptimProblem(2, lambda x: np.nan)
    with pytest.raises(ValueError):
        minimize_quasi_newton(prob, np.zeros(2))
    with pytest.raises(ValueError):
        minimize_evolutionary(prob, np.zeros(2))
    with pytest.raises(ValueError):
        OptimProblem(2, rosen, bounds=(1.0, 0.0))


def test_two_stage_and_trace_csv():
    prob = OptimProblem(2, rosen)
    res = minimize_two_stage(prob, np.array([-1.2, 1.0]), max_evals=2000, seed=0)
    assert res.evaluations <= 2000 and res.best_loss < 1e-6
    idx = [i for i, _ in res.trace]
    assert idx == sorted(idx)
    lines = res.trace_csv().splitlines()
    assert lines[0] == "eval_index,loss" and len(lines) == len(res.trace) + 1
