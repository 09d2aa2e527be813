"""Budgeted optimizers: limited-memory quasi-Newton and CMA-style evolution.

Budgets count objective calls: one loss evaluation or one gradient evaluation
is one unit (a finite-difference gradient costs ``2 * dim`` units).
"""

from __future__ import annotations

import csv
import io
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Callable

import numpy as np


@dataclass
class OptimProblem:
    dim: int
    loss: Callable[[np.ndarray], float]
    grad: Callable[[np.ndarray], np.ndarray] | None = None
    bounds: tuple[np.ndarray, np.ndarray] | None = None

    def __post_init__(self):
        if self.bounds is not None:
            lo, hi = (np.broadcast_to(np.asarray(b, dtype=float), (self.dim,)).copy()
                      for b in self.bounds)
            if np.any(lo > hi):
                raise ValueError("lower bound above upper bound")
            self.bounds = (lo, hi)

    def project(self, x: np.ndarray) -> np.ndarray:
        if self.bounds is None:
            return np.asarray(x, dtype=float)
        return np.clip(x, *self.bounds)


@dataclass
class OptimResult:
    best_params: np.ndarray
    best_loss: float
    evaluations: int
    trace: list[tuple[int, float]] = field(default_factory=list)
    seed: int | None = None
    message: str = ""

    def trace_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["eval_index", "loss"])
        w.writerows(self.trace)
        return buf.getvalue()


class _Budget(Exception):
    pass


class _Counter:
    """Wraps a problem, counts calls and remembers the best point seen."""

    def __init__(self, problem: OptimProblem, max_evals: int):
        self.p = problem
        self.max = max_evals
        self.used = 0
        self.best_x = None
        self.best_f = math.inf

    def _spend(self, k: int):
        if self.used + k > self.max:
            raise _Budget
        self.used += k

    def f(self, x: np.ndarray) -> float:
        self._spend(1)
        v = float(self.p.loss(x))
        if v < self.best_f:
            self.best_f, self.best_x = v, x.copy()
        return v

    def g(self, x: np.ndarray) -> np.ndarray:
        if self.p.grad is not None:
            self._spend(1)
            return np.asarray(self.p.grad(x), dtype=float)
        return self._fd(x)

    def _fd(self, x: np.ndarray, h: float = 1e-6) -> np.ndarray:
        self._spend(2 * x.size)
        out = np.empty_like(x)
        for i in range(x.size):
            xp, xm = x.copy(), x.copy()
            xp[i] += h
            xm[i] -= h
            xp, xm = self.p.project(xp), self.p.project(xm)
            out[i] = (self.p.loss(xp) - self.p.loss(xm)) / (xp[i] - xm[i])
        return out


def _projected_grad(problem: OptimProblem, x, g):
    if problem.bounds is None:
        return g
    lo, hi = problem.bounds
    pg = g.copy()
    pg[(x <= lo) & (g > 0)] = 0.0
    pg[(x >= hi) & (g < 0)] = 0.0
    return pg


def minimize_quasi_newton(problem: OptimProblem, start, max_evals: int = 1000,
                          tol: float = 1e-8, memory: int = 10, c1: float = 1e-4) -> OptimResult:
    """L-BFGS two-loop recursion with projected backtracking line search.

    Every accepted step lowers the loss (Armijo condition), so the trace is
    monotone.  Stops on projected-gradient norm below ``tol``, budget
    exhaustion, or a line search that cannot make progress.
    """
    cnt = _Counter(problem, max_evals)
    x = problem.project(np.asarray(start, dtype=float).copy())
    trace: list[tuple[int, float]] = []
    msg = "budget exhausted"
    try:
        f = cnt.f(x)
        if not np.isfinite(f):
            raise ValueError("non-finite loss at the starting point")
        g = cnt.g(x)
        trace.append((cnt.used, f))
        mem: deque = deque(maxlen=memory)
        while True:
            pg = _projected_grad(problem, x, g)
            if np.linalg.norm(pg) < tol:
                msg = "gradient tolerance reached"
                break
            q = pg.copy()
            alphas = []
            for s, y, rho in reversed(mem):
                a = rho * (s @ q)
                alphas.append(a)
                q -= a * y
            if mem:
                s, y, _ = mem[-1]
                q *= (s @ y) / (y @ y)
            else:
                q /= max(np.linalg.norm(q), 1.0)
            for (s, y, rho), a in zip(mem, reversed(alphas)):
                b = rho * (y @ q)
                q += (a - b) * s
            d = -_projected_grad(problem, x, -q) if problem.bounds is not None else -q
            if d @ pg >= 0:  # not a descent direction: fall back to steepest descent
                mem.clear()
                d = -pg / max(np.linalg.norm(pg), 1.0)
            t = 1.0
            accepted = False
            for _ in range(40):
                xn = problem.project(x + t * d)
                step = xn - x
                if not np.any(step):
                    break
                fn = cnt.f(xn)
                if np.isfinite(fn) and fn <= f + c1 * (g @ step):
                    accepted = True
                    break
                t *= 0.5
            if not accepted:
                if mem:
                    mem.clear()
                    continue
                msg = "line search made no progress"
                break
            gn = cnt.g(xn)
            s, y = xn - x, gn - g
            if s @ y > 1e-12 * (s @ s):
                mem.append((s, y, 1.0 / (s @ y)))
            x, f, g = xn, fn, gn
            trace.append((cnt.used, f))
            if abs(trace[-2][1] - f) <= 1e-16 * max(1.0, abs(f)) and np.linalg.norm(s) < 1e-14:
                msg = "stalled"
                break
    except _Budget:
        pass
    best_x, best_f = (x, f) if cnt.best_x is None else (cnt.best_x, cnt.best_f)
    return OptimResult(np.asarray(best_x), float(best_f), cnt.used, trace, None, msg)


def minimize_evolutionary(problem: OptimProblem, start, population: int | None = None,
                          max_evals: int = 5000, seed: int | None = 0, sigma0: float = 0.5,
                          ftol: float = 0.0) -> OptimResult:
    """(mu/mu_w, lambda) covariance-matrix-adaptation evolution strategy.

    Offspring are Gaussian perturbations of the weighted parent mean; step size
    follows cumulative path-length control and the covariance combines the
    rank-one and rank-mu updates.  Samples are projected onto the bounds before
    evaluation.
    """
    n = problem.dim
    lam = population or 4 + int(3 * math.log(n))
    if lam < 4:
        raise ValueError("population must be >= 4")
    rng = np.random.default_rng(seed)
    cnt = _Counter(problem, max_evals)
    mean = problem.project(np.asarray(start, dtype=float).copy())
    sigma = float(sigma0)

    mu = lam // 2
    w = math.log(mu + 0.5) - np.log(np.arange(1, mu + 1))
    w /= w.sum()
    mueff = 1.0 / np.sum(w ** 2)
    cc = (4 + mueff / n) / (n + 4 + 2 * mueff / n)
    cs = (mueff + 2) / (n + mueff + 5)
    c1 = 2 / ((n + 1.3) ** 2 + mueff)
    cmu = min(1 - c1, 2 * (mueff - 2 + 1 / mueff) / ((n + 2) ** 2 + mueff))
    damps = 1 + 2 * max(0.0, math.sqrt((mueff - 1) / (n + 1)) - 1) + cs
    chin = math.sqrt(n) * (1 - 1 / (4 * n) + 1 / (21 * n * n))
    pc, ps = np.zeros(n), np.zeros(n)
    C = np.eye(n)
    B, D = np.eye(n), np.ones(n)
    trace: list[tuple[int, float]] = []
    msg = "budget exhausted"
    gen = 0
    try:
        f0 = cnt.f(mean)
        if not np.isfinite(f0):
            raise ValueError("non-finite loss at the starting point")
        trace.append((cnt.used, cnt.best_f))
        while cnt.used + lam <= max_evals:
            z = rng.standard_normal((lam, n))
            y = z @ (B * D).T
            xs = np.array([problem.project(mean + sigma * yi) for yi in y])
            fs = np.array([cnt.f(xi) for xi in xs])
            trace.append((cnt.used, cnt.best_f))
            order = np.argsort(fs, kind="stable")
            if sigma == 0:
                msg = "zero step size"
                break
            ysel = (xs[order[:mu]] - mean) / sigma  # step actually taken after projection
            old = mean
            mean = mean + sigma * (w @ ysel)
            ymean = (mean - old) / sigma
            invsqrt = B @ np.diag(1 / D) @ B.T
            ps = (1 - cs) * ps + math.sqrt(cs * (2 - cs) * mueff) * (invsqrt @ ymean)
            gen += 1
            hsig = np.linalg.norm(ps) / math.sqrt(1 - (1 - cs) ** (2 * gen)) / chin < 1.4 + 2 / (n + 1)
            pc = (1 - cc) * pc + hsig * math.sqrt(cc * (2 - cc) * mueff) * ymean
            C = ((1 - c1 - cmu) * C + c1 * (np.outer(pc, pc) + (1 - hsig) * cc * (2 - cc) * C)
                 + cmu * (ysel.T * w) @ ysel)
            sigma *= math.exp((cs / damps) * (np.linalg.norm(ps) / chin - 1))
            C = np.triu(C) + np.triu(C, 1).T
            evals, B = np.linalg.eigh(C)
            D = np.sqrt(np.maximum(evals, 1e-30))
            if cnt.best_f <= ftol or sigma * D.max() < 1e-14:
                msg = "converged"
                break
    except _Budget:
        pass
    return OptimResult(np.asarray(cnt.best_x), float(cnt.best_f), cnt.used, trace, seed, msg)


def minimize_two_stage(problem: OptimProblem, start, max_evals: int = 4000, seed: int | None = 0,
                       evo_fraction: float = 0.5, population: int | None = None,
                       sigma0: float = 0.5, tol: float = 1e-8) -> OptimResult:
    """Evolutionary warm start followed by quasi-Newton polishing."""
    evo_budget = int(max_evals * evo_fraction)
    r1 = minimize_evolutionary(problem, start, population, evo_budget, seed, sigma0)
    r2 = minimize_quasi_newton(problem, r1.best_params, max_evals - r1.evaluations, tol)
    best = r2 if r2.best_loss <= r1.best_loss else r1
    trace = r1.trace + [(r1.evaluations + i, v) for i, v in r2.trace]
    return OptimResult(best.best_params, best.best_loss, r1.evaluations + r2.evaluations,
                       trace, seed, f"evolution: {r1.message}; polish: {r2.message}")


def best_of_restarts(problem: OptimProblem, starts, method: Callable[..., OptimResult],
                     **kw) -> tuple[OptimResult, list[OptimResult]]:
    runs = [method(problem, s, **kw) for s in starts]
    return min(runs, key=lambda r: r.best_loss), runs
