"""Shared test utilities: tiny objectives, counters and grid oracles."""

from __future__ import annotations

import numpy as np

from hillvallea import (BenchmarkProblem, BudgetedObjective, EvaluationCounter,
                        KnownOptimum, SearchDomain, Solution)


class RecordingObjective:
    """Unbudgeted callable objective that logs every evaluated point."""

    def __init__(self, fn):
        self.fn = fn
        self.points = []

    def __call__(self, x):
        self.points.append(np.array(x, dtype=float))
        return float(self.fn(x))

    def batch(self, X):
        out = np.empty(len(X))
        for i, row in enumerate(X):
            out[i] = self(row)
        return out

    @property
    def count(self):
        return len(self.points)


def solution(position, fn) -> Solution:
    pos = np.atleast_1d(np.asarray(position, dtype=float))
    return Solution(pos, float(fn(pos)))


def double_well(x) -> float:
    t = x[0]
    return float((t * t - 1.0) ** 2)


def sphere(x) -> float:
    x = np.asarray(x, dtype=float)
    return float(x @ x)


def make_sphere_problem(d: int = 2, half_width: float = 5.0,
                        budget: int = 10 ** 6) -> BenchmarkProblem:
    domain = SearchDomain(np.full(d, -half_width), np.full(d, half_width))
    return BenchmarkProblem(
        id=0, name=f"sphere_{d}d", domain=domain, objective=sphere,
        objective_batch=lambda X: np.einsum("ij,ij->i", X, X),
        known_global_optima=[KnownOptimum(np.zeros(d), 0.0)],
        budget=budget, niche_radius=1.0)


def budgeted(problem: BenchmarkProblem, budget: int, phase: str = "local_opt"):
    counter = EvaluationCounter(budget)
    return BudgetedObjective(problem, counter, phase), counter


def grid_minimum(problem: BenchmarkProblem, per_dim: int) -> float:
    """Exhaustive minimum over a regular grid, chunked to bound memory."""
    domain = problem.domain
    d = domain.dimension
    axes = [np.linspace(domain.lower[i], domain.upper[i], per_dim) for i in range(d)]
    if d == 1:
        return float(problem.evaluate_batch(axes[0][:, None]).min())
    assert d == 2, "grid oracle supports d <= 2"
    best = np.inf
    rows_per_chunk = max(1, 10 ** 6 // per_dim)
    for start in range(0, per_dim, rows_per_chunk):
        xs = axes[0][start:start + rows_per_chunk]
        grid = np.stack(np.meshgrid(xs, axes[1], indexing="ij"), axis=-1)
        vals = problem.evaluate_batch(grid.reshape(-1, 2))
        best = min(best, float(vals.min()))
    return best
