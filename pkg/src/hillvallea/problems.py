"""Benchmark problems: bounded objectives with known optima and evaluation budgets.

Implements the ten non-composition problems of the classic niching benchmark
suite. All objectives are stored in minimization form (the suite's original
maximization functions are negated at construction); known-optima tables are
derived from the closed forms, refined to double precision.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

PHASES = ("init", "clustering", "local_opt", "postprocess")

#: Budget in function evaluations, per problem id.
_BUDGETS = {1: 50_000, 2: 50_000, 3: 50_000, 4: 50_000, 5: 50_000,
            6: 200_000, 7: 200_000, 8: 400_000, 9: 400_000, 10: 200_000}


class UnsupportedProblemError(ValueError):
    """Raised for problem ids outside the implemented range."""


@dataclass(frozen=True, eq=False)
class SearchDomain:
    """Axis-aligned box in R^d."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float))
        hi = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("lower and upper bounds must be 1-D and of equal length")
        if not np.all(lo < hi):
            raise ValueError("every lower bound must be strictly below its upper bound")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dimension(self) -> int:
        return self.lower.shape[0]

    def volume(self) -> float:
        return float(np.prod(self.upper - self.lower))

    def diagonal(self) -> float:
        return float(np.linalg.norm(self.upper - self.lower))

    def contains(self, x: np.ndarray) -> bool:
        return bool(np.all(x >= self.lower) and np.all(x <= self.upper))

    def clip(self, x: np.ndarray) -> np.ndarray:
        """Repair a point (or an (n, d) batch) onto the box, coordinate-wise."""
        return np.clip(x, self.lower, self.upper)


@dataclass(frozen=True, eq=False)
class KnownOptimum:
    """Ground-truth global optimum (minimization fitness)."""

    position: np.ndarray
    fitness: float


@dataclass
class EvaluationCounter:
    """Tracks spent function evaluations, split per algorithm phase."""

    budget: int
    used: int = 0
    phase_used: dict = field(default_factory=lambda: {p: 0 for p in PHASES})

    @property
    def remaining(self) -> int:
        return self.budget - self.used

    @property
    def exhausted(self) -> bool:
        return self.used >= self.budget

    def take(self, phase: str, n: int = 1) -> int:
        """Reserve up to ``n`` evaluations for ``phase``; returns the granted count."""
        grant = min(n, self.budget - self.used)
        if grant > 0:
            self.used += grant
            self.phase_used[phase] = self.phase_used.get(phase, 0) + grant
        return max(grant, 0)

    def fractions(self) -> dict:
        if self.used == 0:
            return {p: 0.0 for p in self.phase_used}
        return {p: v / self.used for p, v in self.phase_used.items()}


@dataclass
class BenchmarkProblem:
    """Objective on a bounded box with budget and ground-truth optima.

    ``objective`` maps a point to a minimization fitness; ``objective_batch``
    is an optional vectorized form over an (n, d) array used as a fast path.
    """

    id: int
    name: str
    domain: SearchDomain
    objective: Callable[[np.ndarray], float]
    known_global_optima: list
    budget: int
    niche_radius: float
    objective_batch: Optional[Callable[[np.ndarray], np.ndarray]] = None

    @property
    def dimension(self) -> int:
        return self.domain.dimension

    @property
    def optimal_fitness(self) -> float:
        return min(o.fitness for o in self.known_global_optima)

    def evaluate_batch(self, X: np.ndarray) -> np.ndarray:
        """Uncounted batch evaluation (validation/oracle use)."""
        X = np.asarray(X, dtype=float)
        if self.objective_batch is not None:
            return self.objective_batch(X)
        return np.array([self.objective(row) for row in X])


def evaluate(problem: BenchmarkProblem, x, counter: EvaluationCounter,
             phase: str = "local_opt"):
    """Budgeted single evaluation.

    Returns the minimization fitness, or ``None`` once the budget is spent
    (the budget-exhausted signal; the objective is then not called).
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (problem.dimension,):
        raise ValueError(
            f"point of dimension {x.shape} does not match problem dimension {problem.dimension}")
    if counter.take(phase, 1) == 0:
        return None
    return problem.objective(x)


class BudgetedObjective:
    """Objective bound to a counter and a phase tag.

    Calling it evaluates one point (``None`` once the budget is exhausted);
    ``batch`` evaluates as many rows of an (n, d) array as the budget allows.
    """

    __slots__ = ("problem", "counter", "phase")

    def __init__(self, problem: BenchmarkProblem, counter: EvaluationCounter, phase: str):
        self.problem = problem
        self.counter = counter
        self.phase = phase

    def __call__(self, x):
        if self.counter.take(self.phase, 1) == 0:
            return None
        return self.problem.objective(x)

    def batch(self, X: np.ndarray) -> np.ndarray:
        grant = self.counter.take(self.phase, len(X))
        if grant == 0:
            return np.empty(0)
        X = X[:grant]
        if self.problem.objective_batch is not None:
            return self.problem.objective_batch(X)
        return np.array([self.problem.objective(row) for row in X])

    @property
    def exhausted(self) -> bool:
        return self.counter.exhausted


# ---------------------------------------------------------------------------
# Closed forms. ``_*_peak`` helpers give the suite's original maximization
# value; objectives negate them. Scalar paths use ``math`` (hot loop in the
# hill-valley tests), batch paths use numpy.
# ---------------------------------------------------------------------------

_TRAP_BREAKS = (2.5, 5.0, 7.5, 12.5, 17.5, 22.5, 27.5)


def _trap_peak(t: float) -> float:
    if t < 2.5:
        return 80.0 * (2.5 - t)
    if t < 5.0:
        return 64.0 * (t - 2.5)
    if t < 7.5:
        return 64.0 * (7.5 - t)
    if t < 12.5:
        return 28.0 * (t - 7.5)
    if t < 17.5:
        return 28.0 * (17.5 - t)
    if t < 22.5:
        return 32.0 * (t - 17.5)
    if t < 27.5:
        return 32.0 * (27.5 - t)
    return 80.0 * (t - 27.5)


def _five_uneven_peak_trap(x: np.ndarray) -> float:
    return -_trap_peak(x[0])


def _five_uneven_peak_trap_batch(X: np.ndarray) -> np.ndarray:
    t = X[:, 0]
    conds = [t < 2.5, t < 5.0, t < 7.5, t < 12.5, t < 17.5, t < 22.5, t < 27.5]
    vals = [80.0 * (2.5 - t), 64.0 * (t - 2.5), 64.0 * (7.5 - t),
            28.0 * (t - 7.5), 28.0 * (17.5 - t), 32.0 * (t - 17.5),
            32.0 * (27.5 - t)]
    return -np.select(conds, vals, default=80.0 * (t - 27.5))


def _equal_maxima(x: np.ndarray) -> float:
    return -math.sin(5.0 * math.pi * x[0]) ** 6


def _equal_maxima_batch(X: np.ndarray) -> np.ndarray:
    return -np.sin(5.0 * np.pi * X[:, 0]) ** 6


_LN2_2 = 2.0 * math.log(2.0)


def _uneven_decreasing_maxima(x: np.ndarray) -> float:
    t = x[0]
    env = math.exp(-_LN2_2 * ((t - 0.08) / 0.854) ** 2)
    return -env * math.sin(5.0 * math.pi * (t ** 0.75 - 0.05)) ** 6


def _uneven_decreasing_maxima_batch(X: np.ndarray) -> np.ndarray:
    t = X[:, 0]
    env = np.exp(-_LN2_2 * ((t - 0.08) / 0.854) ** 2)
    return -env * np.sin(5.0 * np.pi * (t ** 0.75 - 0.05)) ** 6


def _himmelblau(x: np.ndarray) -> float:
    a, b = x[0], x[1]
    return -(200.0 - (a * a + b - 11.0) ** 2 - (a + b * b - 7.0) ** 2)


def _himmelblau_batch(X: np.ndarray) -> np.ndarray:
    a, b = X[:, 0], X[:, 1]
    return -(200.0 - (a * a + b - 11.0) ** 2 - (a + b * b - 7.0) ** 2)


def _six_hump_camel_back(x: np.ndarray) -> float:
    a, b = x[0], x[1]
    a2 = a * a
    b2 = b * b
    return 4.0 * ((4.0 - 2.1 * a2 + a2 * a2 / 3.0) * a2 + a * b + (4.0 * b2 - 4.0) * b2)


def _six_hump_camel_back_batch(X: np.ndarray) -> np.ndarray:
    a, b = X[:, 0], X[:, 1]
    a2 = a * a
    b2 = b * b
    return 4.0 * ((4.0 - 2.1 * a2 + a2 * a2 / 3.0) * a2 + a * b + (4.0 * b2 - 4.0) * b2)


def _shubert_factor(t: float) -> float:
    acc = 0.0
    for j in range(1, 6):
        acc += j * math.cos((j + 1) * t + j)
    return acc


def _shubert(x: np.ndarray) -> float:
    prod = 1.0
    for t in x:
        prod *= _shubert_factor(t)
    return prod


def _shubert_batch(X: np.ndarray) -> np.ndarray:
    prod = np.ones(X.shape[0])
    for i in range(X.shape[1]):
        col = X[:, i]
        acc = np.zeros_like(col)
        for j in range(1, 6):
            acc += j * np.cos((j + 1) * col + j)
        prod *= acc
    return prod


def _vincent(x: np.ndarray) -> float:
    acc = 0.0
    for t in x:
        acc += math.sin(10.0 * math.log(t))
    return -acc / len(x)


def _vincent_batch(X: np.ndarray) -> np.ndarray:
    return -np.sin(10.0 * np.log(X)).mean(axis=1)


_RASTRIGIN_K = (3.0, 4.0)


def _modified_rastrigin(x: np.ndarray) -> float:
    acc = 0.0
    for t, k in zip(x, _RASTRIGIN_K):
        acc += 10.0 + 9.0 * math.cos(2.0 * math.pi * k * t)
    return acc


def _modified_rastrigin_batch(X: np.ndarray) -> np.ndarray:
    k = np.asarray(_RASTRIGIN_K)
    return (10.0 + 9.0 * np.cos(2.0 * np.pi * k * X)).sum(axis=1)


# ---------------------------------------------------------------------------
# Ground-truth optimum positions. Non-analytic positions are refined to
# double precision by Newton iteration on the closed-form gradients.
# ---------------------------------------------------------------------------

_TRAP_OPTIMA = ((0.0,), (30.0,))
_EQUAL_MAXIMA_OPTIMA = tuple((t,) for t in (0.1, 0.3, 0.5, 0.7, 0.9))
_UNEVEN_MAXIMUM = ((0.07969977961192959,),)
_HIMMELBLAU_OPTIMA = (
    (3.0, 2.0),
    (-2.805118086952745, 3.1313125182505734),
    (-3.779310253377747, -3.283185991286169),
    (3.5844283403304917, -1.8481265269644034),
)
_CAMEL_OPTIMA = (
    (0.08984201310031807, -0.7126564030207396),
    (-0.08984201310031807, 0.7126564030207396),
)
# 1-D factor of the Shubert product: troughs reach -12.8709, crests +14.5080;
# the d-dim product is minimal with exactly one coordinate at a trough.
_SHUBERT_TROUGHS = (-7.708313735499347, -1.425128428319761, 4.858056878859825)
_SHUBERT_CRESTS = (-7.0835064076515595, -0.8003211004719731, 5.482864206707613)
# sin(10 ln x) = 1 exactly at x = exp((pi/2 + 2 pi m)/10), six of which fall
# inside [0.25, 10].
_VINCENT_AXIS = tuple(math.exp((math.pi / 2.0 + 2.0 * math.pi * m) / 10.0)
                      for m in range(-2, 4))
_RASTRIGIN_AXES = ((1.0 / 6.0, 3.0 / 6.0, 5.0 / 6.0),
                   (1.0 / 8.0, 3.0 / 8.0, 5.0 / 8.0, 7.0 / 8.0))


def _shubert_optima(d: int):
    """One coordinate at a trough, the rest at crests: 18 (d=2) / 81 (d=3) points."""
    points = []
    for trough_axis in range(d):
        for trough in _SHUBERT_TROUGHS:
            for crests in itertools.product(_SHUBERT_CRESTS, repeat=d - 1):
                p = list(crests)
                p.insert(trough_axis, trough)
                points.append(tuple(p))
    return tuple(points)


def _min_pairwise_distance(points: np.ndarray) -> float:
    best = math.inf
    for i in range(len(points) - 1):
        d = np.linalg.norm(points[i + 1:] - points[i], axis=1).min()
        best = min(best, float(d))
    return best


def _assemble(pid: int, name: str, lower, upper, scalar, batch, optima,
              niche_radius: Optional[float] = None) -> BenchmarkProblem:
    domain = SearchDomain(np.asarray(lower, float), np.asarray(upper, float))
    positions = np.asarray(optima, dtype=float)
    known = [KnownOptimum(position=p, fitness=float(scalar(p))) for p in positions]
    if niche_radius is None:
        niche_radius = 0.5 * _min_pairwise_distance(positions)
    return BenchmarkProblem(
        id=pid, name=name, domain=domain, objective=scalar,
        objective_batch=batch, known_global_optima=known,
        budget=_BUDGETS[pid], niche_radius=niche_radius)


def _build_problem(pid: int) -> BenchmarkProblem:
    if pid == 1:
        return _assemble(1, "five_uneven_peak_trap", [0.0], [30.0],
                         _five_uneven_peak_trap, _five_uneven_peak_trap_batch,
                         _TRAP_OPTIMA)
    if pid == 2:
        return _assemble(2, "equal_maxima", [0.0], [1.0],
                         _equal_maxima, _equal_maxima_batch, _EQUAL_MAXIMA_OPTIMA)
    if pid == 3:
        # single optimum: radius falls back to 1% of the domain diagonal
        return _assemble(3, "uneven_decreasing_maxima", [0.0], [1.0],
                         _uneven_decreasing_maxima, _uneven_decreasing_maxima_batch,
                         _UNEVEN_MAXIMUM, niche_radius=0.01)
    if pid == 4:
        return _assemble(4, "himmelblau", [-6.0, -6.0], [6.0, 6.0],
                         _himmelblau, _himmelblau_batch, _HIMMELBLAU_OPTIMA)
    if pid == 5:
        return _assemble(5, "six_hump_camel_back", [-1.9, -1.1], [1.9, 1.1],
                         _six_hump_camel_back, _six_hump_camel_back_batch,
                         _CAMEL_OPTIMA)
    if pid == 6:
        return _assemble(6, "shubert_2d", [-10.0] * 2, [10.0] * 2,
                         _shubert, _shubert_batch, _shubert_optima(2))
    if pid == 7:
        return _assemble(7, "vincent_2d", [0.25] * 2, [10.0] * 2,
                         _vincent, _vincent_batch,
                         tuple(itertools.product(_VINCENT_AXIS, repeat=2)))
    if pid == 8:
        return _assemble(8, "shubert_3d", [-10.0] * 3, [10.0] * 3,
                         _shubert, _shubert_batch, _shubert_optima(3))
    if pid == 9:
        return _assemble(9, "vincent_3d", [0.25] * 3, [10.0] * 3,
                         _vincent, _vincent_batch,
                         tuple(itertools.product(_VINCENT_AXIS, repeat=3)))
    if pid == 10:
        return _assemble(10, "modified_rastrigin_2d", [0.0, 0.0], [1.0, 1.0],
                         _modified_rastrigin, _modified_rastrigin_batch,
                         tuple(itertools.product(*_RASTRIGIN_AXES)))
    raise AssertionError(pid)


def make_problem(problem_id: int) -> BenchmarkProblem:
    """Construct benchmark problem 1-10 by id.

    Ids 11-20 are the suite's composition functions, which need external
    rotation/shift data; they are not implemented. Build a
    :class:`BenchmarkProblem` directly to plug in custom objectives.
    """
    if problem_id in range(11, 21):
        raise UnsupportedProblemError(
            f"problem {problem_id} (composition function) is not implemented; "
            "construct a BenchmarkProblem directly to supply a custom objective")
    if problem_id not in range(1, 11):
        raise UnsupportedProblemError(f"unknown problem id {problem_id!r}")
    return _build_problem(problem_id)


def problem_names() -> dict:
    """Map of problem name -> id for all implemented problems."""
    return {_build_problem(i).name: i for i in range(1, 11)}
