"""Peak-ratio scoring against ground-truth optima and sweep aggregation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .hillvalley import Solution
from .problems import BenchmarkProblem


@dataclass
class PeakRatioReport:
    """Fraction of known global optima matched by reported solutions."""

    found: int
    total: int
    ratio: float
    matched_pairs: list  # (reported solution, known optimum, distance)


def peak_ratio(reported: Sequence[Solution], problem: BenchmarkProblem,
               epsilon: float = 1e-5) -> PeakRatioReport:
    """Score reported solutions against the problem's known optima.

    A known optimum counts as found when a reported solution lies within the
    niche radius of it and within ``epsilon`` of the optimal fitness. Matching
    is injective and greedy: reported solutions are walked best-fitness-first
    and each claims its nearest still-unclaimed qualifying optimum.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    optima = problem.known_global_optima
    total = len(optima)
    positions = np.array([o.position for o in optima])
    fitnesses = np.array([o.fitness for o in optima])
    unmatched = np.ones(total, dtype=bool)
    pairs = []
    for sol in sorted(reported, key=lambda s: s.fitness):
        dist = np.linalg.norm(positions - sol.position, axis=1)
        ok = (unmatched & (dist <= problem.niche_radius)
              & (np.abs(fitnesses - sol.fitness) <= epsilon))
        if not ok.any():
            continue
        dist_masked = np.where(ok, dist, np.inf)
        j = int(np.argmin(dist_masked))
        unmatched[j] = False
        pairs.append((sol, optima[j], float(dist[j])))
    found = len(pairs)
    return PeakRatioReport(found=found, total=total, ratio=found / total,
                           matched_pairs=pairs)


@dataclass
class AggregateSummary:
    """Arithmetic aggregation of a repetition sweep on one problem."""

    runs: int
    mean_ratio: float
    min_ratio: float
    max_ratio: float
    mean_evaluations: float
    mean_phase_fractions: dict


def aggregate(results: Sequence[tuple]) -> AggregateSummary:
    """Aggregate (RunResult, PeakRatioReport) pairs over repetitions."""
    if not results:
        raise ValueError("need at least one result to aggregate")
    ratios = [report.ratio for _, report in results]
    evals = [run.evaluations_used for run, _ in results]
    phases = {}
    for run, _ in results:
        for phase, frac in run.phase_fractions.items():
            phases.setdefault(phase, []).append(frac)
    return AggregateSummary(
        runs=len(results),
        mean_ratio=float(np.mean(ratios)),
        min_ratio=float(np.min(ratios)),
        max_ratio=float(np.max(ratios)),
        mean_evaluations=float(np.mean(evals)),
        mean_phase_fractions={p: float(np.mean(v)) for p, v in phases.items()},
    )
