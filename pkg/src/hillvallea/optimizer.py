"""Restart-driven multi-modal optimizer with an elitist archive.

Each restart uniformly samples the domain, injects known elites, truncation-
selects, clusters the selection into presumed niches, runs one core searcher
per new niche and post-processes the resulting candidates into the archive.
Restarts that add no elite double the population and grow the cluster size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional, Sequence

import numpy as np

from .core_search import (DEFAULT_CONSTANTS, SearcherConstants, SearcherKind,
                          init_from_cluster, recommended_population_size)
from .hillvalley import (Solution, average_edge_length, expected_edge_length,
                         hill_valley_clustering, hill_valley_test)
from .problems import (BenchmarkProblem, BudgetedObjective, EvaluationCounter,
                       SearchDomain)

#: Interior test points for the archive distinctness test.
ARCHIVE_TEST_POINTS = 5


class InjectionMode(Enum):
    """Which optima are fed back into the population on restarts."""

    ALL_OPTIMA = "all_optima"
    ONLY_GLOBAL = "only_global"
    NONE = "none"


@dataclass(frozen=True)
class OptimizerConfig:
    """Run-level configuration; defaults reproduce the shipped setup."""

    tol: float = 1e-5
    injection: InjectionMode = InjectionMode.ONLY_GLOBAL
    budget: Optional[int] = None            # overrides the problem budget
    population_per_dim: int = 16            # initial N = 16 d
    population_growth: float = 2.0
    cluster_growth: float = 1.2
    cluster_size: Optional[int] = None      # overrides the recommended N_c
    eel_mode: str = "volume"                # or "average" (edge-length fallback)
    trace_every: Optional[int] = None
    constants: SearcherConstants = DEFAULT_CONSTANTS


@dataclass
class ElitistArchive:
    """Presumed distinct global optima, kept across restarts.

    ``verified`` flips off when the budget ran out before all pairwise
    distinctness tests could be run.
    """

    solutions: list = field(default_factory=list)
    verified: bool = True

    def __len__(self) -> int:
        return len(self.solutions)

    def __iter__(self):
        return iter(self.solutions)

    def best_fitness(self) -> float:
        return min(s.fitness for s in self.solutions) if self.solutions else math.inf

    def spread(self) -> float:
        if len(self.solutions) < 2:
            return 0.0
        fs = [s.fitness for s in self.solutions]
        return max(fs) - min(fs)


@dataclass
class PostprocessResult:
    added: int                 # insertions plus replacements
    discarded: list            # candidates dropped by the tolerance filter
    emptied: bool              # archive was reset for a strictly better optimum


@dataclass
class RestartLog:
    """Per-restart bookkeeping of one run."""

    index: int
    population_size: int
    cluster_size: int
    selection_size: int
    n_clusters: int
    clustering_complete: bool
    n_skipped_elites: int
    n_searchers: int
    n_new_elites: int
    archive_size: int
    archive_spread: float


@dataclass
class RunResult:
    """Outcome of one optimizer run."""

    problem_id: int
    kind: SearcherKind
    seed: int
    archive: ElitistArchive
    side_archive: list
    evaluations_used: int
    budget: int
    phase_used: dict
    restarts: int
    per_restart_log: list
    trace: list

    @property
    def phase_fractions(self) -> dict:
        if self.evaluations_used == 0:
            return {p: 0.0 for p in self.phase_used}
        return {p: v / self.evaluations_used for p, v in self.phase_used.items()}


def uniform_sample(domain: SearchDomain, n: int, rng: np.random.Generator) -> np.ndarray:
    """n points i.i.d. uniform over the box, as an (n, d) array."""
    if n < 1:
        raise ValueError("sample size must be >= 1")
    return rng.uniform(domain.lower, domain.upper, size=(n, domain.dimension))


def truncation_selection(population: Sequence[Solution], tau: float) -> list:
    """The floor(tau * len) best solutions (at least one), stable under ties."""
    if not population:
        raise ValueError("population must be nonempty")
    keep = max(1, int(tau * len(population)))
    return sorted(population, key=lambda s: s.fitness)[:keep]


def postprocess(candidates: Sequence[Solution], archive: ElitistArchive, tol: float,
                evaluate: Callable) -> PostprocessResult:
    """Fold terminated-searcher bests into the archive.

    Candidates more than ``tol`` worse than the all-time best are discarded.
    If a survivor beats some elite by more than ``tol`` the archive is emptied
    first. Each survivor is then tested against the current elites with the
    fixed five-point hill-valley test: in a shared niche it replaces the elite
    only when strictly better, otherwise it joins as a new elite. When the
    budget dies mid-testing, the remaining survivors are appended untested and
    the archive is flagged unverified.
    """
    if not candidates:
        return PostprocessResult(0, [], False)
    best = min(min(c.fitness for c in candidates), archive.best_fitness())
    survivors = [c for c in candidates if c.fitness <= best + tol]
    discarded = [c for c in candidates if c.fitness > best + tol]

    emptied = False
    if archive.solutions:
        worst_elite = max(e.fitness for e in archive.solutions)
        if any(c.fitness + tol < worst_elite for c in survivors):
            archive.solutions.clear()
            archive.verified = True
            emptied = True

    added = 0
    for cand in sorted(survivors, key=lambda s: s.fitness):
        if getattr(evaluate, "exhausted", False):
            archive.solutions.append(cand)
            archive.verified = False
            added += 1
            continue
        matched = False
        for i, elite in enumerate(archive.solutions):
            same, _ = hill_valley_test(cand, elite, ARCHIVE_TEST_POINTS, evaluate)
            if same:
                if cand.fitness < elite.fitness:
                    archive.solutions[i] = cand
                    added += 1
                matched = True
                break
        if not matched:
            archive.solutions.append(cand)
            added += 1
    return PostprocessResult(added, discarded, emptied)


def _absorb_side_optima(side: list, rejected: Sequence[Solution],
                        evaluate: Callable) -> None:
    """Deduplicate presumed local optima into the side archive (all-optima mode)."""
    for cand in sorted(rejected, key=lambda s: s.fitness):
        if getattr(evaluate, "exhausted", False):
            side.append(cand)
            continue
        matched = False
        for i, known in enumerate(side):
            same, _ = hill_valley_test(cand, known, ARCHIVE_TEST_POINTS, evaluate)
            if same:
                if cand.fitness < known.fitness:
                    side[i] = cand
                matched = True
                break
        if not matched:
            side.append(cand)


class _Tracer:
    """Emits (evaluations, metric) rows at a fixed evaluation spacing."""

    def __init__(self, every: Optional[int], metric: Callable, counter: EvaluationCounter):
        self.every = every
        self.metric = metric
        self.counter = counter
        self.rows: list = []
        self._next = every if every else 0

    def checkpoint(self, archive: ElitistArchive) -> None:
        if not self.every:
            return
        while self.counter.used >= self._next:
            self.rows.append((self._next, float(self.metric(archive))))
            self._next += self.every

    def finish(self, archive: ElitistArchive) -> None:
        if not self.every:
            return
        self.checkpoint(archive)
        last = self.rows[-1][0] if self.rows else -1
        if self.counter.used != last:
            self.rows.append((self.counter.used, float(self.metric(archive))))


def run_hillvallea(problem: BenchmarkProblem, kind: SearcherKind,
                   config: Optional[OptimizerConfig] = None, seed: int = 0,
                   trace_metric: Optional[Callable[[ElitistArchive], float]] = None
                   ) -> RunResult:
    """Run the full restart scheme on one problem until the budget is spent.

    ``trace_metric`` maps the archive to the traced value (defaults to the
    archive size); it is only consulted when tracing is enabled.
    """
    config = config or OptimizerConfig()
    budget = config.budget if config.budget is not None else problem.budget
    if budget <= 0:
        raise ValueError("budget must be positive")
    d = problem.domain.dimension
    volume = problem.domain.volume()
    counter = EvaluationCounter(budget)

    root = np.random.SeedSequence(seed)
    sample_seq, searcher_seq = root.spawn(2)
    sample_rng = np.random.default_rng(sample_seq)

    obj_init = BudgetedObjective(problem, counter, "init")
    obj_cluster = BudgetedObjective(problem, counter, "clustering")
    obj_local = BudgetedObjective(problem, counter, "local_opt")
    obj_post = BudgetedObjective(problem, counter, "postprocess")

    tracer = _Tracer(config.trace_every, trace_metric or (lambda a: float(len(a))),
                     counter)

    population_size = config.population_per_dim * d
    cluster_size = (config.cluster_size if config.cluster_size is not None
                    else recommended_population_size(kind, d))

    archive = ElitistArchive()
    side: list = []
    logs: list = []
    restarts = 0

    while counter.remaining > 0:
        # phase 1: sample, inject elites, select, cluster
        n_sample = min(population_size, counter.remaining)
        X = uniform_sample(problem.domain, n_sample, sample_rng)
        fs = obj_init.batch(X)
        population = [Solution(X[i], float(fs[i])) for i in range(len(fs))]
        tracer.checkpoint(archive)

        if config.injection is not InjectionMode.NONE:
            population.extend(archive.solutions)
        if config.injection is InjectionMode.ALL_OPTIMA:
            population.extend(side)

        selection = truncation_selection(population, kind.tau)
        eel = None
        if config.eel_mode == "average" and len(selection) >= 2:
            eel = average_edge_length(selection)
        clusters = hill_valley_clustering(selection, volume, d, obj_cluster, eel=eel)
        tracer.checkpoint(archive)

        # phase 2: one core searcher per niche not already represented
        searcher_eel = eel if eel is not None else expected_edge_length(
            volume, len(selection), d)
        known_ids = set(map(id, archive.solutions))
        if config.injection is InjectionMode.ALL_OPTIMA:
            known_ids.update(map(id, side))
        candidates = []
        n_skipped = 0
        for cluster in clusters:
            if id(cluster.founder) in known_ids:
                n_skipped += 1
                continue
            if counter.exhausted:
                # a zero-budget searcher terminates at once on its founder
                candidates.append(cluster.founder)
                continue
            searcher = init_from_cluster(
                cluster, d, searcher_eel, kind, cluster_size,
                rng=np.random.default_rng(searcher_seq.spawn(1)[0]),
                constants=config.constants)
            best = searcher.run(obj_local, problem.domain, tol=config.tol,
                                on_generation=lambda: tracer.checkpoint(archive))
            candidates.append(best)

        result = postprocess(candidates, archive, config.tol, obj_post)
        if config.injection is InjectionMode.ALL_OPTIMA:
            if result.emptied:
                side.clear()
            _absorb_side_optima(side, result.discarded, obj_post)
        tracer.checkpoint(archive)

        logs.append(RestartLog(
            index=restarts,
            population_size=population_size,
            cluster_size=cluster_size,
            selection_size=len(selection),
            n_clusters=len(clusters),
            clustering_complete=clusters.complete,
            n_skipped_elites=n_skipped,
            n_searchers=len(candidates),
            n_new_elites=result.added,
            archive_size=len(archive),
            archive_spread=archive.spread(),
        ))
        restarts += 1
        if result.added == 0:
            population_size = int(round(population_size * config.population_growth))
            cluster_size = math.ceil(config.cluster_growth * cluster_size)

    tracer.finish(archive)
    return RunResult(
        problem_id=problem.id,
        kind=kind,
        seed=seed,
        archive=archive,
        side_archive=side,
        evaluations_used=counter.used,
        budget=budget,
        phase_used=dict(counter.phase_used),
        restarts=restarts,
        per_restart_log=logs,
        trace=tracer.rows,
    )
