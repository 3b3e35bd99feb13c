"""Multi-modal continuous optimization via hill-valley niche clustering.

The toolkit locates all global optima of a bounded black-box objective:
a fitness-aware clustering step partitions a sampled population into
presumed niches, a Gaussian core searcher optimizes each niche, and a
restart scheme with an elitist archive grows the population until the
evaluation budget is spent.
"""

from .core_search import (CmsaSearcher, CoreSearcher, EdaSearcher, GaussianInit,
                          SearcherConstants, SearcherKind, init_from_cluster,
                          recommended_population_size)
from .evaluation import AggregateSummary, PeakRatioReport, aggregate, peak_ratio
from .hillvalley import (Cluster, ClusterSet, Solution, average_edge_length,
                         expected_edge_length, hill_valley_clustering,
                         hill_valley_test, test_point_count)
from .optimizer import (ElitistArchive, InjectionMode, OptimizerConfig,
                        RestartLog, RunResult, postprocess, run_hillvallea,
                        truncation_selection, uniform_sample)
from .problems import (BenchmarkProblem, BudgetedObjective, EvaluationCounter,
                       KnownOptimum, SearchDomain, UnsupportedProblemError,
                       evaluate, make_problem, problem_names)

__all__ = [
    "AggregateSummary", "BenchmarkProblem", "BudgetedObjective", "Cluster",
    "ClusterSet", "CmsaSearcher", "CoreSearcher", "EdaSearcher",
    "ElitistArchive", "EvaluationCounter", "GaussianInit", "InjectionMode",
    "KnownOptimum", "OptimizerConfig", "PeakRatioReport", "RestartLog",
    "RunResult", "SearchDomain", "SearcherConstants", "SearcherKind",
    "Solution", "UnsupportedProblemError", "aggregate", "average_edge_length",
    "evaluate", "expected_edge_length", "hill_valley_clustering",
    "hill_valley_test", "init_from_cluster", "make_problem", "peak_ratio",
    "postprocess", "problem_names", "recommended_population_size",
    "run_hillvallea", "test_point_count", "truncation_selection",
    "uniform_sample",
]

__version__ = "0.1.0"
