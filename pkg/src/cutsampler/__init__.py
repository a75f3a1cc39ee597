"""Sample MaxCut solutions from two-layer QAOA circuits executed as two
independent fragments via quantum wire cutting.

Pipeline: generate or load an instance, find a minimum balanced vertex
separator, shrink it to a single vertex with exact bookkeeping, train the
QAOA parameters on the shrunk instance, sample in cut / uncut /
classical-cut mode on a noiseless or noisy simulator, and expand every
sample back to an original solution.
"""

from .analysis import (ObjectiveHistogram, clamp_normalize, histogram_from_samples,
                       normalized_objective, percentile, summary_stats,
                       uniform_expectation)
from .instances import (ExactSolution, MaxCutInstance, ParseError, cut_value,
                        format_instance, generate_instance, parse_instance,
                        solve_exact)
from .pipeline import RunConfig, RunReport, classical_cut_run, compare_runs, run_pipeline
from .qaoa import QaoaParams, build_qaoa, init_schedule, train
from .separator import (SeparatorDecomposition, SeparatorInfeasibleError,
                        SeparatorTimeoutError, find_separator, verify_separator)
from .shrink import (MergeRecord, ShrinkTrace, estimate_correlations,
                     expand_solution, shrink_separator)
from .simulator import (Circuit, NoiseModel, ShotResult, exact_distribution,
                        expectation_of_objective, run_shot, sample_bitstrings)
from .wirecut import (KAPPA, CutPlan, QpdTerm, SignedSampleSet, build_cut_plan,
                      exact_cut_distribution, mub_cut_terms, pauli_cut_terms,
                      reconstruct_distribution, sample_cut_shot, sample_cut_shots)

__version__ = "0.1.0"
