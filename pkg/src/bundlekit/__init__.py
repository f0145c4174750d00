"""bundlekit: bundle-pricing optimization with learned search-space pruning.

Exact mixed-bundling and bundle-size-pricing baselines on an embedded
LP/branch-and-bound stack, a bipartite graph network that predicts which
products belong in each segment's optimal bundle, cutoff-based pruning
strategies, a probability-guided local search, and a reproducible benchmark
harness.
"""

from .instance import (Bundle, EMPTY_BUNDLE, GenConfig, Instance, bundle_cost,
                       gen_instance, parse_instance, reservation,
                       serialize_instance)
from .lp import LpBuilder, LpModel, LpSolution, solve_lp
from .milp import MilpModel, MilpSolution, brute_force_pricing, solve_milp
from .formulations import (CandidateSet, PricingSolution, build_bsp,
                           build_fixed_assignment_lp, build_mb,
                           gen_subadditivity)
from .gcn import (GcnParams, GraphData, LabeledExample, ProbMatrix,
                  TrainConfig, build_graph, forward, loss_and_grad,
                  make_labels, predict_probs, train)
from .strategies import fcp, local_search, pcp, rr_tr, solve_with_candidates
from .bench import BenchConfig, run_benchmark, run_label_pipeline

__version__ = "0.1.0"
