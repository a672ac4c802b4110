"""Gromov-Wasserstein alignment with KL ambiguity sets on the marginals.

The solver alternates a proximal plan update (entropic scalings against
the linearized quadratic cost) with closed-form updates of the two
relaxed marginals, each constrained to a KL ball around its reference.
See bpalm for the driver, robustness for contamination tooling, and
graphbench for the subgraph-alignment benchmark.
"""

__version__ = "0.1.0"

from .errors import (
    DimensionMismatch,
    DivergenceInfinite,
    EmptyFile,
    EpsilonOutOfRange,
    InfeasibleInit,
    InnerDiverged,
    InvalidParams,
    MaxInnerIterations,
    NewtonStalled,
    ParseError,
    RaggedRows,
    RgwError,
    SamplingFailed,
    SelfLoop,
    ZeroLipschitz,
)
from .measures import huber_mixture, is_in_kl_ball, kl_divergence, positive_measure, prob_vector
from .gwkernel import (
    apply_tensor,
    cost_matrix,
    coupling,
    gw_quadratic_value,
    lipschitz_constant,
    pairwise_distances,
    rgw_objective,
)
from .pisolver import SinkhornSettings, linearized_step_objective, solve_pi_subproblem
from .marginals import (
    DualRootResult,
    alpha_closed_form,
    dual_function_p,
    dual_function_p_prime,
    solve_marginal_subproblem,
)
from .bpalm import (
    RgwParams,
    SolveReport,
    solve_balanced_gw,
    solve_rgw,
    stationarity_measure,
    theoretical_step_bound,
)
from .robustness import (
    ContaminationSpec,
    bound_vs_rho,
    contaminated_source,
    contamination_sweep,
    overlapping_instance,
    overlapping_support_spec,
    recommended_rho,
    theorem1_bound,
)
from .graphbench import (
    AlignmentInstance,
    BenchmarkConfig,
    BenchRow,
    Graph,
    adjacency_cost,
    generate_ba_graph,
    matching_accuracy,
    run_alignment_benchmark,
    sample_connected_subgraph,
)

__all__ = [name for name in dir() if not name.startswith("_")]
