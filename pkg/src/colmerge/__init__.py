"""Merging of uncertain load nodes for robust transmission-constrained unit commitment."""

__version__ = "0.1.0"

from .system import (  # noqa: E402
    DispatchSchedule,
    Partition,
    PowerSystem,
    aggregate_scenario,
    validate_system,
)
from .uniform import (  # noqa: E402
    ApproxResult,
    BoxInstance,
    brute_force_minimax,
    eval_phi_range,
    max_residual_at_vertices,
    shift_to_zero_lower,
    solve_box,
    solve_uniform_approx,
)
from .greedy import (  # noqa: E402
    ApproxParams,
    MergeConfig,
    MergeTrace,
    PairErrorCache,
    compute_params,
    greedy_merge,
    pair_merge_error,
    select_best_pair,
)
from .transform import (  # noqa: E402
    MergedSystem,
    build_merged_system,
    check_merged_feasible,
    check_original_feasible,
)
from .screen import ScreenResult, screen_redundant  # noqa: E402
from .verify import (  # noqa: E402
    AuditReport,
    bound_attainment_sweep,
    delta_metrics,
    run_theorem1_audit,
    vertex_bits,
)
