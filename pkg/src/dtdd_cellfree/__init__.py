"""Dynamic-TDD cell-free massive MIMO: spectral-efficiency analysis, AP-mode
scheduling, pilot allocation, and campaign tooling."""

__version__ = "0.1.0"

from .geometry import NetworkConfig, NetworkGeometry, build_geometry, pathloss, place_aps_grid
from .estimation import (
    EstimationStats,
    PilotAssignment,
    PilotConfig,
    draw_channel_block,
    estimation_stats,
)
from .pilots import PilotAllocParams, cellular_assignment, iterative_allocation, random_assignment
from .closed_form import (
    PowerConfig,
    Schedule,
    SEReport,
    dl_power_coeffs,
    dl_sinr_mfp,
    dl_sinrs_mfp,
    sum_se,
    ul_sinr_mrc,
    ul_sinrs_mrc,
)
from .scheduler import (
    GreedyObjectiveTerms,
    ScheduleSearchResult,
    SchedulingContext,
    exhaustive_schedule,
    greedy_schedule,
    lower_bound_cost,
    objective_terms,
    submodularity_audit,
)
from .montecarlo import McParams, mc_sum_se, rzf_precoder
from .cellular import (
    CellularConfig,
    build_cellular_layout,
    cellular_tdd_sum_se,
    fd_cellular_sum_se,
)
from .harness import (
    CampaignResult,
    ExperimentConfig,
    emit_results,
    percentile_90_likely,
    run_campaign,
    run_drop,
)
