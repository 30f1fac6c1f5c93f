"""Bond percolation on the two-dimensional Sierpinski carpet lattice."""

from .carpet import (
    CARPET3,
    FULL_GRID3,
    CellAddress,
    GeneratorSet,
    Rect,
    RegionTransform,
    SpongeGraph,
    apply_transform,
    build_full_window,
    build_sponge,
    check_generator_conditions,
    level_of,
    nth_box,
    retained_cell,
    separation_scale,
    window_graph,
)
from .dualgraph import DualGraph, build_dual
from .errors import (
    ArgumentError,
    CapacityError,
    CarpetError,
    DomainError,
    GeometryError,
    InvalidAddressError,
    LevelError,
    NotAVertexError,
    PairingError,
    SaturationError,
    StarvationError,
    SubcriticalError,
)
from .estimator import (
    Estimate,
    WindowSampler,
    branching_mc,
    conditional_pivotal,
    estimate,
    estimate_crossing,
    estimate_pc,
    estimate_tau,
    estimate_theta,
    russo_check,
    sweep,
    wilson_interval,
)
from .paperevents import (
    CrossingEvent,
    EventSpec,
    LatticePath,
    annulus_pivotal_scan,
    check_d_implication,
    detect_C,
    detect_C_composite,
    detect_E,
    detect_delta,
    detect_delta_chain,
    detect_surrounding_dual,
    leftmost_closed_dual_path,
    lowest_crossing,
    pivotal_edges,
    spanning_cluster,
)
from .percolation import (
    BondConfiguration,
    ClusterPartition,
    UniformField,
    UnionFind,
    clusters,
    connected,
    flip_edge,
    has_circuit_around,
    has_crossing,
    has_dual_crossing,
    sample_config,
    sample_field,
    threshold_config,
)
from .recursion import (
    ScalarResult,
    eval_f,
    eval_g,
    eval_phi,
    eval_psi,
    fit_double_exponential,
    gw_extinction,
    gw_generation_law,
    gw_simulate,
    iterate_threshold,
    solve_p_eps,
    solve_x_eps,
)
from .branching import (
    BoxSpec,
    TreeField,
    TreeIndex,
    ambient_rect,
    anchor,
    audit_q_disjoint,
    build_box,
    connection_cost,
    detect_box_event,
    ell_offsets,
    geometry_audit,
    mirror_anchor,
    mirror_box,
    q_square,
    tree_cluster,
    tree_distance,
    tree_nodes,
    tree_stats,
    z_field,
    z_value,
)

__version__ = "0.1.0"
