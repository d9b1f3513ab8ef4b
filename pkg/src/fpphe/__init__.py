"""fpphe: competing first-passage percolation in a hostile environment.

Simulation and analysis toolkit: graph generators (trees, lattices, free
products, hyperbolic tessellations), event-driven FPPHE / Richardson / MDLA
dynamics, geodesic and hyperbolicity machinery, multi-scale good-cylinder
analysis, and Monte Carlo sweeps over the (lambda, mu) phase space.
"""

from .graphs import (
    Graph,
    ParameterError,
    SizeError,
    RangeError,
    FrontierError,
    SchemaVersionError,
    bfs_distances,
    internal_boundary,
    cheeger_ratio_search,
    growth_profile,
    generate_regular_tree,
    generate_lattice,
    generate_free_product,
    generate_tessellation,
)
from .engine import (
    PassageTimeField,
    SeedField,
    StopRule,
    Trace,
    run_fpphe,
    run_richardson,
    run_single_fpp,
    classify_outcome,
    passage_tail_bounds,
    wilson_interval,
)
from .geometry import (
    EmbeddedTree,
    EscapeRay,
    build_cylinder,
    build_escape_ray,
    canonical_geodesic,
    delta_thin_estimate,
    detour_length,
    embed_binary_tree,
)
from .mdla import MdlaState, run_mdla
from .multiscale import (
    check_ball_chain_events,
    check_good_cylinder,
    count_minimal_cutsets,
    derive_scale_params,
    find_good_path,
    plan_ball_chain,
    prune_bad_subtrees,
)
from .experiments import (
    SweepResult,
    SweepSpec,
    fppl_area_fraction,
    render_mdla,
    render_trace,
    sweep,
    write_sweep,
)

__version__ = "0.1.0"
