"""Two-layer granular silo filling: similarity solutions and evolutive profiles."""

from .exact import (
    G_function,
    RadialProfile,
    example1_exact,
    example2_radial,
    similarity_1d_exact,
    source_cumulative,
)
from .experiments import (
    ErrorTable,
    ExperimentConfig,
    export_profile,
    observed_order,
    run_evolve,
    run_experiment,
    run_similarity,
)
from .fd import (
    RunReport,
    SchemeConfig,
    detect_similarity,
    du_upwind,
    flux_G,
    run,
    stable_dt,
    step_1d,
    step_2d,
)
from .fe import (
    AssemblyError,
    CourantMesh,
    FESimilarity,
    PotentialSolution,
    SolverError,
    discrete_mean_rate,
    element_to_node,
    flux_from_potential,
    reconstruct_u_1d,
    reconstruct_u_2d,
    rolling_from_flux,
    similarity_fe,
    solve_potential,
    standing_gradient,
)
from .model import (
    Atom,
    DiskPatch,
    Grid1D,
    Grid2D,
    IntervalPatch,
    LayerState,
    Parameters,
    RectPatch,
    SimilarityPair,
    SourceSpec,
    sample_source,
    source_mean,
    uniform_source_1d,
    uniform_source_2d,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
