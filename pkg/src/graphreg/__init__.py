"""Graph-Laplacian regularized regression on random geometric graphs."""

__version__ = "0.1.0"

from .errors import (
    BracketFailure,
    CgStall,
    DimensionMismatch,
    GraphRegError,
    InvalidK,
    InvalidLabelCount,
    MalformedCsv,
    NewtonStall,
    ParseError,
    TooLargeForDense,
    UnsupportedManifold,
    UnsupportedTrendManifoldPair,
    ValidationError,
)
from .geograph import (
    BUMP,
    INDICATOR,
    GeometricGraph,
    KernelSpec,
    build_graph,
    degrees,
    dirichlet_energy,
    laplacian_apply,
    random_walk_laplacian_apply,
    tau_eta,
)
from .loss import (
    QUADRATIC,
    QUARTIC,
    ExpectedDerivative,
    LossModel,
    modified_trend,
    modified_trend_offset,
    modified_trend_values,
    quad_quartic,
)
from .manifolds import (
    FLAT_TORUS,
    PAPER_SINE,
    SPHERE,
    UNIT_SQUARE,
    LabeledDataset,
    ManifoldSpec,
    NoiseModel,
    PointCloud,
    TrendSpec,
    asym_bernoulli,
    constant_trend,
    make_dataset,
    sample_cloud,
    sum_of_sines,
    sym_bernoulli,
    trend_eval,
    trend_laplacian,
    uniform_noise,
)
from .semisup import VoronoiAssignment, knn_regress, out_of_sample, voronoi_extend, voronoi_stats
from .solver import (
    DEFAULT_CONFIG,
    SolveReport,
    SolverConfig,
    dense_spectral_solve,
    max_principle_check,
    objective_eval,
    objective_grad,
    residual,
    solve_quadratic,
    solve_semilinear,
)
from .validate import (
    BiasCheck,
    ConsistencyReport,
    ContinuumSolution,
    bias_check,
    continuum_solve,
    nonlocal_laplacian,
    pointwise_consistency,
)
from .experiments import (
    ErrorReport,
    ExperimentConfig,
    Schedule,
    interior_mask,
    rate_study,
    render_heatmap,
    run_experiment,
)
