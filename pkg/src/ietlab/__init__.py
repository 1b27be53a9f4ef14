"""Numerical laboratory for suspension flows over countable interval exchanges."""

from .errors import (
    ConfigError,
    ConsistencyError,
    ConstraintViolationError,
    InsufficientDataError,
    LabError,
    SingularityProximityError,
    TruncationExceededError,
)
from .flow import (
    AaronsonRecord,
    Cocycle2x2,
    ExperimentResult,
    FTLERecord,
    aaronson_average,
    aaronson_experiment,
    checkpoints_geometric,
    cocycle,
    flow,
    ftle,
    jacobian_step,
    lyapunov_experiment,
)
from .geometry import (
    MetricParams,
    SuspensionPoint,
    TangentVec,
    beta_factor,
    canonicalize,
    constant_C,
    edge_distance,
    fiber_edges,
    in_K_delta,
    is_canonical,
    metric_form,
    metric_norm,
    op_norm_between,
    op_norm_euclidean,
    rho_blend,
)
from .iet import (
    DEFAULT_TRUNCATION,
    GOLDEN_ROTATION,
    CheckReport,
    CountableIET,
    FiberPoint,
    PartitionEntropy,
    partition_entropy,
    validate,
)
from .measure import (
    AbramovResult,
    EntropyEstimate,
    InvarianceReport,
    MeasureReport,
    PointBatch,
    Region,
    SymbolStream,
    abramov,
    bernoulli_stream,
    block_entropy,
    coded_orbit_stream,
    entropy_estimate,
    invariance_check,
    lz78_rate,
    plugin_block_entropy,
    read_symbols,
    sample_mu,
    standard_boxes,
    total_mass,
    write_symbols,
)
from .roof import (
    DefaultPolicy,
    ExplicitPolicy,
    ProportionalPolicy,
    RoofIntegral,
    RoofSpec,
    RoofValue,
    SummabilityReport,
    adaptive_simpson,
    choose_b_and_check,
    gauss_legendre,
    log_derivative_integral,
    roof_integral,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "ConsistencyError",
    "ConstraintViolationError",
    "InsufficientDataError",
    "LabError",
    "SingularityProximityError",
    "TruncationExceededError",
    "AaronsonRecord",
    "Cocycle2x2",
    "ExperimentResult",
    "FTLERecord",
    "aaronson_average",
    "aaronson_experiment",
    "checkpoints_geometric",
    "cocycle",
    "flow",
    "ftle",
    "jacobian_step",
    "lyapunov_experiment",
    "MetricParams",
    "SuspensionPoint",
    "TangentVec",
    "beta_factor",
    "canonicalize",
    "constant_C",
    "edge_distance",
    "fiber_edges",
    "in_K_delta",
    "is_canonical",
    "metric_form",
    "metric_norm",
    "op_norm_between",
    "op_norm_euclidean",
    "rho_blend",
    "DEFAULT_TRUNCATION",
    "GOLDEN_ROTATION",
    "CheckReport",
    "CountableIET",
    "FiberPoint",
    "PartitionEntropy",
    "partition_entropy",
    "validate",
    "AbramovResult",
    "EntropyEstimate",
    "InvarianceReport",
    "MeasureReport",
    "PointBatch",
    "Region",
    "SymbolStream",
    "abramov",
    "bernoulli_stream",
    "block_entropy",
    "coded_orbit_stream",
    "entropy_estimate",
    "invariance_check",
    "lz78_rate",
    "plugin_block_entropy",
    "read_symbols",
    "sample_mu",
    "standard_boxes",
    "total_mass",
    "write_symbols",
    "DefaultPolicy",
    "ExplicitPolicy",
    "ProportionalPolicy",
    "RoofIntegral",
    "RoofSpec",
    "RoofValue",
    "SummabilityReport",
    "adaptive_simpson",
    "choose_b_and_check",
    "gauss_legendre",
    "log_derivative_integral",
    "roof_integral",
    "__version__",
]
