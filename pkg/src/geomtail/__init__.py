"""Certified upper bounds on the relative error of the subexponential
approximation P(S > x) ~ E(nu) * P(X > x) for geometric compound sums."""

from .bounder import (
    BoundCertificate,
    FTerms,
    ProcedureFailed,
    SupResult,
    TuneResult,
    VerifyReport,
    bound_constant,
    build_bound,
    c_interval,
    delta_sup,
    f_terms,
    phi_sup,
    tune,
    verify_bound,
)
from .compound import (
    DeltaTable,
    TailEstimate,
    TailTable,
    brute_force_tail,
    delta_from_tails,
    mc_tail,
    panjer_tail,
)
from .config import ConfigError, RunConfig
from .dist import (
    GeometricParams,
    LatticeDistribution,
    ParetoDist,
    PowerMixtureDist,
    SummandDistribution,
    WeibullDist,
    build_overshoot_upper,
    discretize,
)
from .kernels import (
    CutoffFunction,
    J_kernel,
    K_kernel,
    KKernelTestFunction,
    MonotoneEnvelope,
    PowerTestFunction,
    SplicedTestFunction,
    build_spliced_g,
    optimal_pareto_g,
    pareto_J_envelope,
    pareto_K_envelope,
    validate_h,
    weibull_J_envelope,
    weibull_K_envelope,
)

__version__ = "0.1.0"

__all__ = [
    "BoundCertificate",
    "ConfigError",
    "CutoffFunction",
    "DeltaTable",
    "FTerms",
    "GeometricParams",
    "J_kernel",
    "K_kernel",
    "KKernelTestFunction",
    "LatticeDistribution",
    "MonotoneEnvelope",
    "ParetoDist",
    "PowerMixtureDist",
    "PowerTestFunction",
    "ProcedureFailed",
    "RunConfig",
    "SplicedTestFunction",
    "SummandDistribution",
    "SupResult",
    "TailEstimate",
    "TailTable",
    "TuneResult",
    "VerifyReport",
    "WeibullDist",
    "bound_constant",
    "brute_force_tail",
    "build_bound",
    "build_overshoot_upper",
    "build_spliced_g",
    "c_interval",
    "delta_from_tails",
    "delta_sup",
    "discretize",
    "f_terms",
    "mc_tail",
    "optimal_pareto_g",
    "panjer_tail",
    "pareto_J_envelope",
    "pareto_K_envelope",
    "phi_sup",
    "tune",
    "validate_h",
    "verify_bound",
    "weibull_J_envelope",
    "weibull_K_envelope",
]
