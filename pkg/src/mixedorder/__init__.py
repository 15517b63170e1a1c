"""Well-posedness analysis of mixed-order systems ``u_t = op[a] u`` in L^p.

Symbols, order reduction, principal-symbol classification, FFT evolution and
multiplier probes, and a catalog of thermoelastic plate models.
"""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("mixedorder")
except PackageNotFoundError:  # pragma: no cover - source tree without install
    __version__ = "0.1.0"

from ._backend import BACKEND
from .errors import (
    AnalysisError,
    ArgumentError,
    DomainError,
    IntegrityError,
    MixedOrderError,
    PreconditionError,
    ResolutionError,
    SaturationError,
)
from .evolution import (
    FrequencyGrid,
    StateField,
    WavePacketSpec,
    evolve,
    lp_norm,
    norm_growth_experiment,
    synthesize_packet,
)
from .propagator import build_propagator, matrix_exp, multiplier_growth_probe, semigroup_check
from .reduction import WeightVector, lambda_weight, reduce, weight_admissibility
from .spectral import (
    Case,
    WellPosednessVerdict,
    affine_fit,
    classify,
    eigen_field,
    mikhlin_estimate,
    quasi_hyperbolicity,
    radial_dependence_test,
)
from .symbols import (
    ConeRegion,
    HomogeneousComponent,
    MatrixSymbol,
    evaluate,
    homogenize,
    hoermander_estimate_scan,
    principal_part,
    scaling_limit,
)
from .thermoelastic import PlateModel, Variant, build_symbol, model_verdict

__all__ = [
    "BACKEND", "AnalysisError", "ArgumentError", "DomainError", "IntegrityError",
    "MixedOrderError", "PreconditionError", "ResolutionError", "SaturationError",
    "FrequencyGrid", "StateField", "WavePacketSpec", "evolve", "lp_norm",
    "norm_growth_experiment", "synthesize_packet", "build_propagator", "matrix_exp",
    "multiplier_growth_probe", "semigroup_check", "WeightVector", "lambda_weight", "reduce",
    "weight_admissibility", "Case", "WellPosednessVerdict", "affine_fit", "classify",
    "eigen_field", "mikhlin_estimate", "quasi_hyperbolicity", "radial_dependence_test",
    "ConeRegion", "HomogeneousComponent", "MatrixSymbol", "evaluate", "homogenize",
    "hoermander_estimate_scan", "principal_part", "scaling_limit", "PlateModel", "Variant",
    "build_symbol", "model_verdict", "__version__",
]
