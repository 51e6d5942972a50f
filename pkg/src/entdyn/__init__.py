"""Monte Carlo toolkit for entanglement growth in Gaussian ensembles.

Bipartite pure states are drawn as rectangular coefficient matrices with
independently tunable entry variances. A single scalar evolution
coordinate computed from those variances governs how ensemble-averaged
entropies grow from the separable limit to the ergodic plateau; two
independent dynamical routes (a matrix process and an eigenvalue
diffusion) reproduce the same growth and are cross-checked against
direct sampling.
"""

__version__ = "0.1.0"

from .complexity import (
    GAMMA_DEFAULT,
    ComplexityValue,
    complexity_closed_form,
    complexity_general,
    profile_complexity,
    y_grid,
)
from .dynamics import (
    DysonState,
    LangevinState,
    MomentCheck,
    MomentReport,
    dyson_evolve,
    dyson_init,
    element_moment_check,
    evolve_block,
    langevin_advance,
    langevin_evolve,
    langevin_profile,
    separable_block,
    stationary_check,
    trajectory_rows,
    wishart_logpdf,
)
from .ensembles import (
    CMatrix,
    VarianceProfile,
    build_profile,
    custom_profile,
    profile_from_config,
    profile_to_config,
    sample_c,
    sample_stationary,
    separable_profile,
)
from .errors import (
    BinningError,
    ConfigError,
    DegenerateProfileError,
    DegenerateStateError,
    EntdynError,
    FitFailureError,
    NumericalError,
    ParameterDomainError,
    SingularParameterError,
    StiffRegionError,
)
from .measures import (
    MeasureSet,
    batch_measures,
    compute_measures,
    log_sum_r0,
    min_entropy,
    power_sums,
    renyi,
    von_neumann,
)
from .schmidt import DensityMatrix, Spectrum, gram_spectrum, reduce, spectrum, spectrum_of
from .seeds import stream
from .stats import (
    ConditionalCurve,
    FitResult,
    ScalingReport,
    SweepCurve,
    conditional_by_trace,
    fit_growth,
    fit_growth_arrays,
    growth_model,
    scaling_fit,
    stationary_spectra,
    sweep,
)
from .theory import (
    PredictedCurve,
    TheoryInputs,
    estimate_alpha,
    predict_r1,
    predict_r2,
    theory_rows,
)

__all__ = [
    "GAMMA_DEFAULT",
    "BinningError",
    "CMatrix",
    "ComplexityValue",
    "ConditionalCurve",
    "ConfigError",
    "DegenerateProfileError",
    "DegenerateStateError",
    "DensityMatrix",
    "DysonState",
    "EntdynError",
    "FitFailureError",
    "FitResult",
    "LangevinState",
    "MeasureSet",
    "MomentCheck",
    "MomentReport",
    "NumericalError",
    "ParameterDomainError",
    "PredictedCurve",
    "ScalingReport",
    "SingularParameterError",
    "Spectrum",
    "StiffRegionError",
    "SweepCurve",
    "TheoryInputs",
    "VarianceProfile",
    "batch_measures",
    "build_profile",
    "complexity_closed_form",
    "complexity_general",
    "compute_measures",
    "conditional_by_trace",
    "custom_profile",
    "dyson_evolve",
    "dyson_init",
    "element_moment_check",
    "estimate_alpha",
    "evolve_block",
    "fit_growth",
    "fit_growth_arrays",
    "gram_spectrum",
    "growth_model",
    "langevin_advance",
    "langevin_evolve",
    "langevin_profile",
    "log_sum_r0",
    "min_entropy",
    "power_sums",
    "predict_r1",
    "predict_r2",
    "profile_complexity",
    "profile_from_config",
    "profile_to_config",
    "reduce",
    "renyi",
    "sample_c",
    "sample_stationary",
    "scaling_fit",
    "separable_block",
    "separable_profile",
    "spectrum",
    "spectrum_of",
    "stationary_check",
    "stationary_spectra",
    "stream",
    "sweep",
    "theory_rows",
    "trajectory_rows",
    "von_neumann",
    "wishart_logpdf",
    "y_grid",
]
