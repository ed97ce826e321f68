"""specrecon: reconstruct population covariance spectra from sample spectra
of high-dimensional Gaussian data."""

from .spectrum import (
    ExclusionWindow,
    Spectrum,
    SpectrumRole,
    interlaces,
    ks_distance,
    match_index,
    shift_ratio,
    signed_shift,
    sort_spectrum,
    spectral_gap,
    stieltjes_sum,
)
from .lab import (
    DataMatrix,
    ExperimentShape,
    GroundTruthModel,
    gen_data_matrix,
    mc_ensemble,
    perturbation_column,
    restricted_covariance_spectrum,
    sample_covariance,
    sym_eigen,
    trial_rng,
)
from .secular import (
    SecularProblem,
    arrowhead_oracle,
    interlacing_check,
    locality_profile,
    secular_function,
    secular_solve,
)
from .reconstruct import (
    ConditionCheck,
    ReconstructionReport,
    forward_shift,
    h_vector,
    invert_spectrum,
    kl_condition,
    large_c_forward,
    rescaled_a,
    stieltjes_rhs,
)
from .mp import (
    LimitSpectrum,
    MPLaw,
    limit_density_curve,
    mp_cdf,
    mp_density,
    stieltjes_fixed_point,
)
from .config import ExperimentConfig, parse_config, serialize_config
from .runner import run_experiment

__version__ = "0.1.0"
