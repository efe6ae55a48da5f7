"""Transition densities for Wright-Fisher-type diffusions.

Library layout:

- diffusion: DiffusionSpec, the Lamperti transform, and the scalar
  functions (sigma, nu, big_v, m_diff) behind every density formula
- bridge:    Brownian-bridge Monte Carlo for the exact transition density
- models:    closed-form candidate densities plus Simpson normalization
- simulate:  the discrete binomial-resampling chain
- kde:       beta-kernel density estimation with adaptive smoothing
- metrics:   continuous Hellinger and L2 distances on grids
- config / pipeline / figures / cli: the experiment harness
"""

__version__ = "0.1.0"

from .diffusion import (
    BOUNDARY_OFFSET,
    NU_CAP_DEFAULT,
    DiffusionSpec,
    TransformPoint,
    big_v,
    lamperti_forward,
    lamperti_inverse,
    m_diff,
    nu,
    sigma,
    transform_upper,
)
from .bridge import (
    BridgePath,
    ExactDensityEstimate,
    McEstimate,
    bridge_ensemble,
    exact_density,
    exact_density_grid,
    mc_functional,
    sample_bridge,
)
from .models import (
    DensityModel,
    GridDensity,
    ae_corrected_density,
    ae_density,
    beta_moment_density,
    beta_moment_params,
    chord_mean_nu,
    density_grid,
    evaluate_model,
    gauss_approx_density,
    gauss_approx_outside_validity,
    gaussian_moment_density,
    moment_variance,
    mutation_ae_density,
    normalize,
    selection_ae_density,
    write_grid_density,
)
from .simulate import (
    TrajectoryEnsemble,
    exact_marginal_variance,
    export_csv,
    fixation_stats,
    load_ensemble,
    marginal_at,
    save_ensemble,
    simulate_ensemble,
)
from .kde import (
    BetaKernelEstimate,
    beta_kernel,
    default_b_grid,
    default_eval_grid,
    kde_evaluate,
    lepski_select_b,
)
from .metrics import DistanceRecord, hellinger, l2_distance
from .config import ExperimentConfig, load_config
from .errors import (
    ConfigError,
    DomainError,
    EmptySampleError,
    GridError,
    MonteCarloError,
    ParameterError,
    QuadratureError,
    SingularityError,
    WfdensityError,
)
