"""Stochastic splitting integrators and effective-diffusivity estimation.

The package integrates passive tracers, colored-noise tracers, inertial
particles and the small-inertia modified tracer model in periodic velocity
fields that split into exactly solvable shear terms, and estimates
effective diffusivities from reproducible Monte Carlo ensembles.
"""

from .config import ConfigError, ExperimentConfig, SweepSpec, parse_config, serialize_config
from .estimators import (DiffusivityEstimate, PowerLawFit, RunningSeries,
                         estimate_diffusive_time, estimate_diffusivity,
                         fit_exponential_rate, fit_power_law, mean_observable_series,
                         running_diffusivity, strong_error)
from .fields import (SplitTerm, SplittableField, eval_gradient, eval_velocity,
                     get_field, make_shear, make_taylor_green, make_zero,
                     parse_field_text, stream_function)
from .integrators import (ColoredState, InertialState, NoiseCoefficients, TracerState,
                          euler_step_inertial, euler_step_passive, lambda_map,
                          modified_equation_coefficients, modified_tracers_step,
                          noise_coefficients, ou_joint_sample, phi_j_step,
                          splitting_step_colored, splitting_step_inertial,
                          splitting_step_passive, tilde_phi_j_step)
from .noise import (PathStreams, StreamKey, brownian_refine, coupled_increments,
                    gaussian_vector, sample_brownian)
from .oracles import (AnalyticDiffusivity, free_diffusivity, jacobian_determinant,
                      modified_equation_check, reference_trajectory,
                      shear_diffusivity_analytic)
from .runner import (NumericalError, SimulationResult, SlopeReport, SweepResult,
                     run_convergence, run_coupling, run_simulation, run_sweep)

__version__ = "0.1.0"
