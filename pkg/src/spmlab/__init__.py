"""spmlab: a numerical laboratory for stochastic porous-media-type diffusion.

Two independent solution routes for the same equation, a grid splitting
scheme and a weighted particle system, cross-validated against each other and
against closed-form profiles, moment identities and energy-decay envelopes.
"""

from .grid import (
    Grid,
    GridField,
    Mollifier,
    helmholtz_inverse,
    integral,
    make_grid,
    mollify,
    multiplier_norm_bound,
    sobolev_norm,
)
from .noise import (
    DoleansWeight,
    ModeSet,
    NoiseRealization,
    doleans_step,
    mode_field,
    noise_increment_field,
    path_line_integral,
    sample_noise,
)
from .nonlinearity import (
    NonlinearitySpec,
    catalog_nonlinearity,
    classify,
    monotonicity_constant,
    phi_from_psi,
    regularize,
)
from .particles import (
    ParticleEnsemble,
    WeightedDensity,
    init_ensemble,
    normalize_density,
    run_dsnld,
    second_moment_check,
    step_particles,
    weighted_density,
)
from .reference import InitialCondition
from .spde import (
    SpdeTrajectory,
    solve_fokker_planck,
    solve_spde,
    step_diffusion,
    step_noise,
    weak_form_residual,
)
from .diagnostics import (
    CheckResult,
    DiagnosticsReport,
    cross_validate,
    gronwall_check,
    h_minus1_distance,
    kappa_sweep,
    mollified_coefficient_experiment,
)
from .scenarios import (
    Scenario,
    list_suite,
    load_builtin,
    load_scenario,
    run_scenario,
)

__version__ = "0.1.0"
