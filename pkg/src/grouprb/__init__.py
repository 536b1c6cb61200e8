"""Randomized benchmarking over finite matrix groups.

Simulates standard, random-walk and generator-only RB protocols for monomial
unitary groups MU(d, n) and small Clifford groups, fits the decay curves and
turns the fitted rates into average-fidelity estimates.
"""

from .channels import (
    DepolarizeToState,
    IdentityNoise,
    RandomIsometry,
    Superoperator,
    average_fidelity,
    choi,
    entanglement_fidelity,
    make_noise,
)
from .config import ExperimentSpec, load_spec, parse_spec_text
from .errors import (
    ConfigError,
    GroupTooLargeError,
    InfeasibleSizeError,
    NonConvergenceError,
    NumericalInconsistencyError,
    UnsupportedSamplingError,
)
from .experiments import emit_comparison, run_experiment
from .fitting import fidelity_from_fit, fit_decay, fit_double_decay, fit_single_decay
from .groups import CliffordGroup, MonomialElement, MonomialGroup
from .rb import (
    RBConfig,
    exact_expectation_curve,
    hoeffding_bound,
    run_approx_rb,
    run_generator_rb,
    run_standard_rb,
)
from .tables import reproduce_table
from .twirl import exact_twirl, fidelity_bounds, mu_structure_params
from .walks import mixing_time, tv_distance

__all__ = [
    "average_fidelity",
    "choi",
    "CliffordGroup",
    "ConfigError",
    "DepolarizeToState",
    "emit_comparison",
    "entanglement_fidelity",
    "exact_expectation_curve",
    "exact_twirl",
    "ExperimentSpec",
    "fidelity_bounds",
    "fidelity_from_fit",
    "fit_decay",
    "fit_double_decay",
    "fit_single_decay",
    "GroupTooLargeError",
    "hoeffding_bound",
    "IdentityNoise",
    "InfeasibleSizeError",
    "load_spec",
    "make_noise",
    "mixing_time",
    "MonomialElement",
    "MonomialGroup",
    "mu_structure_params",
    "NonConvergenceError",
    "NumericalInconsistencyError",
    "parse_spec_text",
    "RandomIsometry",
    "RBConfig",
    "reproduce_table",
    "run_approx_rb",
    "run_experiment",
    "run_generator_rb",
    "run_standard_rb",
    "Superoperator",
    "tv_distance",
    "UnsupportedSamplingError",
]

__version__ = "0.1.0"
