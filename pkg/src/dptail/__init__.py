"""Certified exponential bounds on Beta and finite Dirichlet tail probabilities."""

__version__ = "0.1.0"

from ._validation import DegenerateScaleError, DomainError
from .beta_bounds import (
    BetaParams,
    BoundKind,
    BoundReport,
    PerturbationRule,
    R_function,
    bernstein_bound,
    eta_cap,
    hoeffding_bound,
    kl_bound,
    perturbed_kl_bound_general,
    perturbed_kl_bound_table1,
    s0,
    s1,
    s2,
    s_inf,
)
from .dirichlet_bounds import (
    DirichletParams,
    Perturbation,
    beyond_unit_bound,
    chernoff_kinf_bound,
    eta_star_oracle,
    two_value_log_tail,
    unit_mass_eta_star,
    unit_mass_perturbed_bound,
)
from .kinf import FiniteSupport, KinfSolution, kinf_bruteforce, kinf_indicator, kinf_variational
from .montecarlo import (
    TailEstimate,
    Verdict,
    check_dirichlet_multinomial,
    check_superadditivity_convex,
    check_superadditivity_halfspace,
    clopper_pearson,
    estimate_tail,
    sample_dirichlet,
    sample_gamma,
)
from .special import beta_cdf, beta_tail, kl_binary, kl_discrete, lambert_w0, log_beta_tail, log_gamma
