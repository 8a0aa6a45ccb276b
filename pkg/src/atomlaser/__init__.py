"""Linearized atom-laser model: Gaussian moment dynamics, unravelings and
the physically realizable stationary ensembles they generate."""
from .errors import (AtomLaserError, ConstraintViolation, ConvergenceError, DomainError,
                     IntegrationError, InternalError, TruncationError)
from .gaussian import (CovarianceTriple, LaserParams, MomentState, alpha_from,
                       overlap_with_coherent)
from .dynamics import (MomentTrajectory, coherence_report, conditional_phase_growth,
                       evolve_analytic, evolve_ode, phase_variance_at_interatomic_time)
from .unraveling import (UnravelingMatrix, ensemble_average_check, second_moment_drift,
                         simulate, simulate_ensemble, spectral_norm, synthesize_noise)
from .region import (PRQuery, cc_ensemble, feasible_beta_interval, output_only_steady_state,
                     pr_closed_form, qsd_ensemble, qsd_fixed_point_check, solve_min_norm)
from .jumps import diagonal_master_evolve, gillespie, rates
from .experiments import TrapExperiment, chi_thomas_fermi, linewidth, report

__version__ = "0.1.0"
