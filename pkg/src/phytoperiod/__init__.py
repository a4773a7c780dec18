"""Toolkit for a seasonally forced two-species phytoplankton
competition model with a fear effect and toxin release.

Provides periodic coefficient functions, the model vector fields in
original and log coordinates, the sufficient-condition checker with its
a priori bound ladder, fixed and adaptive Runge-Kutta integration, a
shooting solver for periodic solutions with Floquet stability analysis,
the period-averaged algebraic system, and a config-driven CLI.
"""

from .averaged import (AveragedSolveError, ClosedFormResult,
                       NoPositiveSolutionError, closed_form_mu0, grid_scan,
                       solve_averaged)
from .coefficients import PeriodicCoefficient, extrema, mean_by_quadrature
from .conditions import (BoundReport, ConditionVerdicts,
                         DegenerateParameterError, M0_CANONICAL,
                         M0_VARIANT_K2, check_conditions, compute_bounds)
from .integrator import (IntegratorConfig, IntegrationError,
                         NonFiniteStateError, StepUnderflowError, Trajectory,
                         flow_map, integrate, monodromy, variational_flow,
                         write_trajectory_csv)
from .model import (DomainOverflowError, ModelParams, averaged_jacobian,
                    averaged_residual, jac_log, jac_original, rhs_homotopy,
                    rhs_log, rhs_original)
from .orbit import (BoundCheck, ExtinctionDiagnosis, NearDegenerateOrbitError,
                    NonConvergenceError, OrbitSearchError, PeriodicOrbit,
                    SeedResult, detect_steady_state, diagnose_extinction,
                    find_periodic_orbit, seed_by_transient, verify_bounds)

__version__ = "0.1.0"
