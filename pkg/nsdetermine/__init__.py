from __future__ import annotations

try:
    from .__version__ import version as __version__
except ImportError:
    pass

from .fields import SpectralField, ScalarField, leray_project, compute_norms, stokes_lambda1, poincare_constant
from .operators import bilinear_a, trilinear_b, nonlinear_B, gradnu_gradu, a_nu
from .viscosity import ViscosityModel, bounds, phi, kbar
from .solver import ForcingSpec, InitialSpec, SolverConfig, step, integrate, energy_balance_residual
from .projections import (ProjectionOperator, modal_projection, volume_projection, apply, error_norm,
                          estimate_constants, check_approx_inequalities)
from .estimates import grashof, n_bound, verify_apriori, coercivity_check
from .gronwall import gronwall_classical, gronwall_generalized_check
from .experiments import ExperimentConfig, twin_run, estimate_suite, certify_projection
from .session import Session
from .utils import (EstimateId, ForcingKind, GronwallOutcome, InitialKind, ProjectionKind, TimeProfile, TwinMode,
                    TwinVerdict, ViscosityKind)
