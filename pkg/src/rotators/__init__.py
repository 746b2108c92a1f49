"""Relativistic rotators: a worldline carrying a null direction.

Phase-space constraint algebra, gauge-fixed dynamics in the
centre-of-momentum frame, closed-form solutions, observables and Hessian
diagnostics, plus a projective light-cone particle as a warm-up model.
"""
__version__ = "0.1.0"

from .errors import (ClassificationError, DegenerateError, DomainError, FeasibilityError,
                     IntegrationAbort, InversionError, NumericError, RotatorError,
                     SuperluminalGaugeError)
from .minkowski import boost, dot, four, project_orthogonal, spatial_basis
from .model import (FUNDAMENTAL_MINUS, FUNDAMENTAL_PLUS, QUADRATIC, CasimirPair, Family,
                    MassSpinRelation, RotatorSpec, casimirs_from_momenta, casimirs_from_Q,
                    derive_f, get_family, lagrangian, momenta_from_velocities, polynomial_family)
from .brackets import (PhaseState, eval_constraints, first_class_report, hamiltonian_flow,
                       poisson_bracket, random_on_surface_state, regularity_determinant)
from .dynamics import (GaugeProfile, Trajectory, build_initial_state, closed_form_fund,
                       closed_form_phenom, eom, hamiltonian_cm, hamiltonian_cm_fund, integrate)
from .analysis import (angular_velocity, curvature_radius, hessian_rank, orbit_radius,
                       radius_from_casimirs, rapidity, torsion_residual)
from .sphere import SphereModelSpec, integrate_sphere, sphere_hessian, sphere_lagrangian, sphere_multiplier
