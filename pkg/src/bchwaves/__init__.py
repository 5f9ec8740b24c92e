"""Smooth periodic traveling waves of the b-family Camassa-Holm equation:
construction, orbital-stability criteria, periodic spectra of the second
variation, and time evolution of the momentum density."""

__version__ = "0.1.0"

from .errors import (BchWavesError, BlowUp, CoefficientInconsistency,
                     ConvergenceFailure, DiscretizationNotConverged,
                     FDUnreliable, MarginTooSmall, NotInExistenceSet,
                     PositivityLost, QuadratureFailure, RouteMismatch)
from .evolution import (EvolutionState, RunDiagnostics, cfl_dt,
                        make_perturbation, orbital_distance,
                        reconstruct_velocity, run_experiment, step)
from .invariants import (CrestIdentityReport, InvariantSet, JacobianReport,
                         Multipliers, StabilityReport, crest_identities,
                         classify_stability, conserved_quantities,
                         euler_lagrange_residual, family_derivatives,
                         multipliers, parameter_jacobians,
                         restricted_invariants)
from .potential import (ExistenceResult, PotentialScan, WaveParameters, a_max,
                        critical_points, eval_g, eval_potential,
                        existence_check)
from .profile import (ProfileResiduals, WaveProfile, equilibrium_profile,
                      period, period_by_shooting, profile_residuals,
                      synthesize_profile, turning_points, wave_integral,
                      write_profile_csv, write_profile_json)
from .spectral import (SECOND_VARIATION_SCALE, OperatorCoefficients,
                       ProbeReport, ProofIdentityReport, SpectralReport,
                       apply_operator, assemble_operator, coercivity_probe,
                       hill_matrix, kernel_residual, periodic_spectrum,
                       proof_identities)

__all__ = [name for name in dir() if not name.startswith("_")]
