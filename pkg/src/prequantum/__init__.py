"""Deterministic dissipative flows that converge onto eigenvalue lattices of
commuting Hermitian operators, and the emergent Schrodinger phases they carry."""

from .emergent import (EmergentHamiltonian, ModePhase, PhaseComparison, beat_frequency,
                       build_hamiltonian, compare_emergent_phase, emergent_energy,
                       interference_ensemble, limit_cycle_period, match_eigenvalue, mode_phase,
                       schrodinger_evolve)
from .errors import (ConfigurationError, ContractViolation, IncoherentFixedPointWarning,
                     InsufficientDataError, IntegrationError, NumericError, PrequantumError,
                     SamplingError)
from .flow import (BasinMap, FixedPointReport, IntegratorSettings, Scenario, Trajectory,
                   basin_map, bisect_basin_boundary, classify_fixed_point, field_grad_sq,
                   field_value, fit_convergence_rate, integrate_beable_flow,
                   integrate_polynomial_flow, integrate_single, kappa_for_resolution,
                   min_root_slope, single_flow_rhs)
from .io import ScenarioDocument, load_scenario, write_results
from .operators import (CommutingSet, EigenTable, RowLattice, conjugate_unitary,
                        generate_commuting_set, random_unitary, row_lattice,
                        simultaneous_spectrum, validate_commuting_set)
from .polynomial import Polynomial, characteristic_polynomial, matrix_characteristic_polynomial
from .symmetry import (BeableTransform, apply_transform, covariance_residual,
                       equivariance_check, invariance_check)

__version__ = "0.1.0"
