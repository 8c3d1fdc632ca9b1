"""Coherent-state transition amplitudes for bosonic systems with time-dependent
quadratic Hamiltonians, with the oracles and diagnostics used to check them.

Set ``CSPATH_DISABLE_NUMBA=1`` before import to run the pure-numpy kernels.
"""
from ._jit import backend
from .amplitude import (Amplitude, classical_saddle, lambda_continuation_phase, log_det_factor,
                        transition_amplitude)
from .bogoliubov import DerivedBogoliubov, compose, derive, hs_norm_beta
from .core import (CoherentLabel, DiscretizedPath, ModeSpace, QuadraticHamiltonian, apply_D,
                   classical_energy, evaluate_action, frequency_sweep, random_constant, random_smooth,
                   single_mode_squeeze)
from .diagnostics import ModeFamily, b_hs_check, implementability_scan
from .errors import (CSPathError, DomainError, IntegrationError, ShapeError, SingularityError,
                     UnsupportedError, ValidationError)
from .green import GreenKernel, ds_dlambda, green_block, green_kernel, trace_gn, verify_green
from .oracles import (DiscretePIConfig, FockConfig, discrete_path_integral, fock_matrix_element,
                      unitarity_check)
from .propagator import PropagatorHistory, SymplecticPropagator, evolve, symplectic_defect

__version__ = "0.1.0"

__all__ = [
    "Amplitude", "CSPathError", "CoherentLabel", "DerivedBogoliubov", "DiscretePIConfig",
    "DiscretizedPath", "DomainError", "FockConfig", "GreenKernel", "IntegrationError", "ModeFamily",
    "ModeSpace", "PropagatorHistory", "QuadraticHamiltonian", "ShapeError", "SingularityError",
    "SymplecticPropagator", "UnsupportedError", "ValidationError", "apply_D", "b_hs_check", "backend",
    "classical_energy", "classical_saddle", "compose", "derive", "discrete_path_integral",
    "ds_dlambda", "evaluate_action", "evolve", "fock_matrix_element", "frequency_sweep",
    "green_block", "green_kernel", "hs_norm_beta", "implementability_scan",
    "lambda_continuation_phase", "log_det_factor", "random_constant", "random_smooth",
    "single_mode_squeeze", "symplectic_defect", "trace_gn", "transition_amplitude",
    "unitarity_check", "verify_green",
]
