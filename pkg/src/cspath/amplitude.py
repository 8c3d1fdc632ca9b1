"""Closed-form coherent-state transition amplitude, evaluated in log form."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

from .bogoliubov import derive
from .core import as_label
from .errors import DomainError, SingularityError
from .propagator import DEFAULT_STEPS, evolve

OVERFLOW_LOG = 700.0
DEFAULT_LAMBDA_NODES = 33


@dataclass(frozen=True)
class Amplitude:
    """``log_value`` carries the magnitude in its real part and the unwrapped phase in its imaginary part."""

    log_value: complex

    @property
    def overflow(self):
        return abs(self.log_value.real) >= OVERFLOW_LOG

    @property
    def value(self):
        if self.log_value.real >= OVERFLOW_LOG:
            return complex(np.inf, np.inf)
        return complex(np.exp(self.log_value))

    @property
    def magnitude(self):
        return float(np.exp(min(self.log_value.real, OVERFLOW_LOG)))


def _labels(S, v, w):
    return as_label(v, S.n), as_label(w, S.n)


def log_det_factor(S):
    """``-1/2 log det(conj(alpha0)^-1 conj(alpha))`` on the tracked branch."""
    return -0.5 * S.log_det_ratio


def transition_amplitude(S, v, w):
    """``<v| U(T) |w>`` for unnormalised coherent states ``|w> = exp(w . a^+)|0>``.

    The exponent is ``v.(alpha^-1^+ w) + v.(sigma v)/2 - w.(gamma w)/2``; the
    determinant factor is ``-1/2`` times the continuously tracked
    ``log det(conj(alpha0)^-1 conj(alpha))`` carried by ``S``.
    """
    v, w = _labels(S, v, w)
    d = derive(S)
    quad = v @ (d.alpha_inv_dag @ w) + 0.5 * (v @ (d.sigma @ v)) - 0.5 * (w @ (d.gamma @ w))
    return Amplitude(complex(quad + log_det_factor(S)))


def classical_saddle(S, v, w):
    """Boundary data ``(z(T), zbar(0))`` of the stationary path.

    ``z(T) = alpha^-1^+ w + sigma v`` and ``zbar(0) = conj(alpha)^-1 v - gamma w``.
    """
    v, w = _labels(S, v, w)
    d = derive(S)
    z_T = d.alpha_inv_dag @ w + d.sigma @ v
    # conj(alpha)^-1 = (alpha^-1^+)^T
    zbar_0 = d.alpha_inv_dag.T @ v - d.gamma @ w
    return z_T, zbar_0


def _simpson_weights(grid):
    ones = np.eye(grid.size)
    return simpson(ones, x=grid, axis=1)


def lambda_continuation_phase(H, lam_grid=None, steps=DEFAULT_STEPS):
    """Determinant factor reached by integrating ``d log I / d lambda`` from ``I_0 = 1``.

    Each node evolves the ``lambda``-scaled propagator, forms
    ``tr(conj(alpha)^-1 d conj(alpha)/d lambda)`` at ``T`` from the variational
    formula and the grid is integrated with Simpson weights.  The result should
    match :func:`log_det_factor` of the time-tracked propagator.

    Raises :class:`SingularityError` with ``location`` set to the offending
    ``lambda`` if ``conj(alpha_lambda(T))`` degenerates on the way.
    """
    from .green import dlogdet_dlambda

    grid = np.linspace(0.0, 1.0, DEFAULT_LAMBDA_NODES) if lam_grid is None else np.asarray(lam_grid, float)
    if grid.ndim != 1 or grid.size < 2 or grid[0] != 0.0 or grid[-1] != 1.0 or np.any(np.diff(grid) <= 0):
        raise DomainError("lambda grid must increase strictly from 0 to 1")
    vals = np.empty(grid.size, complex)
    for i, lam in enumerate(grid):
        try:
            vals[i] = dlogdet_dlambda(H, float(lam), steps)
        except SingularityError as exc:
            raise SingularityError(f"conj(alpha_lambda(T)) is singular near lambda = {lam:.6g}",
                                   location=float(lam)) from exc
    return complex(-0.5 * (_simpson_weights(grid) @ vals))


def amplitude_for(H, v, w, steps=DEFAULT_STEPS, lam=1.0):
    """Evolve ``H`` and evaluate the amplitude in one call."""
    return transition_amplitude(evolve(H, lam=lam, steps=steps), v, w)
