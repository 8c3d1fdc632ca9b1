"""Algebra on Bogoliubov blocks: the saddle-point operators, Hilbert-Schmidt
norms and group composition."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import SingularityError
from .propagator import SINGULAR_COND, SymplecticPropagator


@dataclass(frozen=True)
class DerivedBogoliubov:
    """Final-time operators entering the amplitude.

    alpha_inv_dag : ``(alpha^-1)^+``
    gamma : ``conj(alpha)^-1 conj(beta)``
    sigma : ``beta conj(alpha)^-1``
    """

    alpha_inv_dag: np.ndarray
    gamma: np.ndarray
    sigma: np.ndarray


def _lu(abar):
    lu, piv = sla.lu_factor(abar, check_finite=True)
    d = np.abs(np.diag(lu))
    if d.min() == 0.0 or d.max() / d.min() > SINGULAR_COND:
        raise SingularityError("conj(alpha) is numerically singular")
    return lu, piv


def derive(S):
    abar = S.abar
    lu, piv = _lu(abar)
    n = S.n
    gamma = sla.lu_solve((lu, piv), S.bbar)
    # sigma = beta abar^-1  <=>  abar^T sigma^T = beta^T
    sigma = sla.lu_solve((lu, piv), S.beta.T, trans=1).T
    # (alpha^-1)^+ = (abar^-1)^T
    alpha_inv_dag = sla.lu_solve((lu, piv), np.eye(n), trans=1)
    return DerivedBogoliubov(alpha_inv_dag, gamma, sigma)


def hs_norm_beta(S):
    return float(np.sqrt(np.real(np.trace(S.beta.conj().T @ S.beta))))


def det_modulus_identity(S):
    """Return ``(|det(abar0^-1 abar)|^2, det(1 + beta beta^+))``; the two agree for symplectic S."""
    lhs = float(np.exp(2.0 * S.log_det_ratio.real))
    n = S.n
    sign, logdet = np.linalg.slogdet(np.eye(n) + S.beta @ S.beta.conj().T)
    return lhs, float(sign.real * np.exp(logdet))


def _continued_log_det_one_plus(X):
    """``log det(1 + X)`` continued along ``s -> det(1 + s X)`` from ``s = 0``.

    Each eigenvalue factor ``1 + s mu`` moves on a straight segment from 1, so
    its principal logarithm is the continuous one unless the segment passes
    through 0.
    """
    mu = np.linalg.eigvals(X)
    f = 1.0 + mu
    if np.any(np.abs(f) < 1e-300):
        raise SingularityError("composed conj(alpha) is singular")
    return complex(np.sum(np.log(f)))


def compose(S2, S1):
    """``S2 @ S1`` with the tracked log-determinants combined additively.

    ``conj(alpha) = abar2 (1 + X) abar1`` with ``X = gamma2 sigma1``; the
    correction ``log det(1 + X)`` is fixed by continuity along the straight
    line from ``X = 0``.
    """
    a1, b1, a2, b2 = S1.alpha, S1.beta, S2.alpha, S2.beta
    alpha = a2 @ a1 + b2 @ b1.conj()
    beta = a2 @ b1 + b2 @ a1.conj()
    gamma2 = np.linalg.solve(S2.abar, S2.bbar)
    sigma1 = np.linalg.solve(S1.abar.T, b1.T).T
    corr = _continued_log_det_one_plus(gamma2 @ sigma1)
    return SymplecticPropagator(alpha, beta, S2.t + S1.t, S1.lam,
                                S2.logdet_abar + S1.logdet_abar + corr,
                                S2.logdet_abar0 + S1.logdet_abar0)
