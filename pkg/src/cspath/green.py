"""Green function of ``D_lambda`` with mixed boundary conditions, and the trace
identities linking it to ``d/d lambda log det conj(alpha_lambda(T))``."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_simpson, cumulative_trapezoid, simpson

from . import _kernels as K
from .bogoliubov import derive
from .core import apply_D
from .errors import DomainError, ShapeError
from .propagator import DEFAULT_STEPS, PropagatorHistory, evolve

THETA_ZERO = 0.5
GRID_TOL = 1e-12


@dataclass(frozen=True)
class GreenKernel:
    """Recorded ``S_lambda(t)`` history plus ``gamma_lambda(T)``."""

    history: PropagatorHistory
    gamma_T: np.ndarray
    H: object
    theta0: float = THETA_ZERO

    @property
    def lam(self):
        return self.history.lam

    @property
    def n(self):
        return self.history.n

    def index(self, t):
        times = self.history.times
        i = int(np.searchsorted(times, t))
        for j in (i - 1, i):
            if 0 <= j < times.size and abs(times[j] - t) <= GRID_TOL * max(1.0, abs(t)):
                return j
        raise DomainError(f"t = {t} is not a grid node (interpolation is disabled)")


def green_kernel(H, lam=1.0, steps=DEFAULT_STEPS, theta0=THETA_ZERO):
    S, hist = evolve(H, lam=lam, steps=steps, record=True)
    return GreenKernel(hist, derive(S).gamma, H, theta0)


def _theta(x, theta0):
    return 1.0 if x > 0 else (0.0 if x < 0 else theta0)


def _blocks(a_t, b_t, a_u, b_u, gamma, th):
    ab_t, bb_t = a_t.conj(), b_t.conj()
    a_dag, b_dag = a_u.conj().T, b_u.conj().T
    gzz = -1j * th * (a_t @ a_dag - b_t @ b_dag) + 1j * b_t @ (gamma @ a_dag - b_dag)
    gzb = -1j * th * (a_t @ b_u.T - b_t @ a_u.T) + 1j * b_t @ (gamma @ b_u.T - a_u.T)
    gbz = -1j * th * (bb_t @ a_dag - ab_t @ b_dag) + 1j * ab_t @ (gamma @ a_dag - b_dag)
    gbb = -1j * th * (bb_t @ b_u.T - ab_t @ a_u.T) + 1j * ab_t @ (gamma @ b_u.T - a_u.T)
    return gzz, gzb, gbz, gbb


def green_block(K_, t, u, theta0=None):
    """``G_lambda(t, u)`` as a ``2n x 2n`` matrix; ``t`` and ``u`` must be grid nodes."""
    h = K_.history
    i, j = K_.index(t), K_.index(u)
    th = _theta(h.times[i] - h.times[j], K_.theta0 if theta0 is None else theta0)
    gzz, gzb, gbz, gbb = _blocks(h.alpha[i], h.beta[i], h.alpha[j], h.beta[j], K_.gamma_T, th)
    return np.block([[gzz, gzb], [gbz, gbb]])


def _forcing_components(h, F_top, F_bot):
    # [S^-1 Sigma F]_zeta and [S^-1 Sigma F]_zetabar at each node
    a, b = h.alpha, h.beta
    g_z = -1j * np.einsum("kba,kb->ka", a.conj(), F_top) - 1j * np.einsum("kba,kb->ka", b, F_bot)
    g_b = 1j * np.einsum("kba,kb->ka", b.conj(), F_top) + 1j * np.einsum("kba,kb->ka", a, F_bot)
    return g_z, g_b


def _running_integral(f, t, order):
    if order == 4:
        # cumulative_simpson drops imaginary parts
        return (cumulative_simpson(f.real, x=t, axis=0, initial=0.0)
                + 1j * cumulative_simpson(f.imag, x=t, axis=0, initial=0.0))
    return cumulative_trapezoid(f, t, axis=0, initial=0.0)


def solve_forced(K_, F_top, F_bot, order=2):
    """``zeta = G F`` on the history grid.

    Uses the factorisation of ``G`` into ``alpha(t)``/``beta(t)`` times running
    integrals, so the cost is linear in the grid size.  The running integrals
    are trapezoidal (``order=2``) or cumulative Simpson (``order=4``).
    """
    h = K_.history
    t = h.times
    if F_top.shape != (t.size, K_.n) or F_bot.shape != F_top.shape:
        raise ShapeError(f"forcing must have shape {(t.size, K_.n)}")
    g_z, g_b = _forcing_components(h, F_top, F_bot)
    cz = _running_integral(g_z, t, order)
    cb = _running_integral(g_b, t, order)
    cb_tail = cb[-1] - cb
    gz_total = K_.gamma_T @ cz[-1]
    a, b = h.alpha, h.beta
    z = (np.einsum("kab,kb->ka", a, cz) - np.einsum("kab,b->ka", b, gz_total)
         - np.einsum("kab,kb->ka", b, cb_tail))
    zb = (np.einsum("kab,kb->ka", b.conj(), cz) - np.einsum("kab,b->ka", a.conj(), gz_total)
          - np.einsum("kab,kb->ka", a.conj(), cb_tail))
    return z, zb


def verify_green(K_, F_top, F_bot, margin=2, order=2):
    """Max-norm residual of ``D_lambda (G F) - F`` in the interior plus ``|zeta(0)| + |zetabar(T)|``.

    ``order`` selects second-order (trapezoid, central differences) or
    fourth-order discretisations of both the quadrature and ``D_lambda``.
    """
    if order not in (2, 4):
        raise DomainError("order must be 2 or 4")
    z, zb = solve_forced(K_, F_top, F_bot, order)
    t = K_.history.times
    top, bot = apply_D(K_.H, K_.lam, t, z, zb, order)
    sl = slice(margin, t.size - margin)
    bulk = max(np.max(np.abs(top[sl] - F_top[sl]), initial=0.0),
               np.max(np.abs(bot[sl] - F_bot[sl]), initial=0.0))
    bc = np.max(np.abs(z[0]), initial=0.0) + np.max(np.abs(zb[-1]), initial=0.0)
    return float(bulk + bc)


def _B_on_grid(K_):
    _, B = K_.H.sample(K_.history.times)
    return B


def trace_gn(K_, theta0=None):
    """``Tr(G_lambda N)`` by composite Simpson quadrature.

    With ``theta0=None`` the equal-time blocks use the reduced expression in
    which the step-function terms have already been cancelled.  Passing a value
    keeps those terms with ``theta(0) = theta0``; they vanish for a symplectic
    history, so the result should not depend on it.
    """
    h = K_.history
    B = _B_on_grid(K_)
    if theta0 is None:
        f = K.trace_integrand(h.alpha, h.beta, B, K_.gamma_T)
    else:
        f = np.empty(len(h), complex)
        for k in range(len(h)):
            _, gzb, gbz, _ = _blocks(h.alpha[k], h.beta[k], h.alpha[k], h.beta[k], K_.gamma_T, theta0)
            f[k] = -np.trace(gzb @ B[k] + gbz @ B[k].conj())
    return complex(simpson(f, x=h.times))


def ds_dlambda(H, lam, T=None, steps=DEFAULT_STEPS, history=None):
    """``dS_lambda(T)/d lambda = -int_0^T S(T) S^-1(u) (dH/d lambda)(u) S(u) du``.

    ``history`` may be passed to reuse an existing recording at this ``lambda``.
    """
    if T is not None and T != H.T:
        H = H.window(0.0, T)
    if history is None:
        _, history = evolve(H, lam=lam, steps=steps, record=True)
    _, B = H.sample(history.times)
    f = K.dsym_integrand(history.alpha, history.beta, B)
    integral = simpson(f, x=history.times, axis=0)
    return -history.final.matrix() @ integral


def dlogdet_dlambda(H, lam, steps=DEFAULT_STEPS):
    """``tr(conj(alpha_lambda(T))^-1 d conj(alpha_lambda(T))/d lambda)`` via the variational formula."""
    S, hist = evolve(H, lam=lam, steps=steps, record=True)
    n = S.n
    dabar = ds_dlambda(H, lam, history=hist)[n:, n:]
    return complex(np.trace(np.linalg.solve(S.abar, dabar)))


def dlogdet_dlambda_fd(H, lam, eps=1e-4, steps=DEFAULT_STEPS):
    """Finite-difference counterpart of :func:`dlogdet_dlambda` on the tracked log-determinant.

    Central differences in the interior of ``[0, 1]``, second-order one-sided
    stencils at the ends.
    """
    def ld(x):
        return evolve(H, lam=x, steps=steps).logdet_abar

    if lam - eps < 0.0:
        return complex((-3 * ld(lam) + 4 * ld(lam + eps) - ld(lam + 2 * eps)) / (2 * eps))
    if lam + eps > 1.0:
        return complex((3 * ld(lam) - 4 * ld(lam - eps) + ld(lam - 2 * eps)) / (2 * eps))
    return complex((ld(lam + eps) - ld(lam - eps)) / (2 * eps))


def ds_dlambda_fd(H, lam, eps=1e-5, steps=DEFAULT_STEPS):
    """Central difference ``(S_{lam+eps} - S_{lam-eps}) / 2 eps``, one-sided at the ends of ``[0, 1]``."""
    def S(x):
        return evolve(H, lam=x, steps=steps).matrix()

    if lam - eps < 0.0:
        return (-3 * S(lam) + 4 * S(lam + eps) - S(lam + 2 * eps)) / (2 * eps)
    if lam + eps > 1.0:
        return (3 * S(lam) - 4 * S(lam - eps) + S(lam - 2 * eps)) / (2 * eps)
    return (S(lam + eps) - S(lam - eps)) / (2 * eps)
