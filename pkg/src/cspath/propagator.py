"""Symplectic propagation of Bogoliubov blocks with a continuously tracked
``log det conj(alpha)``."""
from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from . import _kernels as K
from .errors import DomainError, IntegrationError, SingularityError, ValidationError

DEFAULT_STEPS = 1024
DEFAULT_REPROJECT_EVERY = 16
REPROJECT_TOL = 1e-14
MAX_RECOVERABLE_DEFECT = 1e-2
SINGULAR_COND = 1e13


@dataclass(frozen=True)
class SymplecticPropagator:
    """``S = [[alpha, beta], [conj(beta), conj(alpha)]]`` at time ``t``.

    ``logdet_abar`` is ``log det conj(alpha)`` on the branch reached
    continuously from 0 at ``t = 0``; ``logdet_abar0`` is the same quantity for
    the free evolution (``B = 0``), which is ``i * int_0^t tr A``.
    """

    alpha: np.ndarray
    beta: np.ndarray
    t: float = 0.0
    lam: float = 1.0
    logdet_abar: complex = 0j
    logdet_abar0: complex = 0j

    def __post_init__(self):
        a = np.asarray(self.alpha, dtype=np.complex128)
        b = np.asarray(self.beta, dtype=np.complex128)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or b.shape != a.shape:
            raise ValidationError(f"Bogoliubov blocks must be matching square matrices, got {a.shape}, {b.shape}")
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "beta", b)
        object.__setattr__(self, "logdet_abar", complex(self.logdet_abar))
        object.__setattr__(self, "logdet_abar0", complex(self.logdet_abar0))

    @classmethod
    def identity(cls, n, lam=1.0):
        return cls(np.eye(n, dtype=complex), np.zeros((n, n), complex), 0.0, lam)

    @property
    def n(self):
        return self.alpha.shape[0]

    @property
    def abar(self):
        return self.alpha.conj()

    @property
    def bbar(self):
        return self.beta.conj()

    @property
    def log_det_ratio(self):
        """``log det(conj(alpha0)^-1 conj(alpha))`` on the tracked branch."""
        return self.logdet_abar - self.logdet_abar0

    def matrix(self):
        return np.block([[self.alpha, self.beta], [self.bbar, self.abar]])


@dataclass(frozen=True)
class PropagatorHistory:
    """Propagator blocks on a uniform grid over ``[0, T]``."""

    times: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    logdet_abar: np.ndarray
    logdet_abar0: np.ndarray
    lam: float

    def __len__(self):
        return self.times.size

    @property
    def n(self):
        return self.alpha.shape[1]

    @property
    def T(self):
        return float(self.times[-1])

    def snapshot(self, i):
        return SymplecticPropagator(self.alpha[i], self.beta[i], float(self.times[i]), self.lam,
                                    complex(self.logdet_abar[i]), complex(self.logdet_abar0[i]))

    @property
    def snapshots(self):
        return [self.snapshot(i) for i in range(len(self))]

    @property
    def final(self):
        return self.snapshot(len(self) - 1)

    def csv_text(self):
        """Columns: ``t``, then ``Re/Im`` of every alpha and beta entry, then the log-determinants."""
        n = self.n
        header = ["t"]
        for name in ("alpha", "beta"):
            for a in range(n):
                for b in range(n):
                    header += [f"{name}_{a}{b}_re", f"{name}_{a}{b}_im"]
        header += ["logdet_abar_re", "logdet_abar_im", "logdet_abar0_re", "logdet_abar0_im"]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for i, t in enumerate(self.times):
            row = [repr(float(t))]
            for M in (self.alpha[i], self.beta[i]):
                for z in M.reshape(-1):
                    row += [repr(float(z.real)), repr(float(z.imag))]
            for z in (self.logdet_abar[i], self.logdet_abar0[i]):
                row += [repr(float(z.real)), repr(float(z.imag))]
            w.writerow(row)
        return buf.getvalue()

    def to_csv(self, path):
        tmp = f"{path}.tmp"
        with open(tmp, "w", newline="") as fh:
            fh.write(self.csv_text())
        os.replace(tmp, path)


def _check_lambda(lam):
    if not (0.0 <= lam <= 1.0):
        raise DomainError(f"lambda must lie in [0, 1], got {lam}")


def hamiltonian_generator(H, t, lam=1.0):
    """``i [[A, lam conj(B)], [-lam B, -A^T]]`` at time ``t``.

    The lower-right block is ``-A^T`` (which equals ``-conj(A)``) so that the
    lower row of ``S`` stays the complex conjugate of the upper row.
    """
    _check_lambda(lam)
    A = H.A(t)
    B = H.B(t)
    return 1j * np.block([[A, lam * B.conj()], [-lam * B, -A.T]])


def symplectic_defect(S):
    """Max operator-norm residual of ``aa^+ - bb^+ = 1`` and ``ab^T - ba^T = 0``."""
    a, b = S.alpha, S.beta
    n = a.shape[0]
    r1 = a @ a.conj().T - b @ b.conj().T - np.eye(n)
    r2 = a @ b.T - b @ a.T
    return float(max(np.linalg.norm(r1, 2), np.linalg.norm(r2, 2)))


def reproject(S, tol=1e-12, max_defect=MAX_RECOVERABLE_DEFECT):
    d = symplectic_defect(S)
    if d > max_defect:
        raise IntegrationError(f"symplectic defect {d:.3e} is beyond the recoverable bound {max_defect:.1e}")
    if d == 0.0:
        return S
    a, b = K.reproject_blocks(S.alpha.copy(), S.beta.copy(), min(tol, REPROJECT_TOL), 6)
    ld, ok = K.snap_logdet(a, S.logdet_abar)
    if not ok:
        raise SingularityError("conj(alpha) became singular during reprojection")
    return replace(S, alpha=a, beta=b, logdet_abar=ld)


def propagator_inverse(S):
    """Blocks of ``S^-1 = [[alpha^+, -beta^T], [-beta^+, alpha^T]]``.

    The inverse has ``conj(alpha_inv) = alpha^T`` whose determinant is
    ``conj(det conj(alpha))``, so the tracked logarithms are conjugated.
    """
    return SymplecticPropagator(S.alpha.conj().T, -S.beta.T, -S.t, S.lam,
                                S.logdet_abar.conjugate(), S.logdet_abar0.conjugate())


def check_invertible(abar, where="", cond_limit=SINGULAR_COND):
    c = np.linalg.cond(abar)
    if not np.isfinite(c) or c > cond_limit:
        raise SingularityError(f"conj(alpha) is numerically singular{where} (condition number {c:.3e})")


def evolve(H, lam=1.0, steps=DEFAULT_STEPS, record=False,
           reproject_every=DEFAULT_REPROJECT_EVERY, max_defect: Optional[float] = 1e-8):
    """Integrate ``dS/dt = -H_lam(t) S`` from ``S(0) = 1`` over ``[0, H.T]``.

    Parameters
    ----------
    H : QuadraticHamiltonian
    lam : float
        Scale of the pairing terms, in ``[0, 1]``.
    steps : int
        Number of fixed RK4 steps.
    record : bool
        Also return the :class:`PropagatorHistory` on the ``steps + 1`` nodes.
    reproject_every : int
        Reprojection cadence in steps (and always on the last step); 0 disables it.
    max_defect : float or None
        Raise :class:`IntegrationError` when the final symplectic defect exceeds
        this bound.  ``None`` skips the check.

    Returns
    -------
    SymplecticPropagator, or ``(SymplecticPropagator, PropagatorHistory)`` if ``record``.
    """
    _check_lambda(lam)
    steps = int(steps)
    if steps < 1:
        raise DomainError("steps must be >= 1")
    n, T = H.n, H.T
    h = T / steps
    A_s, B_s = H.sample(np.linspace(0.0, T, 2 * steps + 1))
    rows = steps + 1 if record else 1
    alpha = np.empty((rows, n, n), complex)
    beta = np.empty((rows, n, n), complex)
    ld = np.empty(rows, complex)
    ld0 = np.empty(rows, complex)
    status, at = K.rk4_propagate(A_s, B_s, float(lam), h, int(reproject_every), REPROJECT_TOL,
                                 alpha, beta, ld, ld0)
    if status == K.SINGULAR:
        raise SingularityError(f"conj(alpha) singular at t = {at * h:.6g}", location=at * h)
    if status == K.NONFINITE:
        raise IntegrationError(f"propagator overflowed at t = {at * h:.6g}")
    if status == K.DRIFT:
        raise IntegrationError(f"symplectic drift beyond recovery at t = {at * h:.6g}; use more steps")
    S = SymplecticPropagator(alpha[-1], beta[-1], T, lam, ld[-1], ld0[-1])
    check_invertible(S.abar, f" at t = {T:.6g}")
    if max_defect is not None:
        d = symplectic_defect(S)
        if d > max_defect:
            raise IntegrationError(f"symplectic defect {d:.3e} exceeds {max_defect:.1e} after {steps} steps")
    if not record:
        return S
    hist = PropagatorHistory(np.linspace(0.0, T, steps + 1), alpha, beta, ld, ld0, lam)
    return S, hist
