"""Cutoff scans over families of independent modes: Hilbert-Schmidt growth of
beta, the determinant factor and the vacuum amplitude as the mode count grows."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Sequence

import numpy as np

from .core import QuadraticHamiltonian
from .errors import DomainError, UnsupportedError

DEFAULT_TOL = 1e-6
CONVERGENT = "convergent"
DIVERGENT = "divergent"
NOT_IMPLEMENTABLE = "not implementable"
INCONCLUSIVE = "inconclusive"

SCAN_COLUMNS = ("K", "hs_norm_sq", "abs_det", "abs_vacuum_amplitude", "phase_increment", "verdict")
HS_COLUMNS = ("K", "partial_sum", "verdict")


@dataclass(frozen=True)
class ModeFamily:
    """Independent single modes ``k = 1, 2, ...`` with

    ``A_k = a_offset + a_slope * k`` and ``B_k = b_scale * k ** (-b_power)``.
    """

    name: str = "family"
    b_scale: complex = 0.0
    b_power: float = 0.0
    a_offset: float = 0.0
    a_slope: float = 0.0
    cutoffs: Sequence[int] = field(default_factory=lambda: (10, 100, 1000))

    def __post_init__(self):
        cut = tuple(int(k) for k in self.cutoffs)
        if not cut:
            raise DomainError("a mode family needs at least one cutoff")
        if cut[0] < 1 or any(b <= a for a, b in zip(cut, cut[1:])):
            raise DomainError("cutoffs must be positive and strictly increasing")
        vals = (self.b_scale, self.b_power, self.a_offset, self.a_slope)
        if not all(np.isfinite(complex(x)) for x in vals):
            raise DomainError("mode family parameters must be finite")
        object.__setattr__(self, "cutoffs", cut)

    def coefficients(self, K):
        k = np.arange(1, K + 1, dtype=float)
        A = self.a_offset + self.a_slope * k
        B = complex(self.b_scale) * k ** (-float(self.b_power))
        return A, B

    def hamiltonian(self, K, T):
        """The ``K``-mode diagonal Hamiltonian, for cross-checks at small ``K``."""
        A, B = self.coefficients(K)
        return QuadraticHamiltonian.constant(np.diag(A), np.diag(B), T, label=f"{self.name}[K={K}]")


def single_mode_blocks(a, b, T):
    """Closed-form ``alpha(T)``, ``beta(T)`` and the continuous ``log conj(alpha(T))``.

    For one mode with constant real ``a`` and complex ``b`` the generator has
    eigenvalues ``+-kappa``, ``kappa^2 = |b|^2 - a^2``.  When ``kappa`` is
    imaginary ``conj(alpha)`` winds about the origin and its argument is
    continued through the branch cuts of ``atan``.  Vectorised over arrays.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=complex)
    k2 = np.abs(b) ** 2 - a ** 2
    real = k2 >= 0
    kap = np.sqrt(np.abs(k2))
    x = kap * T
    with np.errstate(all="ignore"):
        ch = np.where(real, np.cosh(x), np.cos(x))
        sinc = np.where(kap > 0, np.where(real, np.sinh(x), np.sin(x)) / np.where(kap > 0, kap, 1.0), T)
    alpha = ch - 1j * a * sinc
    beta = -1j * np.conj(b) * sinc
    abar = np.conj(alpha)
    log_mod = 0.5 * np.log(np.abs(abar) ** 2)
    # hyperbolic case: Re conj(alpha) = cosh > 0, principal branch is continuous
    ph_real = np.angle(abar)
    with np.errstate(all="ignore"):
        ratio = np.where(kap > 0, a / np.where(kap > 0, kap, 1.0), 0.0)
        ph_osc = np.arctan(ratio * np.tan(x)) + np.sign(a) * np.pi * np.floor(x / np.pi + 0.5)
    ph_osc = np.where(kap > 0, ph_osc, np.arctan(a * T))
    phase = np.where(real & (kap > 0), ph_real, ph_osc)
    return alpha, beta, log_mod + 1j * phase


def _slope(x, y):
    return float(np.polyfit(x, y, 1)[0])


def cauchy_verdict(cutoffs, values, tol=DEFAULT_TOL, divergent_label=DIVERGENT):
    """Classify partial sums ``values`` observed at increasing ``cutoffs``.

    Convergent when the last increment is below ``tol`` or the increment per
    unit ``log K`` decays faster than ``K^-1/2``; divergent when that rate
    stays above ``tol`` and is flat or growing in ``K``.
    """
    K = np.asarray(cutoffs, float)
    v = np.asarray(values)
    if K.size < 2:
        return INCONCLUSIVE
    inc = np.abs(np.diff(v))
    if inc[-1] < tol:
        return CONVERGENT
    if K.size < 4:
        return INCONCLUSIVE
    rate = inc / np.diff(np.log(K))
    tail = slice(-3, None)
    r = rate[tail]
    if np.any(r <= 0):
        return INCONCLUSIVE
    p = _slope(np.log(K[1:][tail]), np.log(r))
    if p < -0.5:
        return CONVERGENT
    if p > -0.1 and r[-1] > tol:
        return divergent_label
    return INCONCLUSIVE


@dataclass(frozen=True)
class ScanResult:
    family: str
    T: float
    rows: List[dict]
    phase_verdict: str

    def column(self, name):
        return np.array([r[name] for r in self.rows])

    @property
    def verdict(self):
        return self.rows[-1]["verdict"]

    def summary(self):
        det_v = cauchy_verdict(self.column("K"), self.column("abs_det"))
        lines = [f"{self.family}: T={self.T!r}, implementability {self.verdict}, "
                 f"|det| {det_v}, determinant phase {self.phase_verdict}"]
        if det_v == CONVERGENT and self.phase_verdict != CONVERGENT:
            lines.append("  |det| stabilises while the phase increments do not")
        return "\n".join(lines)


def implementability_scan(fam, T, tol=DEFAULT_TOL):
    """Per-cutoff table of ``sum |beta_k(T)|^2``, ``|det(conj(alpha0)^-1 conj(alpha))|``,
    ``|I_K(0, 0)|`` and the change of the determinant-factor phase.

    The verdict in row ``K`` classifies the Hilbert-Schmidt partial sums seen
    up to that cutoff; a divergent sum is reported as ``"not implementable"``.
    Sums are cumulative in mode order, so results are reproducible bit for bit.
    """
    Kmax = fam.cutoffs[-1]
    A, B = fam.coefficients(Kmax)
    _, beta, logabar = single_mode_blocks(A, B, T)
    ratio = logabar - 1j * A * T
    hs = np.cumsum(np.abs(beta) ** 2)
    lr = np.cumsum(ratio)
    idx = np.array(fam.cutoffs) - 1
    hs_k = hs[idx]
    lr_k = lr[idx]
    phase = -0.5 * lr_k.imag
    rows = []
    prev = 0.0
    for i, K in enumerate(fam.cutoffs):
        rows.append({
            "K": int(K),
            "hs_norm_sq": float(hs_k[i]),
            "abs_det": float(np.exp(lr_k[i].real)),
            "abs_vacuum_amplitude": float(np.exp(-0.5 * lr_k[i].real)),
            "phase_increment": float(phase[i] - prev) + 0.0,
            "verdict": cauchy_verdict(fam.cutoffs[:i + 1], hs_k[:i + 1], tol, NOT_IMPLEMENTABLE),
        })
        prev = phase[i]
    return ScanResult(fam.name, float(T), rows, cauchy_verdict(fam.cutoffs, phase, tol))


def vacuum_log_amplitude(fam, K, T):
    """``log I_K(0, 0)`` as a sum of per-mode closed forms."""
    A, B = fam.coefficients(K)
    _, _, logabar = single_mode_blocks(A, B, T)
    return complex(-0.5 * np.sum(logabar - 1j * A * T))


def b_hs_check(x, cutoffs=None, tol=DEFAULT_TOL):
    """Partial sums of ``sum_ab |B_ab|^2`` with a Cauchy verdict.

    A finite, time-independent Hamiltonian gives one row.  Time-dependent
    input is rejected: the sufficient condition concerns a constant ``B``.
    """
    if isinstance(x, QuadraticHamiltonian):
        if not x.is_constant:
            raise UnsupportedError("the Hilbert-Schmidt condition on B is checked for time-independent H only")
        s = float(np.sum(np.abs(x.B(0.0)) ** 2))
        return [{"K": x.n, "partial_sum": s, "verdict": CONVERGENT}]
    if not isinstance(x, ModeFamily):
        raise UnsupportedError(f"cannot check {type(x).__name__}")
    cut = tuple(cutoffs) if cutoffs is not None else x.cutoffs
    _, B = x.coefficients(cut[-1])
    ps = np.cumsum(np.abs(B) ** 2)[np.array(cut) - 1]
    return [{"K": int(K), "partial_sum": float(ps[i]), "verdict": cauchy_verdict(cut[:i + 1], ps[:i + 1], tol)}
            for i, K in enumerate(cut)]
