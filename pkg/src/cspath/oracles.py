"""Independent reference computations: truncated Fock-space evolution and the
time-sliced coherent-state path integral."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import reduce

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import expm_multiply

from . import _kernels as K
from .core import as_label
from .errors import DomainError, SingularityError

MAX_FOCK_DIM = 2_000_000
LEAK_WARN = 1e-10


@dataclass(frozen=True)
class FockConfig:
    """``cutoff`` is the highest occupation kept in each mode."""

    cutoff: int = 60
    substeps: int = 512

    def __post_init__(self):
        if int(self.cutoff) < 1 or int(self.substeps) < 1:
            raise DomainError("cutoff and substeps must be >= 1")


@dataclass(frozen=True)
class DiscretePIConfig:
    """``N`` time slices; ``assembly`` is ``"banded"`` (slice elimination) or ``"dense"``."""

    N: int = 1024
    assembly: str = "banded"

    def __post_init__(self):
        if int(self.N) < 2:
            raise DomainError("the discrete path integral needs N >= 2 slices")
        if self.assembly not in ("banded", "dense"):
            raise DomainError(f"unknown assembly {self.assembly!r}")


@dataclass(frozen=True)
class FockResult:
    value: complex
    leak: float
    warning: bool


# truncated Fock space ----------------------------------------------------

def _ladder(n, cutoff):
    d = cutoff + 1
    a1 = sp.diags(np.sqrt(np.arange(1, d, dtype=float)), 1, shape=(d, d), format="csr", dtype=complex)
    eye = sp.identity(d, dtype=complex, format="csr")
    ops = []
    for m in range(n):
        factors = [a1 if k == m else eye for k in range(n)]
        ops.append(reduce(lambda x, y: sp.kron(x, y, format="csr"), factors))
    return ops


def _fock_hamiltonian(A, B, a, adag):
    n = len(a)
    Hop = sp.csr_matrix(a[0].shape, dtype=complex)
    for i in range(n):
        for j in range(n):
            if A[i, j] != 0:
                Hop = Hop + A[i, j] * (adag[i] @ a[j])
            if B[i, j] != 0:
                Hop = Hop + 0.5 * B[i, j] * (a[i] @ a[j]) + 0.5 * np.conj(B[i, j]) * (adag[i] @ adag[j])
    return Hop


def _bargmann(x, n, cutoff):
    """Coefficients ``prod_a x_a^m_a / sqrt(m_a!)`` on the product basis (no conjugation)."""
    m = np.arange(cutoff + 1)
    logfact = np.array([0.5 * math.lgamma(k + 1) for k in m])
    vecs = []
    for xa in x:
        c = np.zeros(cutoff + 1, complex)
        c[0] = 1.0
        if xa != 0:
            c = np.exp(m * np.log(complex(xa)) - logfact)
        vecs.append(c)
    return reduce(np.kron, vecs)


def _shell_weight(psi, n, cutoff):
    """Fraction of the norm on basis states with some mode at the cutoff."""
    occ = np.indices((cutoff + 1,) * n).reshape(n, -1)
    edge = np.any(occ == cutoff, axis=0)
    p = np.abs(psi) ** 2
    tot = p.sum()
    return float(p[edge].sum() / tot) if tot > 0 else 0.0


def _fock_evolve(H, T, w, cfg):
    n = H.n
    dim = (cfg.cutoff + 1) ** n
    if dim > MAX_FOCK_DIM:
        raise DomainError(f"Fock space of dimension {dim} is too large")
    if T != H.T:
        H = H.window(0.0, T)
    a = _ladder(n, cfg.cutoff)
    adag = [x.conj().T.tocsr() for x in a]
    psi = _bargmann(as_label(w, n), n, cfg.cutoff)
    if T == 0:
        return psi
    if H.is_constant:
        return expm_multiply(-1j * T * _fock_hamiltonian(H.A(0.0), H.B(0.0), a, adag), psi)
    dt = T / cfg.substeps
    for k in range(cfg.substeps):
        t = (k + 0.5) * dt
        psi = expm_multiply(-1j * dt * _fock_hamiltonian(H.A(t), H.B(t), a, adag), psi)
    return psi


def fock_matrix_element(H, T, v, w, cfg=FockConfig()):
    """``<v| U(T) |w>`` on the truncated Fock space with unnormalised coherent vectors.

    ``U`` is the time-ordered product of midpoint exponentials of the
    normal-ordered Hamiltonian over ``cfg.substeps`` slices (a single
    exponential for constant ``H``).  ``leak`` is the share of the evolved
    norm sitting on the cutoff shell.
    """
    psi = _fock_evolve(H, T, w, cfg)
    bra = _bargmann(as_label(v, H.n), H.n, cfg.cutoff)
    leak = _shell_weight(psi, H.n, cfg.cutoff)
    warn = leak > LEAK_WARN
    if warn:
        warnings.warn(f"Fock truncation leak {leak:.2e} at cutoff {cfg.cutoff}", RuntimeWarning, stacklevel=2)
    return FockResult(complex(bra @ psi), leak, warn)


def unitarity_check(H, T, w, cfg=FockConfig()):
    """Relative deviation of the evolved norm from ``exp(|w|^2)``."""
    psi = _fock_evolve(H, T, w, cfg)
    ref = np.exp(float(np.sum(np.abs(as_label(w, H.n)) ** 2)))
    return float(abs(np.sum(np.abs(psi) ** 2) - ref) / ref)


# discretised path integral ----------------------------------------------

def slice_matrices(H, T, N):
    """Per-slice ``(L_k, Q_k, Rb_k)`` with ``A``, ``B`` sampled at slice midpoints."""
    if T != H.T:
        H = H.window(0.0, T)
    dt = T / N
    A, B = H.sample((np.arange(N) + 0.5) * dt)
    L = np.eye(H.n)[None] - 1j * dt * A
    return np.ascontiguousarray(L), np.ascontiguousarray(-1j * dt * B), np.ascontiguousarray(-1j * dt * B.conj())


def _dense(L, Q, Rb, v, w):
    N, n = L.shape[:2]
    m = (N - 1) * n
    M = np.zeros((2 * m, 2 * m), complex)
    j = np.zeros(2 * m, complex)

    def z(k):  # z_k, k = 1..N-1
        return slice((k - 1) * n, k * n)

    def zb(k):
        return slice(m + (k - 1) * n, m + k * n)

    I = np.eye(n)
    for k in range(1, N):
        M[z(k), zb(k)] += I
        M[zb(k), z(k)] += I
        M[z(k), z(k)] -= Q[k]
        M[zb(k), zb(k)] -= Rb[k - 1]
        if k < N - 1:
            M[zb(k + 1), z(k)] -= L[k]
            M[z(k), zb(k + 1)] -= L[k].T
    j[zb(1)] += L[0] @ w
    j[z(N - 1)] += L[N - 1].T @ v
    Pi = np.block([[np.zeros((m, m)), np.eye(m)], [np.eye(m), np.zeros((m, m))]])
    sign, logabs = np.linalg.slogdet(Pi @ M)
    if sign == 0:
        raise SingularityError("discrete Gaussian form is singular")
    const = 0.5 * (w @ Q[0] @ w) + 0.5 * (v @ Rb[N - 1] @ v)
    return complex(-0.5 * (logabs + 1j * np.angle(sign)) + 0.5 * (j @ np.linalg.solve(M, j)) + const)


def discrete_path_integral(H, T, v, w, cfg=DiscretePIConfig()):
    """``log I_N`` of the time-sliced integral with normal-ordered short-time kernels.

    Returns the logarithm; the square-root branch of each slice determinant is
    the principal one (each pivot is a small perturbation of the identity).
    The dense assembly uses a single principal branch and is meant for small
    ``N`` cross-checks only.
    """
    n = H.n
    v, w = as_label(v, n), as_label(w, n)
    L, Q, Rb = slice_matrices(H, T, int(cfg.N))
    if cfg.assembly == "dense":
        return _dense(L, Q, Rb, v, w)
    val, bad = K.path_integral_slices(L, Q, Rb, v, w)
    if bad >= 0:
        raise SingularityError(f"slice pivot left the right half-plane at slice {bad} of {cfg.N}", location=int(bad))
    return complex(val)


def richardson(coarse, fine, order=1):
    """Eliminate the leading ``dt**order`` term from values at ``N`` and ``2N``."""
    f = 2.0 ** order
    return (f * fine - coarse) / (f - 1.0)


def extrapolated_path_integral(H, T, v, w, N=2048):
    """Richardson combination of the path integral (not its log) at ``N`` and ``2N`` slices."""
    coarse = np.exp(discrete_path_integral(H, T, v, w, DiscretePIConfig(N)))
    fine = np.exp(discrete_path_integral(H, T, v, w, DiscretePIConfig(2 * N)))
    return complex(richardson(coarse, fine))
