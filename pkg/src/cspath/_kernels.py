"""Inner loops: RK4 symplectic propagation, path-integral slice elimination, and
per-node Green-function integrands.

Every kernel is written in the numpy subset numba understands.  With numba
disabled (``CSPATH_DISABLE_NUMBA=1``) the sequential kernels run interpreted.
The per-node integrands also have vectorised einsum versions, used without
numba and for small mode counts.
"""
import numpy as np

from ._jit import USE_NUMBA, njit

TWO_PI = 2.0 * np.pi

# status codes returned by rk4_propagate
OK = 0
NONFINITE = 1
SINGULAR = 2
DRIFT = 3


@njit
def block_defect(alpha, beta):
    """Frobenius-norm residuals of ``aa^+ - bb^+ = 1`` and ``ab^T - ba^T = 0``."""
    n = alpha.shape[0]
    r1 = alpha @ alpha.conj().T - beta @ beta.conj().T - np.eye(n)
    r2 = alpha @ beta.T - beta @ alpha.T
    return max(np.sqrt(np.sum(np.abs(r1) ** 2)), np.sqrt(np.sum(np.abs(r2) ** 2)))


@njit
def reproject_blocks(alpha, beta, tol, max_iter):
    """Pull ``(alpha, beta)`` back onto the symplectic group.

    With ``S = [[a, b], [conj b, conj a]]`` and ``K = diag(1, -1)`` the
    defect ``E = S K S^+ K - 1`` is K-Hermitian; ``S <- (1 - E/2) S`` removes
    it to first order and keeps the conjugation structure of ``S``.
    """
    n = alpha.shape[0]
    m = 2 * n
    S = np.empty((m, m), dtype=np.complex128)
    S[:n, :n] = alpha
    S[:n, n:] = beta
    S[n:, :n] = beta.conj()
    S[n:, n:] = alpha.conj()
    K = np.ones(m, dtype=np.complex128)
    K[n:] = -1.0
    eye = np.eye(m, dtype=np.complex128)
    for _ in range(max_iter):
        SK = S * K.reshape(1, m)
        E = (SK @ S.conj().T) * K.reshape(1, m) - eye
        if np.sqrt(np.sum(np.abs(E) ** 2)) < tol:
            break
        S = S - 0.5 * (E @ S)
    return S[:n, :n].copy(), S[:n, n:].copy()


@njit
def snap_logdet(alpha, guess):
    """``log det(conj(alpha))`` on the branch whose phase is nearest ``guess``.

    Returns ``(value, ok)``; ``ok`` is False when the determinant vanishes.
    """
    sign, logabs = np.linalg.slogdet(alpha.conj())
    if sign == 0 or not np.isfinite(logabs):
        return guess, False
    ph = np.angle(sign)
    k = np.round((guess.imag - ph) / TWO_PI)
    return complex(logabs, ph + TWO_PI * k), True


@njit
def _rhs(alpha, beta, A, B, lam):
    abar = alpha.conj()
    Bbar = B.conj()
    da = -1j * (A @ alpha + lam * (Bbar @ beta.conj()))
    db = -1j * (A @ beta + lam * (Bbar @ abar))
    dl = 1j * np.trace(A) + 1j * lam * np.trace(np.linalg.solve(abar, B @ beta))
    return da, db, dl


@njit
def rk4_propagate(A_s, B_s, lam, h, reproject_every, reproject_tol,
                  alpha_out, beta_out, ld_out, ld0_out):
    """Classical RK4 for ``dS/dt = -H_lam(t) S`` with a tracked ``log det conj(alpha)``.

    ``A_s``/``B_s`` hold the Hamiltonian sampled on the half-step grid
    (``2*steps + 1`` nodes).  Output arrays have either ``steps + 1`` rows (full
    history) or a single row (final value only).  The trace ODE for the
    log-determinant selects the branch; its value is then snapped to the
    directly computed determinant each step.

    Returns ``(status, step)``.
    """
    n = A_s.shape[1]
    steps = (A_s.shape[0] - 1) // 2
    record = alpha_out.shape[0] > 1
    alpha = np.eye(n, dtype=np.complex128)
    beta = np.zeros((n, n), dtype=np.complex128)
    ld = 0j
    ld0 = 0j
    alpha_out[0] = alpha
    beta_out[0] = beta
    ld_out[0] = ld
    ld0_out[0] = ld0
    for k in range(steps):
        A0 = A_s[2 * k]
        A1 = A_s[2 * k + 1]
        A2 = A_s[2 * k + 2]
        B0 = B_s[2 * k]
        B1 = B_s[2 * k + 1]
        B2 = B_s[2 * k + 2]
        a1, b1, l1 = _rhs(alpha, beta, A0, B0, lam)
        a2, b2, l2 = _rhs(alpha + 0.5 * h * a1, beta + 0.5 * h * b1, A1, B1, lam)
        a3, b3, l3 = _rhs(alpha + 0.5 * h * a2, beta + 0.5 * h * b2, A1, B1, lam)
        a4, b4, l4 = _rhs(alpha + h * a3, beta + h * b3, A2, B2, lam)
        alpha = alpha + (h / 6.0) * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
        beta = beta + (h / 6.0) * (b1 + 2.0 * b2 + 2.0 * b3 + b4)
        ld_guess = ld + (h / 6.0) * (l1 + 2.0 * l2 + 2.0 * l3 + l4)
        ld0 = ld0 + (h / 6.0) * 1j * (np.trace(A0) + 4.0 * np.trace(A1) + np.trace(A2))
        if not (np.all(np.isfinite(alpha)) and np.all(np.isfinite(beta))):
            return NONFINITE, k + 1
        if reproject_every > 0 and ((k + 1) % reproject_every == 0 or k == steps - 1):
            if block_defect(alpha, beta) > 1e-2:
                return DRIFT, k + 1
            alpha, beta = reproject_blocks(alpha, beta, reproject_tol, 4)
        ld, ok = snap_logdet(alpha, ld_guess)
        if not ok:
            return SINGULAR, k + 1
        j = k + 1 if record else 0
        alpha_out[j] = alpha
        beta_out[j] = beta
        ld_out[j] = ld
        ld0_out[j] = ld0
    return OK, steps


@njit
def path_integral_slices(L, Q, Rb, v, w):
    """Sequential elimination of the discretised Gaussian coherent-state integral.

    Slice ``k`` (``z_k -> zbar_{k+1}``) contributes ``zbar_{k+1}^T L_k z_k +
    1/2 z_k^T Q_k z_k + 1/2 zbar_{k+1}^T Rb_k zbar_{k+1}``.  Integrating the
    pairs ``(z_k, zbar_k)`` one slice at a time carries a quadratic message
    ``exp(1/2 zbar^T R zbar + c . zbar + d)`` forward.  Each slice contributes
    ``det(1 - Q_k R)^(-1/2)``, a matrix close to the identity, so the
    principal logarithm fixes the square-root branch.

    Returns ``(log_value, status_slice)`` with ``status_slice = -1`` on success
    or the index of the slice whose pivot left the right half-plane.
    """
    N = L.shape[0]
    n = L.shape[1]
    eye = np.eye(n, dtype=np.complex128)
    M = np.zeros((2 * n, 2 * n), dtype=np.complex128)
    I2 = np.eye(2 * n, dtype=np.complex128)
    R = Rb[0].copy()
    c = L[0] @ w
    d = 0.5 * (w @ (Q[0] @ w))
    for k in range(1, N):
        Qk = Q[k]
        piv = eye - Qk @ R
        sign, logabs = np.linalg.slogdet(piv)
        if sign == 0 or sign.real <= 0.0:
            return complex(np.nan, np.nan), k
        M[:n, :n] = -Qk
        M[:n, n:] = eye
        M[n:, :n] = eye
        M[n:, n:] = -R
        Minv = np.linalg.solve(M, I2)
        X = Minv[:n, :n].copy()
        Y = Minv[:n, n:].copy()
        W = Minv[n:, n:].copy()
        d = d - 0.5 * (logabs + 1j * np.angle(sign)) + 0.5 * (c @ (W @ c))
        Lk = L[k]
        R = Lk @ X @ Lk.T.copy() + Rb[k]
        c = Lk @ (Y @ c)
    return 0.5 * (v @ (R @ v)) + v @ c + d, -1


# per-node integrands ------------------------------------------------------

@njit
def _trace_integrand_loop(alpha, beta, B, gamma):
    N = alpha.shape[0]
    out = np.empty(N, dtype=np.complex128)
    for k in range(N):
        a = alpha[k]
        b = beta[k]
        Bk = B[k]
        t1 = b @ (gamma @ b.T - a.T) @ Bk
        t2 = a.conj() @ (gamma @ a.conj().T - b.conj().T) @ Bk.conj()
        out[k] = -1j * (np.trace(t1) + np.trace(t2))
    return out


def _trace_integrand_vec(alpha, beta, B, gamma):
    aT = np.swapaxes(alpha, 1, 2)
    bT = np.swapaxes(beta, 1, 2)
    inner1 = np.einsum("ij,kjl->kil", gamma, bT) - aT
    inner2 = np.einsum("ij,kjl->kil", gamma, aT.conj()) - bT.conj()
    t1 = np.einsum("kij,kjl,kli->k", beta, inner1, B)
    t2 = np.einsum("kij,kjl,kli->k", alpha.conj(), inner2, B.conj())
    return -1j * (t1 + t2)


@njit
def _dsym_integrand_loop(alpha, beta, B):
    N = alpha.shape[0]
    n = alpha.shape[1]
    out = np.empty((N, 2 * n, 2 * n), dtype=np.complex128)
    S = np.empty((2 * n, 2 * n), dtype=np.complex128)
    Sinv = np.empty((2 * n, 2 * n), dtype=np.complex128)
    dH = np.zeros((2 * n, 2 * n), dtype=np.complex128)
    for k in range(N):
        a = alpha[k]
        b = beta[k]
        S[:n, :n] = a
        S[:n, n:] = b
        S[n:, :n] = b.conj()
        S[n:, n:] = a.conj()
        Sinv[:n, :n] = a.conj().T
        Sinv[:n, n:] = -b.T
        Sinv[n:, :n] = -b.conj().T
        Sinv[n:, n:] = a.T
        dH[:n, n:] = 1j * B[k].conj()
        dH[n:, :n] = -1j * B[k]
        out[k] = Sinv @ dH @ S
    return out


def _dsym_integrand_vec(alpha, beta, B):
    N, n = alpha.shape[:2]
    S = np.empty((N, 2 * n, 2 * n), complex)
    S[:, :n, :n] = alpha
    S[:, :n, n:] = beta
    S[:, n:, :n] = beta.conj()
    S[:, n:, n:] = alpha.conj()
    Sinv = np.empty_like(S)
    Sinv[:, :n, :n] = np.swapaxes(alpha.conj(), 1, 2)
    Sinv[:, :n, n:] = -np.swapaxes(beta, 1, 2)
    Sinv[:, n:, :n] = -np.swapaxes(beta.conj(), 1, 2)
    Sinv[:, n:, n:] = np.swapaxes(alpha, 1, 2)
    dH = np.zeros_like(S)
    dH[:, :n, n:] = 1j * B.conj()
    dH[:, n:, :n] = -1j * B
    return Sinv @ dH @ S


# Batched einsum beats the compiled loop for small blocks (per-node BLAS calls
# dominate); see benchmarks/bench_kernels.py.
LOOP_MIN_N = 6


def trace_integrand(alpha, beta, B, gamma):
    """Per-node ``-i tr{beta (gamma beta^T - alpha^T) B + conj(alpha) (gamma alpha^+ - beta^+) conj(B)}``."""
    if USE_NUMBA and alpha.shape[1] >= LOOP_MIN_N:
        return _trace_integrand_loop(alpha, beta, B, gamma)
    return _trace_integrand_vec(alpha, beta, B, gamma)


def dsym_integrand(alpha, beta, B):
    """Per-node ``S^-1 (dH/d lambda) S``."""
    if USE_NUMBA and alpha.shape[1] >= LOOP_MIN_N:
        return _dsym_integrand_loop(alpha, beta, B)
    return _dsym_integrand_vec(alpha, beta, B)
