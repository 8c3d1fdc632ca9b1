"""Mode spaces, quadratic Hamiltonians, coherent labels and the phase-space action.

Conventions
-----------
Phase-space points are written in the complex chart ``(z, zbar)`` with
``zbar = conj(z)`` on real paths.  The classical Hamiltonian is

    H(z, zbar) = zbar^T A z + 1/2 z^T B z + 1/2 zbar^T conj(B) zbar

with ``A`` Hermitian and ``B`` symmetric; its normal-ordered quantisation is
``sum_ab A_ab a_a^+ a_b + 1/2 B_ab a_a a_b + 1/2 conj(B)_ab a_a^+ a_b^+``.
Units have hbar = 1.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import trapezoid

from .errors import DomainError, ShapeError, ValidationError

STRUCTURE_TOL = 1e-12
_T_SLACK = 1e-12

MatrixFn = Callable[[float], np.ndarray]


@dataclass(frozen=True)
class ModeSpace:
    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValidationError(f"mode count must be a positive integer, got {self.n!r}", "n >= 1")
        object.__setattr__(self, "n", int(self.n))


def _as_matrix(M, n=None, name="matrix"):
    M = np.asarray(M, dtype=np.complex128)
    if M.ndim == 0 and (n is None or n == 1):
        M = M.reshape(1, 1)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ShapeError(f"{name} must be square, got shape {M.shape}")
    if n is not None and M.shape[0] != n:
        raise ShapeError(f"{name} has size {M.shape[0]}, expected {n}")
    if not np.all(np.isfinite(M)):
        raise ValidationError(f"{name} contains non-finite entries", "finite")
    return M


def check_hermitian(A, tol=STRUCTURE_TOL, name="A"):
    A = np.asarray(A)
    res = np.max(np.abs(A - A.conj().T)) if A.size else 0.0
    if res > tol * max(1.0, np.max(np.abs(A))):
        raise ValidationError(f"{name} is not self-adjoint (residual {res:.3e})", "A = A^dagger")


def check_symmetric(B, tol=STRUCTURE_TOL, name="B"):
    B = np.asarray(B)
    res = np.max(np.abs(B - B.T)) if B.size else 0.0
    if res > tol * max(1.0, np.max(np.abs(B))):
        raise ValidationError(f"{name} is not symmetric (residual {res:.3e})", "B = B^T")


@dataclass(frozen=True)
class QuadraticHamiltonian:
    """Time-dependent pair ``(A(t), B(t))`` on ``[0, T]``.

    Build instances with :meth:`constant`, :meth:`from_callables` or
    :meth:`tabulated`; all three validate Hermiticity of ``A`` and symmetry of
    ``B`` on a set of probe times before returning.
    """

    modes: ModeSpace
    T: float
    A_fn: MatrixFn = field(repr=False)
    B_fn: MatrixFn = field(repr=False)
    is_constant: bool = False
    kind: str = "callable"
    label: str = ""

    # construction -----------------------------------------------------

    @classmethod
    def constant(cls, A, B, T, label=""):
        A = _as_matrix(A, name="A")
        n = A.shape[0]
        B = np.zeros((n, n), complex) if B is None else _as_matrix(B, n, name="B")
        A.setflags(write=False)
        B.setflags(write=False)
        H = cls(ModeSpace(n), float(T), lambda t: A, lambda t: B, True, "constant", label)
        H._validate()
        return H

    @classmethod
    def from_callables(cls, A_fn, B_fn, T, n=None, label="", probes=17):
        A0 = _as_matrix(A_fn(0.0), n, name="A(0)")
        n = A0.shape[0]
        if B_fn is None:
            Z = np.zeros((n, n), complex)
            B_fn = lambda t: Z  # noqa: E731
        H = cls(ModeSpace(n), float(T), A_fn, B_fn, False, "callable", label)
        H._validate(probes)
        return H

    @classmethod
    def tabulated(cls, times, A_table, B_table, label=""):
        """Piecewise-linear interpolation of matrices given on ``times``.

        ``times`` must start at 0 and be strictly increasing; ``T`` is the
        last entry.
        """
        times = np.asarray(times, dtype=float)
        A_table = np.asarray(A_table, dtype=np.complex128)
        if times.ndim != 1 or times.size < 2:
            raise ShapeError("tabulated Hamiltonian needs at least two times")
        if times[0] != 0.0 or np.any(np.diff(times) <= 0):
            raise ValidationError("tabulated times must start at 0 and increase strictly", "grid")
        if A_table.ndim != 3 or A_table.shape[0] != times.size:
            raise ShapeError(f"A table shape {A_table.shape} does not match {times.size} times")
        n = A_table.shape[1]
        if B_table is None:
            B_table = np.zeros_like(A_table)
        B_table = np.asarray(B_table, dtype=np.complex128)
        if B_table.shape != A_table.shape:
            raise ShapeError(f"B table shape {B_table.shape} differs from A table {A_table.shape}")
        for k in range(times.size):
            check_hermitian(A_table[k], name=f"A(t={times[k]:g})")
            check_symmetric(B_table[k], name=f"B(t={times[k]:g})")

        def interp(table):
            def f(t):
                j = int(np.clip(np.searchsorted(times, t, side="right") - 1, 0, times.size - 2))
                s = (t - times[j]) / (times[j + 1] - times[j])
                return (1.0 - s) * table[j] + s * table[j + 1]
            return f

        return cls(ModeSpace(n), float(times[-1]), interp(A_table), interp(B_table),
                   False, "tabulated", label)

    def _validate(self, probes=17):
        if not np.isfinite(self.T) or self.T < 0:
            raise ValidationError(f"horizon T must be finite and non-negative, got {self.T}", "T >= 0")
        ts = [0.0] if self.is_constant else np.linspace(0.0, self.T, probes)
        for t in ts:
            A = _as_matrix(self.A_fn(t), self.n, name=f"A(t={t:g})")
            B = _as_matrix(self.B_fn(t), self.n, name=f"B(t={t:g})")
            check_hermitian(A, name=f"A(t={t:g})")
            check_symmetric(B, name=f"B(t={t:g})")

    # access -----------------------------------------------------------

    @property
    def n(self):
        return self.modes.n

    def _check_time(self, t):
        if not (-_T_SLACK * max(1.0, self.T) <= t <= self.T * (1 + _T_SLACK) + _T_SLACK):
            raise DomainError(f"time {t} outside [0, {self.T}]")

    def A(self, t):
        self._check_time(t)
        return np.asarray(self.A_fn(t), dtype=np.complex128)

    def B(self, t):
        self._check_time(t)
        return np.asarray(self.B_fn(t), dtype=np.complex128)

    def sample(self, times):
        """Return ``(A, B)`` stacked over ``times`` with shape ``(len(times), n, n)``."""
        times = np.asarray(times, dtype=float)
        n = self.n
        if self.is_constant:
            A = np.broadcast_to(self.A_fn(0.0), (times.size, n, n))
            B = np.broadcast_to(self.B_fn(0.0), (times.size, n, n))
            return np.ascontiguousarray(A), np.ascontiguousarray(B)
        A = np.empty((times.size, n, n), complex)
        B = np.empty((times.size, n, n), complex)
        for k, t in enumerate(times):
            A[k] = self.A(t)
            B[k] = self.B(t)
        return A, B

    # derived Hamiltonians --------------------------------------------

    def window(self, t0, t1):
        """The same dynamics restricted to ``[t0, t1]`` and shifted to start at 0."""
        self._check_time(t0)
        self._check_time(t1)
        if t1 < t0:
            raise DomainError("window end precedes start")
        if self.is_constant:
            return QuadraticHamiltonian.constant(self.A_fn(0.0), self.B_fn(0.0), t1 - t0, self.label)
        return QuadraticHamiltonian(self.modes, float(t1 - t0),
                                    lambda t: self.A_fn(t0 + t), lambda t: self.B_fn(t0 + t),
                                    False, self.kind, self.label)

    def reversed(self):
        """Generator of the inverse evolution: ``-H(T - t)``."""
        T = self.T
        if self.is_constant:
            return QuadraticHamiltonian.constant(-self.A_fn(0.0), -self.B_fn(0.0), T, self.label)
        return QuadraticHamiltonian(self.modes, T, lambda t: -self.A_fn(T - t),
                                    lambda t: -self.B_fn(T - t), False, self.kind, self.label)

    def scaled_pairing(self, lam):
        """Same ``A(t)`` with ``B(t)`` multiplied by ``lam``."""
        if lam == 1.0:
            return self
        if self.is_constant:
            return QuadraticHamiltonian.constant(self.A_fn(0.0), lam * self.B_fn(0.0), self.T, self.label)
        return QuadraticHamiltonian(self.modes, self.T, self.A_fn, lambda t: lam * self.B_fn(t),
                                    False, self.kind, self.label)

    def free_part(self):
        """Drop the pairing terms (``B = 0``), keeping ``A(t)``."""
        if self.is_constant:
            return QuadraticHamiltonian.constant(self.A_fn(0.0), None, self.T, self.label)
        Z = np.zeros((self.n, self.n), complex)
        return QuadraticHamiltonian(self.modes, self.T, self.A_fn, lambda t: Z,
                                    False, self.kind, self.label)


@dataclass(frozen=True)
class CoherentLabel:
    components: np.ndarray

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.components, dtype=np.complex128))
        if c.ndim != 1:
            raise ShapeError("coherent label must be a vector")
        if not np.all(np.isfinite(c)):
            raise ValidationError("coherent label has non-finite entries", "finite")
        object.__setattr__(self, "components", c)

    def __len__(self):
        return self.components.size


def as_label(x, n=None):
    c = x.components if isinstance(x, CoherentLabel) else CoherentLabel(x).components
    if n is not None and c.size != n:
        raise ShapeError(f"coherent label has {c.size} components, expected {n}")
    return c


@dataclass(frozen=True)
class DiscretizedPath:
    """Independent ``z`` and ``zbar`` samples on a strictly increasing grid."""

    grid: np.ndarray
    z: np.ndarray
    zbar: np.ndarray

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        z = np.asarray(self.z, dtype=np.complex128)
        zbar = np.asarray(self.zbar, dtype=np.complex128)
        if z.ndim == 1:
            z = z[:, None]
        if zbar.ndim == 1:
            zbar = zbar[:, None]
        if grid.ndim != 1 or z.shape[0] != grid.size or zbar.shape != z.shape:
            raise ShapeError(f"path lengths disagree: grid {grid.shape}, z {z.shape}, zbar {zbar.shape}")
        if np.any(np.diff(grid) <= 0):
            raise ValidationError("path grid must be strictly increasing", "grid")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "zbar", zbar)

    def in_boundary_space(self, tol=0.0):
        """True when ``z(0) = 0`` and ``zbar(T) = 0``."""
        return bool(np.all(np.abs(self.z[0]) <= tol) and np.all(np.abs(self.zbar[-1]) <= tol))


def classical_energy(H, t, z, zbar):
    A = H.A(t)
    B = H.B(t)
    z = np.asarray(z, dtype=np.complex128).reshape(-1)
    zbar = np.asarray(zbar, dtype=np.complex128).reshape(-1)
    if z.size != H.n or zbar.size != H.n:
        raise ShapeError(f"phase-space vectors must have {H.n} components")
    return complex(zbar @ A @ z + 0.5 * (z @ B @ z) + 0.5 * (zbar @ B.conj() @ zbar))


def evaluate_action(H, path):
    """Discrete phase-space action of ``path`` including the coherent boundary terms.

    Uses midpoint sampling of ``A, B`` and the path, and forward differences
    for the time derivatives, on each interval of ``path.grid``.
    """
    g = path.grid
    if path.z.shape[1] != H.n:
        raise ShapeError(f"path has {path.z.shape[1]} components, Hamiltonian has {H.n}")
    if abs(g[0]) > _T_SLACK or abs(g[-1] - H.T) > _T_SLACK * max(1.0, H.T):
        raise DomainError(f"path grid [{g[0]}, {g[-1]}] does not span [0, {H.T}]")
    z, zb = path.z, path.zbar
    dt = np.diff(g)
    tm = 0.5 * (g[1:] + g[:-1])
    A, B = H.sample(tm)
    zm = 0.5 * (z[1:] + z[:-1])
    zbm = 0.5 * (zb[1:] + zb[:-1])
    dz = z[1:] - z[:-1]
    dzb = zb[1:] - zb[:-1]
    kinetic = (np.sum(dzb * zm, axis=1) - np.sum(zbm * dz, axis=1)) / 2j
    energy = (np.einsum("ka,kab,kb->k", zbm, A, zm)
              + 0.5 * np.einsum("ka,kab,kb->k", zm, B, zm)
              + 0.5 * np.einsum("ka,kab,kb->k", zbm, B.conj(), zbm))
    bulk = np.sum(kinetic - dt * energy)
    boundary = (zb[-1] @ z[-1] + zb[0] @ z[0]) / 2j
    return complex(bulk + boundary)


def pairing(zeta_prime, zeta, grid):
    """Trapezoidal ``<zeta', zeta> = int 1/2 (zeta'_bar . zeta + zeta' . zeta_bar) dt``.

    Both arguments are ``(top, bottom)`` tuples of arrays shaped ``(len(grid), n)``.
    """
    top_p, bot_p = zeta_prime
    z, zb = zeta
    f = 0.5 * (np.sum(bot_p * z, axis=1) + np.sum(top_p * zb, axis=1))
    return complex(trapezoid(f, grid))


def _derivative(f, grid, order):
    d = np.gradient(f, grid, axis=0, edge_order=2)
    if order == 4 and f.shape[0] >= 5:
        h = grid[1] - grid[0]
        d[2:-2] = (f[:-4] - 8 * f[1:-3] + 8 * f[3:-1] - f[4:]) / (12 * h)
    return d


def apply_D(H, lam, grid, z, zbar, order=2):
    """Discrete ``D_lambda`` on grid samples, central differences in the interior.

    Returns ``(top, bottom)`` with ``top = i dz/dt - A z - lam conj(B) zbar`` and
    ``bottom = -i dzbar/dt - A^T zbar - lam B z``.  ``order=4`` switches the
    interior stencil to fourth order (uniform grids only).
    """
    if order not in (2, 4):
        raise DomainError("difference order must be 2 or 4")
    A, B = H.sample(grid)
    dz = _derivative(z, grid, order)
    dzb = _derivative(zbar, grid, order)
    top = 1j * dz - np.einsum("kab,kb->ka", A, z) - lam * np.einsum("kab,kb->ka", B.conj(), zbar)
    bot = -1j * dzb - np.einsum("kba,kb->ka", A, zbar) - lam * np.einsum("kab,kb->ka", B, z)
    return top, bot


# built-in Hamiltonian families ------------------------------------------

def single_mode_squeeze(b, T, omega=0.0):
    return QuadraticHamiltonian.constant([[omega]], [[b]], T, label=f"single_mode_squeeze({b})")


def frequency_sweep(omega0, omega1, T):
    """Oscillator whose frequency ramps linearly from ``omega0`` to ``omega1``.

    Written in the mode basis of the initial frequency, so ``B`` vanishes at
    ``t = 0`` and grows as the frequency departs from ``omega0``.
    """
    if omega0 <= 0 or omega1 <= 0:
        raise DomainError("sweep frequencies must be positive")

    def w2(t):
        w = omega0 + (omega1 - omega0) * (t / T if T > 0 else 0.0)
        return w * w

    A = lambda t: np.array([[(w2(t) + omega0**2) / (2 * omega0)]], complex)  # noqa: E731
    B = lambda t: np.array([[(w2(t) - omega0**2) / (2 * omega0)]], complex)  # noqa: E731
    return QuadraticHamiltonian.from_callables(A, B, T, n=1, label=f"frequency_sweep({omega0}, {omega1})")


def _random_hermitian(rng, n):
    X = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return (X + X.conj().T) / (2 * np.sqrt(2 * n))


def _random_symmetric(rng, n):
    X = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return (X + X.T) / (2 * np.sqrt(2 * n))


def random_constant(n, T, seed, b_scale=0.5):
    rng = np.random.default_rng(seed)
    return QuadraticHamiltonian.constant(_random_hermitian(rng, n), b_scale * _random_symmetric(rng, n),
                                         T, label=f"random_constant(n={n}, seed={seed})")


def random_smooth(n, T, seed, b_scale=0.5):
    """Seeded smooth time-dependent Hamiltonian with operator norms of order one."""
    rng = np.random.default_rng(seed)
    A0, A1 = _random_hermitian(rng, n), 0.5 * _random_hermitian(rng, n)
    B0, B1 = b_scale * _random_symmetric(rng, n), 0.5 * b_scale * _random_symmetric(rng, n)
    w1, w2 = rng.uniform(0.5, 3.0, size=2)
    p1, p2 = rng.uniform(0, 2 * np.pi, size=2)
    A = lambda t: A0 + np.sin(w1 * t + p1) * A1  # noqa: E731
    B = lambda t: B0 + np.cos(w2 * t + p2) * B1  # noqa: E731
    return QuadraticHamiltonian.from_callables(A, B, T, n=n, label=f"random_smooth(n={n}, seed={seed})")


def block_diagonal(hamiltonians: Sequence[QuadraticHamiltonian], T: Optional[float] = None):
    """Direct sum of independent Hamiltonians sharing one horizon."""
    T = hamiltonians[0].T if T is None else T
    sizes = [h.n for h in hamiltonians]
    n = sum(sizes)

    def stack(getter):
        def f(t):
            M = np.zeros((n, n), complex)
            i = 0
            for h, m in zip(hamiltonians, sizes):
                M[i:i + m, i:i + m] = getter(h)(t)
                i += m
            return M
        return f

    if all(h.is_constant for h in hamiltonians):
        return QuadraticHamiltonian.constant(stack(lambda h: h.A_fn)(0.0), stack(lambda h: h.B_fn)(0.0), T)
    return QuadraticHamiltonian.from_callables(stack(lambda h: h.A_fn), stack(lambda h: h.B_fn), T, n=n)
