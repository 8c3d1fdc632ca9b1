import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cspath import core
from cspath.core import (CoherentLabel, DiscretizedPath, ModeSpace, QuadraticHamiltonian, apply_D,
                         classical_energy, evaluate_action, pairing)
from cspath.errors import DomainError, ShapeError, ValidationError

from conftest import crandn

seeds = st.integers(0, 2**32 - 1)


def test_empty_mode_space_rejected():
    with pytest.raises(ValidationError):
        ModeSpace(0)


def test_constant_hamiltonian_accessors():
    H = QuadraticHamiltonian.constant([[1.0, 0.5j], [-0.5j, 2.0]], [[0.1, 0.2], [0.2, 0.3]], 2.0)
    assert H.n == 2 and H.T == 2.0 and H.is_constant
    A, B = H.sample([0.0, 1.0, 2.0])
    assert A.shape == (3, 2, 2) and np.allclose(B[1], [[0.1, 0.2], [0.2, 0.3]])
    with pytest.raises(DomainError):
        H.A(2.5)


def test_missing_B_means_no_pairing():
    H = QuadraticHamiltonian.constant([[1.0]], None, 1.0)
    assert np.all(H.B(0.3) == 0)


@pytest.mark.parametrize("delta", [1e-9, 1e-6])
def test_validators_reject_perturbed_A(delta):
    A = np.array([[1.0, 0.5], [0.5, 2.0]], complex)
    A[0, 1] += delta
    with pytest.raises(ValidationError) as exc:
        QuadraticHamiltonian.constant(A, None, 1.0)
    assert exc.value.invariant == "A = A^dagger"


def test_validators_reject_perturbed_B():
    B = np.array([[0.0, 0.3], [0.3 + 1e-10, 0.0]])
    with pytest.raises(ValidationError) as exc:
        QuadraticHamiltonian.constant(np.eye(2), B, 1.0)
    assert exc.value.invariant == "B = B^T"


def test_validators_accept_roundoff():
    B = np.array([[0.0, 0.3], [0.3 + 1e-14, 0.0]])
    QuadraticHamiltonian.constant(np.eye(2), B, 1.0)


def test_callable_validation_probes_interior_times():
    A = lambda t: np.array([[1.0, t * 1j], [t * 1j, 1.0]])  # anti-Hermitian part appears for t > 0
    with pytest.raises(ValidationError):
        QuadraticHamiltonian.from_callables(A, None, 1.0)


def test_shape_mismatch():
    with pytest.raises(ShapeError):
        QuadraticHamiltonian.constant(np.eye(2), np.eye(3), 1.0)


def test_tabulated_interpolates_linearly():
    H = QuadraticHamiltonian.tabulated([0.0, 1.0], [[[1.0]], [[3.0]]], [[[0.0]], [[0.4]]])
    assert H.A(0.25)[0, 0] == pytest.approx(1.5)
    assert H.B(0.5)[0, 0] == pytest.approx(0.2)


def test_tabulated_rejects_bad_grid():
    with pytest.raises(ValidationError):
        QuadraticHamiltonian.tabulated([0.0, 0.0], [[[1.0]], [[1.0]]], None)


def test_window_and_reverse():
    H = core.random_smooth(2, 2.0, seed=3)
    W = H.window(0.5, 1.5)
    assert W.T == pytest.approx(1.0)
    assert np.allclose(W.A(0.2), H.A(0.7))
    R = H.reversed()
    assert np.allclose(R.B(0.5), -H.B(1.5))


def test_scaled_pairing():
    H = core.random_smooth(2, 1.0, seed=4)
    assert np.allclose(H.scaled_pairing(0.25).B(0.3), 0.25 * H.B(0.3))
    assert np.allclose(H.free_part().B(0.3), 0)


def test_label_validation():
    with pytest.raises(ValidationError):
        CoherentLabel([np.nan])
    with pytest.raises(ShapeError):
        core.as_label([1.0, 2.0], 3)


@given(seeds)
def test_classical_energy_real_on_real_phase_space(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 5))
    H = core.random_constant(n, 1.0, seed)
    z = crandn(rng, n)
    assert abs(classical_energy(H, 0.0, z, z.conj()).imag) < 1e-12 * max(1.0, np.abs(z).max() ** 2)


def test_action_vanishes_on_zero_path():
    H = core.random_constant(2, 1.0, 0)
    g = np.linspace(0, 1, 11)
    assert evaluate_action(H, DiscretizedPath(g, np.zeros((11, 2)), np.zeros((11, 2)))) == 0


def test_action_constant_path_is_boundary_only():
    H = QuadraticHamiltonian.constant([[0.0]], None, 1.0)
    c = 0.7 - 0.4j
    g = np.linspace(0, 1, 5)
    S = evaluate_action(H, DiscretizedPath(g, np.full(5, c), np.full(5, np.conj(c))))
    assert S == pytest.approx(-1j * abs(c) ** 2, abs=1e-15)


def test_on_shell_action_of_free_mode():
    # z = w e^{-it}, zbar = v e^{-i(T-t)}: the bulk integrand vanishes and the
    # boundary terms give v w e^{-iT} / i
    T, v, w = 1.0, 0.3 + 0.2j, -0.5 + 0.1j
    H = QuadraticHamiltonian.constant([[1.0]], None, T)
    errs = []
    for N in (200, 400):
        g = np.linspace(0, T, N + 1)
        path = DiscretizedPath(g, w * np.exp(-1j * g), v * np.exp(-1j * (T - g)))
        errs.append(abs(evaluate_action(H, path) - v * w * np.exp(-1j * T) / 1j))
    assert errs[1] < 1e-5
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)


def test_action_rejects_wrong_span():
    H = core.random_constant(1, 1.0, 0)
    g = np.linspace(0, 0.5, 4)
    with pytest.raises(DomainError):
        evaluate_action(H, DiscretizedPath(g, np.zeros(4), np.zeros(4)))


def test_path_shape_errors():
    with pytest.raises(ShapeError):
        DiscretizedPath(np.linspace(0, 1, 4), np.zeros(4), np.zeros(5))


def _x_path(rng, g, n):
    """Smooth random path with z(0) = 0 and zbar(T) = 0."""
    T = g[-1]
    c = crandn(rng, 3, n)
    s = g[:, None] / T
    z = s * (c[0] + c[1] * np.cos(2 * s))
    zb = (1 - s) * (c[2] + c[1].conj() * np.sin(3 * s))
    return z, zb


@pytest.mark.parametrize("seed", [1, 2])
def test_action_on_X_equals_D_quadratic_form(seed, rng):
    H = core.random_smooth(2, 1.0, seed)
    errs = []
    for N in (400, 800):
        g = np.linspace(0, 1, N + 1)
        z, zb = _x_path(np.random.default_rng(seed), g, 2)
        path = DiscretizedPath(g, z, zb)
        assert path.in_boundary_space()
        q = evaluate_action(H, path)
        form = pairing(apply_D(H, 1.0, g, z, zb), (z, zb), g)
        errs.append(abs(q - form))
    assert errs[1] < 1e-5
    assert errs[0] / errs[1] > 3.0


@given(seeds)
def test_D_is_symmetric_on_X(seed):
    rng = np.random.default_rng(seed)
    H = core.random_constant(2, 1.0, seed)
    g = np.linspace(0, 1, 801)
    z1, zb1 = _x_path(rng, g, 2)
    z2, zb2 = _x_path(rng, g, 2)
    lhs = pairing(apply_D(H, 0.7, g, z1, zb1), (z2, zb2), g)
    rhs = pairing(apply_D(H, 0.7, g, z2, zb2), (z1, zb1), g)
    assert abs(lhs - rhs) < 1e-4 * (1 + abs(lhs))


def test_fourth_order_D_on_polynomial():
    # quartic paths are differentiated exactly by the five-point stencil
    H = QuadraticHamiltonian.constant([[0.0]], None, 1.0)
    g = np.linspace(0, 1, 21)
    z = (g ** 4)[:, None].astype(complex)
    top, _ = apply_D(H, 0.0, g, z, np.zeros_like(z), order=4)
    assert np.allclose(top[2:-2, 0], 4j * g[2:-2] ** 3, atol=1e-12)


def test_block_diagonal():
    H = core.block_diagonal([core.single_mode_squeeze(0.3, 1.0), core.random_smooth(2, 1.0, 1)])
    assert H.n == 3
    assert H.B(0.2)[0, 0] == pytest.approx(0.3)
    assert np.allclose(H.A(0.2)[1:, 1:], core.random_smooth(2, 1.0, 1).A(0.2))


def test_frequency_sweep_starts_unpaired():
    H = core.frequency_sweep(1.0, 2.0, 1.0)
    assert H.B(0.0)[0, 0] == 0
    assert H.A(1.0)[0, 0] == pytest.approx(2.5)
    with pytest.raises(DomainError):
        core.frequency_sweep(0.0, 1.0, 1.0)
