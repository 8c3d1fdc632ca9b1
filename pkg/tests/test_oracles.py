import warnings

import numpy as np
import pytest

from cspath import core
from cspath.amplitude import amplitude_for
from cspath.errors import DomainError
from cspath.oracles import (DiscretePIConfig, FockConfig, discrete_path_integral, extrapolated_path_integral,
                            fock_matrix_element, richardson, slice_matrices, unitarity_check)


def test_fock_zero_time_is_overlap():
    H = core.single_mode_squeeze(0.4, 1.0)
    r = fock_matrix_element(H, 0.0, 0.3 + 0.1j, -0.2j, FockConfig(cutoff=30))
    assert r.value == pytest.approx(np.exp((0.3 + 0.1j) * -0.2j), abs=1e-14)


def test_fock_free_mode():
    H = core.QuadraticHamiltonian.constant([[1.0]], None, 1.0)
    r = fock_matrix_element(H, 1.0, 1.0, 1.0, FockConfig(cutoff=40))
    assert r.value == pytest.approx(np.exp(np.exp(-1j)), rel=1e-12)
    assert not r.warning


def test_fock_squeeze_vacuum():
    r = fock_matrix_element(core.single_mode_squeeze(0.6, 1.0), 1.0, 0, 0, FockConfig(cutoff=60))
    assert r.value == pytest.approx(1 / np.sqrt(np.cosh(0.6)), abs=1e-8)


def test_fock_time_dependent_against_closed_form():
    H = core.frequency_sweep(1.0, 1.5, 1.0)
    v, w = 0.3 - 0.2j, 0.1 + 0.4j
    r = fock_matrix_element(H, 1.0, v, w, FockConfig(cutoff=40, substeps=256))
    assert r.value == pytest.approx(amplitude_for(H, v, w).value, rel=1e-6)


def test_unitarity():
    assert unitarity_check(core.QuadraticHamiltonian.constant([[0.0]], None, 1.0), 1.0, 0.5) < 1e-14
    assert unitarity_check(core.QuadraticHamiltonian.constant([[1.0]], None, 1.0), 1.0, 1.0,
                           FockConfig(cutoff=40)) < 1e-12
    assert unitarity_check(core.single_mode_squeeze(0.3, 1.0), 1.0, 0.2, FockConfig(cutoff=60)) < 1e-8


def test_leak_warning():
    H = core.single_mode_squeeze(1.0, 1.0)
    with pytest.warns(RuntimeWarning, match="leak"):
        r = fock_matrix_element(H, 1.0, 1.0, 1.0, FockConfig(cutoff=8))
    assert r.warning and r.leak > 1e-10


def test_truncation_error_shrinks_with_cutoff():
    H = core.single_mode_squeeze(0.5, 1.0)
    exact = amplitude_for(H, 0.5, 0.5).value
    errs = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        for c in (10, 20, 40):
            errs.append(abs(fock_matrix_element(H, 1.0, 0.5, 0.5, FockConfig(cutoff=c)).value - exact))
    assert errs[0] > errs[1] > errs[2]


def test_fock_dimension_limit():
    with pytest.raises(DomainError):
        fock_matrix_element(core.random_constant(5, 1.0, 0), 1.0, np.zeros(5), np.zeros(5), FockConfig(cutoff=30))


def test_config_validation():
    with pytest.raises(DomainError):
        FockConfig(cutoff=0)
    with pytest.raises(DomainError):
        DiscretePIConfig(N=1)
    with pytest.raises(DomainError):
        DiscretePIConfig(assembly="sparse")


def test_path_integral_of_zero_hamiltonian():
    H = core.QuadraticHamiltonian.constant(np.zeros((2, 2)), None, 1.0)
    v, w = np.array([0.3, 0.1j]), np.array([0.5, -0.2])
    assert discrete_path_integral(H, 1.0, v, w, DiscretePIConfig(16)) == pytest.approx(v @ w, abs=1e-15)


def test_path_integral_free_mode_product_formula():
    w_, N, v, w = 1.2, 64, 0.4 + 0.1j, 0.3 - 0.5j
    H = core.QuadraticHamiltonian.constant([[w_]], None, 1.0)
    expect = v * w * (1 - 1j * w_ / N) ** N
    assert discrete_path_integral(H, 1.0, v, w, DiscretePIConfig(N)) == pytest.approx(expect, abs=1e-13)


@pytest.mark.parametrize("seed", [0, 1])
def test_dense_and_banded_assembly_agree(seed):
    H = core.random_smooth(2, 1.0, seed)
    v, w = np.array([0.2, 0.1j]), np.array([0.3 - 0.1j, 0.2])
    a = discrete_path_integral(H, 1.0, v, w, DiscretePIConfig(24, "banded"))
    b = discrete_path_integral(H, 1.0, v, w, DiscretePIConfig(24, "dense"))
    assert np.exp(a) == pytest.approx(np.exp(b), rel=1e-11)


def test_slice_matrices_use_midpoints():
    H = core.frequency_sweep(1.0, 2.0, 1.0)
    L, Q, Rb = slice_matrices(H, 1.0, 4)
    assert L.shape == (4, 1, 1)
    A, B = H.sample((np.arange(4) + 0.5) / 4)
    assert np.allclose(L, 1 - 0.25j * A)
    assert np.allclose(Q, -0.25j * B)
    assert np.allclose(Rb, -0.25j * B.conj())


def test_path_integral_converges_first_order():
    H = core.single_mode_squeeze(0.6, 1.0)
    exact = 1 / np.sqrt(np.cosh(0.6))
    Ns = 2 ** np.arange(6, 11)
    errs = [abs(np.exp(discrete_path_integral(H, 1.0, 0, 0, DiscretePIConfig(int(N)))) - exact) for N in Ns]
    slope = np.polyfit(np.log(Ns), np.log(errs), 1)[0]
    assert slope == pytest.approx(-1.0, abs=0.1)


def test_richardson():
    assert richardson(1.0 + 0.5, 1.0 + 0.25) == pytest.approx(1.0)
    assert richardson(1.0 + 0.4, 1.0 + 0.1, order=2) == pytest.approx(1.0)


def test_three_routes_agree():
    H = core.random_smooth(2, 1.0, 2)
    v, w = np.array([0.3, -0.2j]), np.array([0.1 + 0.2j, 0.25])
    closed = amplitude_for(H, v, w).value
    ext = extrapolated_path_integral(H, 1.0, v, w, 1024)
    fock = fock_matrix_element(H, 1.0, v, w, FockConfig(cutoff=30, substeps=256)).value
    assert abs(ext - closed) < 1e-5 * abs(closed)
    assert abs(fock - closed) < 1e-6 * abs(closed)
