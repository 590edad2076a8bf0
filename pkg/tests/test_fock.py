import math

import numpy as np
import pytest

from wickphase import QuadraticHamiltonian, catalog, thermal_wigner_symbol
from wickphase.errors import NotConverged, ValidationError
from wickphase.fock import (
    ThermalState,
    ladder,
    quadratures,
    quantize,
    thermal_trace,
)


def test_truncated_commutator():
    q, p = quadratures(20, hbar=0.5)
    comm = q @ p - p @ q
    # exact except the last level, where truncation breaks [q, p] = i hbar
    assert np.allclose(comm[:-1, :-1], 0.5j * np.eye(19))
    a = ladder(5)
    assert np.allclose(a.T @ a, np.diag(np.arange(5.0)))


def test_oscillator_levels():
    op = quantize(catalog("harmonic_oscillator", {"omega": 1.3}), 32)
    evals = np.linalg.eigvalsh(op.matrix)
    assert np.allclose(evals[:20], 1.3 * (np.arange(20) + 0.5), atol=1e-10)


def test_displaced_oscillator_levels():
    H = QuadraticHamiltonian(np.diag([2.0, 0.5]), eta=np.array([0.4, -0.3]), h0=0.25)
    evals = np.linalg.eigvalsh(quantize(H, 64).matrix)
    assert np.allclose(evals[:10], 0.25 + (np.arange(10) + 0.5), atol=1e-8)


def test_two_mode_levels():
    H = catalog("harmonic_oscillator", {"omega": 1.0, "n": 2})
    evals = np.linalg.eigvalsh(quantize(H, 16).matrix)
    assert np.allclose(evals[:6], [1, 2, 2, 3, 3, 3], atol=1e-10)


@pytest.mark.parametrize("beta", [0.5, 2.0])
def test_oscillator_trace(beta):
    H = catalog("harmonic_oscillator", {"omega": 1.0})
    res = thermal_trace(quantize(H, 96), beta)
    assert res.converged
    assert res.value == pytest.approx(1 / (2 * math.sinh(beta / 2)), rel=1e-10)


def test_low_cutoff_is_not_converged():
    H = catalog("harmonic_oscillator", {"omega": 1.0})
    assert not thermal_trace(quantize(H, 16), 0.05).converged


def test_unbounded_spectra_are_flagged(hyperbolic):
    op = quantize(hyperbolic, 64)
    assert not thermal_trace(op, 1.0).converged
    with pytest.raises(NotConverged):
        ThermalState(op, 1.0)


def test_cutoff_validation():
    H1 = catalog("harmonic_oscillator", {})
    with pytest.raises(ValidationError):
        quantize(H1, 8)
    with pytest.raises(ValidationError):
        quantize(catalog("harmonic_oscillator", {"n": 2}), 65)
    with pytest.raises(ValidationError):
        quantize(catalog("harmonic_oscillator", {"n": 3}), 16)
    with pytest.raises(ValidationError):
        thermal_trace(quantize(H1, 16), 0.0)


def test_wigner_samples_match_gaussian_symbol():
    H = QuadraticHamiltonian(np.array([[2.0, 0.7], [0.7, 1.0]]), eta=np.array([0.3, -0.5]))
    beta = 0.8
    state = ThermalState(quantize(H, 96), beta)
    W = thermal_wigner_symbol(H, beta)
    Z = 1 / (2 * math.sinh(beta * math.sqrt(2.0 - 0.49) / 2))
    for x in ([0.0, 0.0], [0.3, -0.5], [1.0, 0.4]):
        x = np.array(x)
        # thermal Wigner symbol / (2 pi hbar Z) is the normalized Wigner function
        assert state.wigner(x) == pytest.approx(W(x).real / (2 * math.pi * Z), rel=1e-8)


def test_characteristic_function_normalization(oscillator):
    state = ThermalState(quantize(oscillator, 64), 1.0)
    assert state.characteristic(np.zeros(2)) == pytest.approx(1 / (2 * math.pi), rel=1e-12)
    # thermal chi of the oscillator: exp(-coth(b/2) |xi|^2 / 4) / (2 pi)
    xi = np.array([0.6, -0.2])
    expected = math.exp(-0.25 / math.tanh(0.5) * xi @ xi) / (2 * math.pi)
    assert state.characteristic(xi) == pytest.approx(expected, rel=1e-9)
