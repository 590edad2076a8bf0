import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wickphase import (
    DivergenceAtWeyl,
    DivergenceAtWigner,
    IndexUndetermined,
    InsufficientDecay,
    NotAState,
    QuadraticHamiltonian,
    catalog,
    characteristic_function,
    symplectic_fourier,
    thermal_weyl_symbol,
    thermal_wigner_symbol,
    wigner_function,
)
from wickphase.fock import ThermalState, quantize
from wickphase.symbols import (
    auto_extent,
    covariance_matrix,
    evaluate,
    parabolic_weyl_symbol,
    sample_grid,
    wigner_and_characteristic,
)
from wickphase.symplectic import symplectic_form

DISPLACED = QuadraticHamiltonian(np.array([[2.0, 0.7], [0.7, 1.0]]), [0.3, -0.5], 0.2, 0.7)


def test_oscillator_wigner_closed_form():
    hb, beta = 0.7, 1.3
    b = hb * beta
    E = thermal_wigner_symbol(catalog("harmonic_oscillator", hbar=hb), beta)
    x = np.array([0.4, -0.9])
    expected = math.exp(-math.tanh(b / 2) * (x @ x) / hb) / math.cosh(b / 2)
    assert evaluate(E, x) == pytest.approx(expected, rel=1e-13)


def test_oscillator_weyl_closed_form():
    hb, beta = 0.7, 1.3
    b = hb * beta
    E = thermal_weyl_symbol(catalog("harmonic_oscillator", hbar=hb), beta)
    xi = np.array([0.4, -0.9])
    expected = math.exp(-(xi @ xi) / (4 * math.tanh(b / 2) * hb)) / (2 * math.sinh(b / 2))
    assert evaluate(E, xi) == pytest.approx(expected, rel=1e-13)


def test_weyl_at_origin_is_partition_function():
    from wickphase import partition_function
    for name in ("harmonic_oscillator", "positive_definite", "loxodromic_2d"):
        H = catalog(name)
        E = thermal_weyl_symbol(H, 0.9)
        assert evaluate(E, np.zeros(2 * H.n)).real == pytest.approx(partition_function(H, 0.9), rel=1e-12)


def test_hyperbolic_weyl_symbol_exponent():
    b = 1.0
    E = thermal_weyl_symbol(catalog("hyperbolic_1d"), b)
    # A = J (Im C)^-1 J / 4 with Im C = -tan(b/2) sigma_x
    np.testing.assert_allclose(E.quad_form, -0.25 / math.tan(b / 2) * np.array([[0, 1], [1, 0]]), atol=1e-14)
    assert E.prefactor_magnitude == pytest.approx(0.5 / math.sin(b / 2))


def test_wigner_fourier_gives_weyl_for_displaced_case():
    beta = 1.1
    W = thermal_wigner_symbol(DISPLACED, beta)
    grid = sample_grid(W, auto_extent(W), 512)
    dual = symplectic_fourier(grid, "wigner_to_weyl")
    exact = thermal_weyl_symbol(DISPLACED, beta).values(dual.points)
    assert np.max(np.abs(dual.values - exact)) < 1e-10 * np.max(np.abs(exact))


def test_weyl_fourier_gives_wigner_back():
    beta = 0.6
    E = thermal_weyl_symbol(DISPLACED, beta)
    grid = sample_grid(E, auto_extent(E), 512)
    dual = symplectic_fourier(grid, "weyl_to_wigner")
    exact = thermal_wigner_symbol(DISPLACED, beta).values(dual.points)
    assert np.max(np.abs(dual.values - exact)) < 1e-10 * np.max(np.abs(exact))


def test_wigner_function_normalized():
    W = wigner_function(DISPLACED, 0.8)
    grid = sample_grid(W, auto_extent(W), 400)
    assert grid.integral() == pytest.approx(1.0, abs=1e-12)


def test_characteristic_at_origin():
    chi = characteristic_function(DISPLACED, 0.8)
    assert evaluate(chi, [0.0, 0.0]) == pytest.approx(1 / (2 * math.pi * DISPLACED.hbar))


def test_fock_oracle_wigner_and_characteristic():
    beta = 0.8
    st_ = ThermalState(quantize(DISPLACED, 96), beta)
    W = wigner_function(DISPLACED, beta)
    chi = characteristic_function(DISPLACED, beta)
    rng = np.random.default_rng(1)
    for _ in range(4):
        x = DISPLACED.eta + rng.normal(scale=0.6, size=2)
        assert st_.wigner(x) == pytest.approx(evaluate(W, x).real, abs=1e-10)
        xi = rng.normal(scale=0.6, size=2)
        assert st_.characteristic(xi) == pytest.approx(evaluate(chi, xi), abs=1e-10)


def test_fock_oracle_two_modes_characteristic():
    H = catalog("positive_definite")
    beta = 1.5
    st_ = ThermalState(quantize(H, 40), beta)
    chi = characteristic_function(H, beta)
    for xi in ([0.3, -0.2, 0.1, 0.4], [0.0, 0.5, -0.3, 0.0]):
        assert st_.characteristic(xi) == pytest.approx(evaluate(chi, xi), abs=1e-9)


def test_covariance_oscillator():
    hb, beta = 0.5, 2.0
    Sigma = covariance_matrix(catalog("harmonic_oscillator", hbar=hb), beta)
    np.testing.assert_allclose(Sigma, hb / 2 / math.tanh(hb * beta / 2) * np.eye(2), rtol=1e-13)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), beta=st.floats(0.1, 5.0), n=st.integers(1, 2))
def test_covariance_obeys_uncertainty(seed, beta, n):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(2 * n, 2 * n))
    H = QuadraticHamiltonian(A @ A.T + 0.3 * np.eye(2 * n))
    Sigma = covariance_matrix(H, beta)
    M = Sigma + 0.5j * H.hbar * symplectic_form(n)
    assert np.linalg.eigvalsh(M).min() > -1e-9 * np.abs(Sigma).max()


def test_hyperbolic_has_no_wigner_function():
    H = catalog("hyperbolic_1d")
    with pytest.raises(NotAState) as err:
        wigner_and_characteristic(H, 1.0)
    assert err.value.characteristic is not None


def test_hyperbolic_index_undetermined_beyond_first_wigner_divergence():
    E = thermal_wigner_symbol(catalog("hyperbolic_1d"), 4.0)
    with pytest.raises(IndexUndetermined):
        E.phase
    assert np.all(np.isfinite(E.modulus_values(np.array([[0.1, 0.2]]))))


def test_symbols_refuse_divergent_points():
    H = catalog("hyperbolic_1d")
    with pytest.raises(DivergenceAtWigner):
        thermal_wigner_symbol(H, math.pi)
    with pytest.raises(DivergenceAtWeyl):
        thermal_weyl_symbol(H, 2 * math.pi)


def test_parabolic_weyl_symbol():
    H = catalog("free_particle", {"m": 2.0})
    with pytest.raises(DivergenceAtWeyl):
        thermal_weyl_symbol(H, 1.0)
    beta, hb = 0.7, 1.0
    sym = parabolic_weyl_symbol(H, beta)
    assert sym.delta_axis == "p"
    # Fourier integral over p of exp(-beta m p^2 / 2): sqrt(2 pi / (beta m)) exp(-xi^2/(2 hbar^2 beta m))
    p = np.linspace(-40, 40, 20001)
    xi = 0.8
    f = np.exp(-beta * 2.0 * p ** 2 / 2 + 1j * p * xi / hb).real
    numeric = (f.sum() - 0.5 * (f[0] + f[-1])) * (p[1] - p[0])
    assert sym.gaussian_factor(np.array([xi])) == pytest.approx(numeric, rel=1e-10)


def test_free_particle_wigner_symbol_is_boltzmann():
    H = catalog("free_particle")
    E = thermal_wigner_symbol(H, 0.9)
    x = np.array([3.0, 0.5])
    assert evaluate(E, x).real == pytest.approx(math.exp(-0.9 * 0.5 ** 2 / 2), rel=1e-12)


def test_auto_extent_refuses_growing_symbols():
    with pytest.raises(InsufficientDecay):
        auto_extent(thermal_wigner_symbol(catalog("hyperbolic_1d"), 1.0))


def test_grid_csv_header():
    grid = sample_grid(thermal_wigner_symbol(catalog("harmonic_oscillator"), 1.0), 5.0, 8)
    text = grid.to_csv()
    assert text.splitlines()[0] == "q,p,re,im"
    assert len(text.splitlines()) == 65


def test_symbol_serialization_is_stable():
    E = thermal_wigner_symbol(DISPLACED, 0.8)
    assert E.to_dict() == thermal_wigner_symbol(DISPLACED, 0.8).to_dict()
