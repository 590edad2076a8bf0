import math

import numpy as np
import pytest

from wickphase import thermal_wigner_symbol
from wickphase.errors import InsufficientDecay, ValidationError
from wickphase.semiclassical import (
    SymbolGrid,
    boundary_ratio,
    fixed_point_quadratic,
    moyal_product,
    semiclassical_thermal_symbol,
    star_power,
    trace_j_hessian_sq,
)


def poly_grid(f, extent=2.0, points=81, hbar=1.0):
    return SymbolGrid.from_function(f, extent, extent, points, hbar)


def test_canonical_pair():
    q = poly_grid(lambda q, p: q)
    p = poly_grid(lambda q, p: p)
    Q, P = q.mesh()
    assert np.allclose(moyal_product(q, p).values, Q * P + 0.5j, atol=1e-12)
    comm = moyal_product(q, p).values - moyal_product(p, q).values
    assert np.allclose(comm, 1j, atol=1e-12)


@pytest.mark.parametrize("hbar", [1.0, 0.3])
def test_oscillator_square(hbar):
    H = poly_grid(lambda q, p: (q * q + p * p) / 2, hbar=hbar)
    exact = star_power(H, 2)
    expected = H.values ** 2 - hbar ** 2 / 4
    assert np.max(np.abs(exact.values - expected)) < 1e-10
    assert np.max(np.abs(star_power(H, 2, order="hbar2").values - expected)) < 1e-10


def test_quartic_hbar2_is_exact():
    # for q^4 + p^2 the k = 2 series stops at hbar^2
    for hbar in (1.0, 0.5):
        H = poly_grid(lambda q, p: q ** 4 + p ** 2, hbar=hbar)
        diff = star_power(H, 2).values - star_power(H, 2, order="hbar2").values
        assert np.max(np.abs(diff)) < 1e-8 * np.max(np.abs(H.values ** 2))


def test_trace_j_hessian_sq_of_quadratics():
    H = poly_grid(lambda q, p: 1.5 * q * q + 0.4 * q * p + 0.5 * p * p)
    # H = x.M x / 2 with M = [[3, .4], [.4, 1]]: Tr(JM)^2 = 2 (0.16 - 3)
    assert np.allclose(trace_j_hessian_sq(H), 2 * (0.16 - 3.0), atol=1e-10)


def test_gaussian_composition_converges_with_order():
    # exp(-a r^2) * exp(-b r^2) = exp(-(a+b) r^2 / (1+ab)) / (1+ab), hbar = 1
    a = 0.3
    g = SymbolGrid.from_function(lambda q, p: np.exp(-a * (q * q + p * p)), 9, 9, 129)
    Q, P = g.mesh()
    exact = np.exp(-2 * a / (1 + a * a) * (Q * Q + P * P)) / (1 + a * a)
    errs = [np.max(np.abs(moyal_product(g, g, max_order=o).values - exact)) for o in (2, 4, 6, 8)]
    assert errs[-1] < 1e-5
    for e0, e1 in zip(errs, errs[1:]):
        assert 0.03 < e1 / e0 < 0.2


def test_star_power_realness():
    kerr = poly_grid(lambda q, p: (q * q + p * p) / 2 + (q * q + p * p) ** 2 / 4)
    sq = star_power(kerr, 2)
    assert np.max(np.abs(sq.values.imag)) < 1e-12 * np.max(np.abs(sq.values))
    quad = poly_grid(lambda q, p: 0.8 * q * q + 0.3 * q * p + 0.6 * p * p)
    cube = star_power(quad, 3)
    assert np.max(np.abs(cube.values.imag)) < 1e-10 * np.max(np.abs(cube.values))
    # one-sided stencils spoil the outer rows; realness holds in the interior
    kcube = star_power(kerr, 3).values[8:-8, 8:-8]
    assert np.max(np.abs(kcube.imag)) < 1e-5 * np.max(np.abs(kcube))


def test_star_power_is_associative_on_polynomials():
    H = poly_grid(lambda q, p: q * q + q * p + 2 * p * p)
    H2 = star_power(H, 2)
    left = moyal_product(H2, H).values
    right = moyal_product(H, H2).values
    assert np.max(np.abs(left - right)) < 1e-9 * np.max(np.abs(left))


def test_spectral_derivatives_refuse_non_decaying_grids():
    H = poly_grid(lambda q, p: q * q + p * p)
    with pytest.raises(InsufficientDecay):
        star_power(H, 2, derivative="spectral")
    g = SymbolGrid.from_function(lambda q, p: np.exp(-(q * q + p * p)), 8, 8, 101)
    assert g.decays() and boundary_ratio(g.values) < 1e-10
    star_power(g, 2, derivative="spectral")


def test_star_power_validation():
    H = poly_grid(lambda q, p: q * p)
    assert star_power(H, 1) is H
    for k in (0, 1.5, -2):
        with pytest.raises(ValidationError):
            star_power(H, k)
    with pytest.raises(ValidationError):
        star_power(H, 2, order="cubic")
    other = SymbolGrid.from_function(lambda q, p: q, 1, 1, 21)
    with pytest.raises(ValidationError):
        moyal_product(H, other)


def test_grid_validation():
    q = np.linspace(-1, 1, 11)
    with pytest.raises(ValidationError):
        SymbolGrid(q, np.array([0, 1, 3, 4, 5.0]), np.zeros((11, 5)))
    with pytest.raises(ValidationError):
        SymbolGrid(q, q, np.zeros((11, 10)))
    with pytest.raises(ValidationError):
        SymbolGrid(q[:3], q[:3], np.zeros((3, 3)))
    with pytest.raises(ValidationError):
        SymbolGrid(q, q, np.zeros((11, 11)), hbar=0.0)


def test_grid_integral_and_csv():
    g = SymbolGrid.from_function(lambda q, p: np.exp(-(q * q + p * p)), 7, 7, 141)
    assert g.integral() == pytest.approx(math.pi, rel=1e-10)
    lines = SymbolGrid.from_function(lambda q, p: q + 1j * p, 1, 1, 5).to_csv().splitlines()
    assert lines[0] == "q,p,re,im"
    assert len(lines) == 26
    assert lines[1] == "-1.0,-1.0,-1.0,-1.0"


def test_thermal_symbol_modes(oscillator):
    H = poly_grid(lambda q, p: (q * q + p * p) / 2)
    beta = 0.2
    boltz = np.exp(-beta * H.values)
    lead = semiclassical_thermal_symbol(H, beta)
    assert np.allclose(lead.values, boltz)
    res = semiclassical_thermal_symbol(H, beta, mode="hbar2_resummed")
    assert np.allclose(res.values, (1 - beta ** 2 / 8) * boltz, atol=1e-12)
    add = semiclassical_thermal_symbol(H, beta, mode="hbar2_additive")
    assert np.allclose(add.values, boltz - beta ** 2 / 8, atol=1e-12)
    # resummed agrees with the exact symbol through beta^2
    exact = thermal_wigner_symbol(oscillator, beta)
    ex = np.array([[exact(np.array([a, b])) for b in H.axis_p[::8]] for a in H.axis_q[::8]])
    err = np.abs(res.values[::8, ::8] - ex.real) / boltz[::8, ::8]
    assert np.max(err) < beta ** 3
    with pytest.raises(ValidationError):
        semiclassical_thermal_symbol(H, beta, mode="exact")
    with pytest.raises(ValidationError):
        semiclassical_thermal_symbol(H, -1.0)
    with pytest.raises(ValidationError):
        semiclassical_thermal_symbol(H.replace(H.values + 1j), beta)


def test_thermal_symbol_does_not_overflow():
    H = poly_grid(lambda q, p: q * q - 2000.0)
    sym = semiclassical_thermal_symbol(H, 1.0)
    assert np.all(np.isfinite(sym.values))
    assert sym.log_scale == pytest.approx(2000.0)
    assert np.max(sym.values) == pytest.approx(1.0)
    small = semiclassical_thermal_symbol(poly_grid(lambda q, p: q * q + 1.0), 1.0)
    assert small.log_scale == 0.0


def test_pendulum_fixed_points():
    grid = SymbolGrid.from_function(lambda q, p: p * p / 2 - np.cos(q), 4.0, 2.0, 161)
    bottom = fixed_point_quadratic(grid, [0.0, 0.0], 0.6)
    assert np.allclose(bottom.hessian, np.eye(2), atol=1e-6)
    assert bottom.h0 == pytest.approx(-1.0, abs=1e-8)
    top = fixed_point_quadratic(grid, [math.pi, 0.0], 0.6)
    assert np.allclose(top.hessian, np.diag([-1.0, 1.0]), atol=1e-6)
    with pytest.raises(ValidationError, match="critical"):
        fixed_point_quadratic(grid, [1.0, 0.0], 0.6)
    with pytest.raises(ValidationError):
        fixed_point_quadratic(grid, [0.0, 0.0], 1e-3)
