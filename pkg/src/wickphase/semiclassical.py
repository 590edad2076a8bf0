"""Grid Groenewold (Moyal) star powers, high-temperature thermal symbols
and fixed-point quadratic approximations for one degree of freedom.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .errors import InsufficientDecay, ValidationError
from .hamiltonians import QuadraticHamiltonian, fmt_float

DECAY_RATIO = 1e-10
DEFAULT_MAX_ORDER = 8


@dataclass(frozen=True, eq=False)
class SymbolGrid:
    """Samples of a phase-space function on a uniform (q, p) grid.

    The represented function is ``exp(log_scale) * values``; the shift keeps
    Boltzmann factors finite at large beta.
    """

    axis_q: np.ndarray
    axis_p: np.ndarray
    values: np.ndarray
    hbar: float = 1.0
    log_scale: float = 0.0

    def __post_init__(self):
        for ax in (self.axis_q, self.axis_p):
            ax = np.asarray(ax, dtype=float)
            if ax.ndim != 1 or ax.size < 5:
                raise ValidationError("grid axes must be 1-d with at least 5 points")
            d = np.diff(ax)
            if np.any(d <= 0) or np.max(np.abs(d - d[0])) > 1e-9 * d[0]:
                raise ValidationError("grid axes must be uniform and increasing")
        if np.shape(self.values) != (len(self.axis_q), len(self.axis_p)):
            raise ValidationError("values shape must match the axes")
        if not self.hbar > 0:
            raise ValidationError("hbar must be positive")

    @classmethod
    def from_function(cls, f: Callable, extent_q: float, extent_p: float, points: int = 201,
                      hbar: float = 1.0) -> "SymbolGrid":
        """Sample ``f(q, p)`` (vectorised) on [-extent_q, extent_q] x [-extent_p, extent_p]."""
        q = np.linspace(-extent_q, extent_q, points)
        p = np.linspace(-extent_p, extent_p, points)
        Q, P = np.meshgrid(q, p, indexing="ij")
        return cls(q, p, np.asarray(f(Q, P)), hbar)

    @property
    def dq(self) -> float:
        return float(self.axis_q[1] - self.axis_q[0])

    @property
    def dp(self) -> float:
        return float(self.axis_p[1] - self.axis_p[0])

    def mesh(self):
        return np.meshgrid(self.axis_q, self.axis_p, indexing="ij")

    def scaled_values(self) -> np.ndarray:
        return np.exp(self.log_scale) * self.values

    def replace(self, values, log_scale=0.0) -> "SymbolGrid":
        return SymbolGrid(self.axis_q, self.axis_p, values, self.hbar, log_scale)

    def decays(self, ratio: float = DECAY_RATIO) -> bool:
        return boundary_ratio(self.values) < ratio

    def integral(self) -> complex:
        wq = np.full(len(self.axis_q), self.dq)
        wq[[0, -1]] /= 2
        wp = np.full(len(self.axis_p), self.dp)
        wp[[0, -1]] /= 2
        return complex(wq @ self.values @ wp) * math.exp(self.log_scale)

    def to_csv(self) -> str:
        v = self.scaled_values()
        lines = ["q,p,re,im"]
        for i, q in enumerate(self.axis_q):
            for j, p in enumerate(self.axis_p):
                z = complex(v[i, j])
                lines.append(f"{fmt_float(q)},{fmt_float(p)},{fmt_float(z.real)},{fmt_float(z.imag)}")
        return "\n".join(lines) + "\n"


def boundary_ratio(values) -> float:
    v = np.abs(values)
    peak = float(np.max(v))
    if peak == 0:
        return 0.0
    edge = max(v[0].max(), v[-1].max(), v[:, 0].max(), v[:, -1].max())
    return float(edge) / peak


# --------------------------------------------------------------------------
# derivatives

# 4th-order first-derivative stencils: central, and one-sided for the two
# points nearest each boundary (all exact on quartic polynomials)
_CENTRAL = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_LEFT0 = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0
_LEFT1 = np.array([-3.0, -10.0, 18.0, -6.0, 1.0]) / 12.0


def _fd1(f: np.ndarray, h: float, axis: int) -> np.ndarray:
    f = np.moveaxis(f, axis, 0)
    n = f.shape[0]
    out = np.empty_like(f)
    out[2:n - 2] = (f[0:n - 4] - 8 * f[1:n - 3] + 8 * f[3:n - 1] - f[4:n]) / 12.0
    out[0] = np.tensordot(_LEFT0, f[0:5], axes=1)
    out[1] = np.tensordot(_LEFT1, f[0:5], axes=1)
    out[n - 1] = -np.tensordot(_LEFT0, f[n - 1:n - 6:-1], axes=1)
    out[n - 2] = -np.tensordot(_LEFT1, f[n - 1:n - 6:-1], axes=1)
    return np.moveaxis(out / h, 0, axis)


def _derivatives_fd(f, dq, dp, max_order):
    out = {(0, 0): f}
    for a in range(max_order + 1):
        if a > 0:
            out[(a, 0)] = _fd1(out[(a - 1, 0)], dq, 0)
        for b in range(1, max_order - a + 1):
            out[(a, b)] = _fd1(out[(a, b - 1)], dp, 1)
    return out


def _derivatives_spectral(f, dq, dp, max_order):
    nq, np_ = f.shape
    Nq, Np = 2 * nq, 2 * np_
    pad = np.zeros((Nq, Np), dtype=complex)
    pad[:nq, :np_] = f
    F = np.fft.fft2(pad)
    kq = 2 * np.pi * np.fft.fftfreq(Nq, d=dq)
    kp = 2 * np.pi * np.fft.fftfreq(Np, d=dp)
    # drop the Nyquist mode so odd derivatives of real data stay real
    if Nq % 2 == 0:
        kq[Nq // 2] = 0.0
    if Np % 2 == 0:
        kp[Np // 2] = 0.0
    real = not np.iscomplexobj(f)
    out = {}
    for a in range(max_order + 1):
        for b in range(max_order - a + 1):
            mult = np.outer((1j * kq) ** a, (1j * kp) ** b)
            d = np.fft.ifft2(F * mult)[:nq, :np_]
            out[(a, b)] = d.real if real else d
    return out


# magnitude of the largest stencil row (one-sided) and spectral k_max factor
_FD_GAIN = float(np.sum(np.abs(_LEFT0)))
_NOISE_MARGIN = 1e3


def derivatives(grid_values, dq, dp, max_order, method="auto", denoise=True):
    """All mixed partials d_q^a d_p^b with a + b <= max_order.

    ``method``: "spectral" (zero-padded FFT, needs boundary decay), "fd"
    (4th-order finite differences) or "auto" (spectral when the grid decays).

    With ``denoise`` an array whose magnitude is within a factor 1e3 of its
    round-off floor, eps * max|f| * (gain/h)^(a+b), is set to zero. High
    derivatives of polynomials are then exactly zero instead of amplified
    rounding noise.
    """
    f = np.asarray(grid_values)
    decays = boundary_ratio(f) < DECAY_RATIO
    if method == "auto":
        method = "spectral" if decays else "fd"
    if method == "spectral":
        if not decays:
            raise InsufficientDecay("spectral differentiation needs a grid that decays at its boundary",
                                    boundary_ratio(f))
        out = _derivatives_spectral(f, dq, dp, max_order)
        gq, gp = math.pi / dq, math.pi / dp
    elif method == "fd":
        out = _derivatives_fd(f, dq, dp, max_order)
        gq, gp = _FD_GAIN / dq, _FD_GAIN / dp
    else:
        raise ValidationError(f"unknown derivative method {method!r}")
    if denoise:
        fmax = float(np.max(np.abs(f)))
        eps = np.finfo(float).eps
        for (a, b), d in out.items():
            if a + b == 0:
                continue
            floor = _NOISE_MARGIN * eps * fmax * gq ** a * gp ** b
            if float(np.max(np.abs(d))) <= floor:
                out[(a, b)] = np.zeros_like(d)
    return out


@lru_cache(maxsize=None)
def _moyal_coefficients(max_order):
    """Terms (coef, (a_f, b_f), (a_g, b_g)) of the truncated Moyal series."""
    terms = []
    for m in range(max_order + 1):
        base = (0.5j) ** m / math.factorial(m)
        for j in range(m + 1):
            c = base * math.comb(m, j) * (-1) ** j
            terms.append((m, c, (m - j, j), (j, m - j)))
    return tuple(terms)


def moyal_product(f: SymbolGrid, g: SymbolGrid, max_order: int = DEFAULT_MAX_ORDER,
                  derivative: str = "auto", return_terms: bool = False):
    """Groenewold product f * g truncated at total derivative order ``max_order``.

    f * g = sum_m (i hbar/2)^m/m! sum_j C(m,j) (-1)^j
            (d_q^(m-j) d_p^j f)(d_q^j d_p^(m-j) g)
    """
    if f.values.shape != g.values.shape:
        raise ValidationError("star product needs matching grids")
    hb = f.hbar
    Df = derivatives(f.values, f.dq, f.dp, max_order, derivative)
    Dg = Df if g is f else derivatives(g.values, g.dq, g.dp, max_order, derivative)
    by_order = [np.zeros(f.values.shape, dtype=complex) for _ in range(max_order + 1)]
    for m, c, (af, bf), (ag, bg) in _moyal_coefficients(max_order):
        by_order[m] += (c * hb ** m) * Df[(af, bf)] * Dg[(ag, bg)]
    total = sum(by_order)
    out = f.replace(total, f.log_scale + g.log_scale)
    if return_terms:
        return out, by_order
    return out


def star_power(H_grid: SymbolGrid, k: int, order: str = "exact_fft", max_order: int = DEFAULT_MAX_ORDER,
               derivative: str = "auto") -> SymbolGrid:
    """Wigner symbol of H^k from the Wigner symbol H of H^.

    Parameters
    ----------
    order : {"exact_fft", "hbar2"}
        ``exact_fft`` iterates the truncated Groenewold product
        H^k = H * H^(k-1). ``hbar2`` returns [H]^k, with the hbar^2
        correction +(hbar^2/8) Tr(J d2H)^2 added for k = 2.
    derivative : {"auto", "spectral", "fd"}
        Differentiation scheme; "spectral" refuses non-decaying grids.
    """
    if int(k) != k or k < 1:
        raise ValidationError("k must be a positive integer")
    k = int(k)
    if k == 1:
        return H_grid
    if order == "hbar2":
        v = H_grid.values ** k
        if k == 2:
            v = v + (H_grid.hbar ** 2 / 8) * trace_j_hessian_sq(H_grid, derivative)
        return H_grid.replace(v)
    if order != "exact_fft":
        raise ValidationError(f"unknown order {order!r}")
    if derivative == "spectral" and not H_grid.decays():
        raise InsufficientDecay("exact_fft with spectral derivatives needs boundary decay",
                                boundary_ratio(H_grid.values))
    acc = H_grid
    for _ in range(k - 1):
        acc = moyal_product(H_grid, acc, max_order, derivative)
    return acc


def trace_j_hessian_sq(H_grid: SymbolGrid, derivative: str = "auto") -> np.ndarray:
    """Tr(J d2H)^2 = 2 (H_qp^2 - H_qq H_pp) pointwise."""
    D = derivatives(H_grid.values, H_grid.dq, H_grid.dp, 2, derivative)
    return 2 * (D[(1, 1)] ** 2 - D[(2, 0)] * D[(0, 2)])


def semiclassical_thermal_symbol(H_grid: SymbolGrid, beta: float, mode: str = "leading",
                                 derivative: str = "auto") -> SymbolGrid:
    """High-temperature Wigner symbol of exp(-beta H^).

    Modes
    -----
    leading          exp(-beta H)
    hbar2_resummed   [1 + (hbar^2 beta^2/16) Tr(J d2H)^2] exp(-beta H)
    hbar2_additive   exp(-beta H) + (hbar^2 beta^2/16) Tr(J d2H)^2

    The largest exponent is factored into ``log_scale`` so the stored
    values never overflow.
    """
    beta = float(beta)
    if not (beta >= 0 and math.isfinite(beta)):
        raise ValidationError("beta must be non-negative and finite")
    H = np.asarray(H_grid.values)
    if np.iscomplexobj(H):
        if np.max(np.abs(H.imag)) > 1e-9 * max(1.0, np.max(np.abs(H))):
            raise ValidationError("Hamiltonian symbol must be real")
        H = H.real
    expo = -beta * H
    shift = float(np.max(expo)) if np.max(expo) > 700 else 0.0
    boltz = np.exp(expo - shift)
    if mode == "leading":
        return H_grid.replace(boltz, shift)
    corr = (H_grid.hbar * beta) ** 2 / 16 * trace_j_hessian_sq(H_grid, derivative)
    if mode == "hbar2_resummed":
        return H_grid.replace((1 + corr) * boltz, shift)
    if mode == "hbar2_additive":
        return H_grid.replace(boltz + corr * math.exp(-shift), shift)
    raise ValidationError(f"unknown mode {mode!r}")


def fixed_point_quadratic(H_grid: SymbolGrid, x0, radius: float, tol: float = 1e-6) -> QuadraticHamiltonian:
    """Local quadratic model of H around a critical point x0.

    A degree-6 polynomial in (q - q0, p - p0) is least-squares fitted to the
    grid samples within ``radius``; its gradient must vanish within ``tol``.
    """
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if x0.shape != (2,):
        raise ValidationError("x0 must be a 2-vector")
    Q, P = H_grid.mesh()
    dq, dp = Q - x0[0], P - x0[1]
    mask = dq ** 2 + dp ** 2 <= radius ** 2
    powers = [(a, b) for t in range(7) for b in range(t + 1) for a in [t - b]]
    if mask.sum() < 3 * len(powers):
        raise ValidationError("too few grid points inside the fitting radius")
    X = np.stack([dq[mask] ** a * dp[mask] ** b for a, b in powers], axis=1)
    y = np.real(np.asarray(H_grid.values)[mask])
    s = max(radius, 1e-300)
    scale = np.array([s ** (a + b) for a, b in powers])
    coef, *_ = np.linalg.lstsq(X / scale, y, rcond=None)
    coef = coef / scale
    c = dict(zip(powers, coef))
    grad = np.array([c[(1, 0)], c[(0, 1)]])
    gnorm = float(np.linalg.norm(grad))
    if gnorm > tol:
        raise ValidationError(f"x0 is not a critical point: |grad H| = {gnorm:.3e} > {tol:g}")
    hess = np.array([[2 * c[(2, 0)], c[(1, 1)]], [c[(1, 1)], 2 * c[(0, 2)]]])
    return QuadraticHamiltonian(hess, x0, float(c[(0, 0)]), H_grid.hbar)
