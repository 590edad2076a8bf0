"""Closed-form Gaussian Weyl and Wigner symbols of thermal and metaplectic
operators, Wigner/characteristic functions and a grid symplectic Fourier
transform for one degree of freedom.

A :class:`GaussianSymbol` evaluates

    prefactor * i**quarter_turns * exp(scalar_exponent)
        * exp(-(1/hbar) (y - c).A(y - c)) * exp(-(i/hbar) y ^ wedge)

at a point y (x for Wigner symbols, xi for Weyl symbols).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import (
    DivergenceAtWeyl,
    DivergenceAtWigner,
    IndexUndetermined,
    InsufficientDecay,
    NotAState,
    ValidationError,
)
from .hamiltonians import QuadraticHamiltonian, fmt_float
from .symplectic import PARABOLIC, symplectic_form
from .wick import (
    CZIndexState,
    cayley,
    complex_symplectic,
    divergence_sides,
    cayley_inverse,
    inverse_im_cayley,
    log_abs_det_shift,
    mode_classes,
    realtime_symplectic,
    signature,
    thermal_indices,
    warn_if_near,
)

WEYL = "weyl"
WIGNER = "wigner"
DECAY_RATIO = 1e-10


@dataclass(frozen=True, eq=False)
class GaussianSymbol:
    """Closed-form Gaussian symbol; see the module docstring."""

    representation: str
    n: int
    prefactor_magnitude: float
    phase_quarter_turns: Optional[int]
    quad_form: np.ndarray
    center: np.ndarray
    wedge: np.ndarray
    scalar_exponent: complex = 0.0
    hbar: float = 1.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.representation not in (WEYL, WIGNER):
            raise ValidationError(f"unknown representation {self.representation!r}")
        if not self.prefactor_magnitude > 0:
            raise ValidationError("prefactor magnitude must be positive")
        if self.phase_quarter_turns is not None:
            object.__setattr__(self, "phase_quarter_turns", int(self.phase_quarter_turns) % 4)

    @property
    def phase(self) -> complex:
        if self.phase_quarter_turns is None:
            raise IndexUndetermined(
                "the Conley-Zehnder index of this symbol is not fixed by continuity; "
                "only its modulus is known")
        return (1, 1j, -1, -1j)[self.phase_quarter_turns]

    def modulus_values(self, y) -> np.ndarray:
        """Values without the i**nu phase (usable when the index is undetermined)."""
        y = np.asarray(y, dtype=float)
        if y.shape[-1] != 2 * self.n:
            raise ValidationError(f"points must have trailing dimension {2 * self.n}")
        d = y - self.center
        quad = np.einsum("...i,ij,...j->...", d, self.quad_form, d)
        J = symplectic_form(self.n)
        wedge = (y @ J.T) @ self.wedge
        expo = self.scalar_exponent - quad / self.hbar - 1j * wedge / self.hbar
        return self.prefactor_magnitude * np.exp(expo)

    def values(self, y) -> np.ndarray:
        """Vectorised evaluation at points of shape (..., 2n)."""
        return self.phase * self.modulus_values(y)

    def __call__(self, y):
        return self.values(y)

    def to_dict(self) -> dict:
        A = self.quad_form
        return {
            "representation": self.representation,
            "n": self.n,
            "prefactor_magnitude": fmt_float(self.prefactor_magnitude),
            "phase_quarter_turns": self.phase_quarter_turns,
            "quad_form_re": [[fmt_float(v) for v in row] for row in np.real(A)],
            "quad_form_im": [[fmt_float(v) for v in row] for row in np.imag(A)],
            "center": [fmt_float(v) for v in self.center],
            "wedge": [fmt_float(v) for v in self.wedge],
            "scalar_exponent_re": fmt_float(np.real(self.scalar_exponent)),
            "scalar_exponent_im": fmt_float(np.imag(self.scalar_exponent)),
            "hbar": fmt_float(self.hbar),
            **{k: v for k, v in self.meta.items()},
        }


def evaluate(sym: GaussianSymbol, point) -> complex:
    """Exact evaluation of a symbol at a single point."""
    return complex(sym.values(np.asarray(point, dtype=float)))


@dataclass(frozen=True, eq=False)
class ParabolicWeylSymbol:
    """Weyl symbol of exp(-beta p.Mp/2): a Gaussian in xi_q times delta(xi_p).

    Only the Gaussian factor ``coefficient * exp(-xi_q.G xi_q)`` can be
    evaluated; the delta marker excludes it from grid transforms.
    """

    n: int
    coefficient: float
    gaussian: np.ndarray
    delta_axis: str = "p"
    hbar: float = 1.0
    scalar_exponent: float = 0.0

    def gaussian_factor(self, xi_free) -> np.ndarray:
        xi = np.asarray(xi_free, dtype=float)
        return self.coefficient * np.exp(self.scalar_exponent
                                         - np.einsum("...i,ij,...j->...", xi, self.gaussian, xi))


# --------------------------------------------------------------------------
# thermal symbols


def _prepared(H: QuadraticHamiltonian, beta: float) -> QuadraticHamiltonian:
    beta = float(beta)
    if not (beta > 0 and math.isfinite(beta)):
        raise ValidationError(f"beta must be positive and finite, got {beta}")
    return H.normalized()


def thermal_weyl_symbol(H: QuadraticHamiltonian, beta: float) -> GaussianSymbol:
    """Weyl symbol of exp(-beta H), the Fourier dual of the Wigner symbol.

    E~(xi) = i**nu- |det(S - I)|^(-1/2) exp(-beta h0 - (1/hbar) xi.A xi - (i/hbar) xi ^ eta)
    with A = J (Im C)^-1 J / 4.
    """
    H = _prepared(H, beta)
    classes = mode_classes(H)
    sides = divergence_sides(H, beta, classes=classes)
    if PARABOLIC in classes.kinds:
        raise DivergenceAtWeyl("parabolic Hamiltonian: the Weyl symbol contains a Dirac delta "
                               "(see parabolic_weyl_symbol)", beta)
    if "weyl" in sides:
        raise DivergenceAtWeyl(f"det(S_beta - I) = 0 at beta = {beta}: the Weyl symbol diverges", beta)
    warn_if_near(H, beta)
    S = complex_symplectic(H, beta)
    magnitude = math.exp(-0.5 * log_abs_det_shift(S, -1))
    J = symplectic_form(H.n)
    A = 0.25 * J @ inverse_im_cayley(S) @ J
    A = 0.5 * (A + A.T)
    idx = thermal_indices(H, beta)
    return GaussianSymbol(WEYL, H.n, magnitude, idx.nu_minus, A, np.zeros(2 * H.n),
                          H.eta.copy(), -beta * H.h0, H.hbar,
                          {"beta": beta, "determination": idx.determination})


def thermal_wigner_symbol(H: QuadraticHamiltonian, beta: float) -> GaussianSymbol:
    """Wigner symbol E(x) = i**nu+ 2^n |det(S + I)|^(-1/2) exp((1/hbar)(x-eta).Im C (x-eta) - beta h0)."""
    H = _prepared(H, beta)
    sides = divergence_sides(H, beta)
    if "wigner" in sides:
        raise DivergenceAtWigner(f"det(S_beta + I) = 0 at beta = {beta}: the Wigner symbol diverges", beta)
    warn_if_near(H, beta)
    S = complex_symplectic(H, beta)
    magnitude = 2.0 ** H.n * math.exp(-0.5 * log_abs_det_shift(S, 1))
    C = cayley(S)
    idx = thermal_indices(H, beta)
    return GaussianSymbol(WIGNER, H.n, magnitude, idx.nu_plus, -C.im_part,
                          H.eta.copy(), np.zeros(2 * H.n), -beta * H.h0, H.hbar,
                          {"beta": beta, "determination": idx.determination})


def parabolic_weyl_symbol(H: QuadraticHamiltonian, beta: float) -> ParabolicWeylSymbol:
    """Delta-type Weyl symbol of a free particle with Hessian 0 + M or M + 0."""
    H = _prepared(H, beta)
    n = H.n
    Hq, Hp = H.hessian[:n, :n], H.hessian[n:, n:]
    if np.any(H.hessian[:n, n:]):
        raise ValidationError("parabolic Weyl symbol needs a block-diagonal Hessian 0 + M or M + 0")
    if not np.any(Hq) and np.any(Hp):
        M, axis = Hp, "p"
    elif not np.any(Hp) and np.any(Hq):
        M, axis = Hq, "q"
    else:
        raise ValidationError("Hessian is not of free-particle form")
    w = np.linalg.eigvalsh(M)
    if w[0] <= 0:
        raise ValidationError("mass matrix must be positive definite for the Weyl symbol")
    coef = (2 * math.pi / beta) ** (n / 2) / math.sqrt(float(np.prod(w)))
    G = np.linalg.inv(M) / (2 * H.hbar ** 2 * beta)
    if np.any(H.eta):
        raise ValidationError("displaced free particles are not supported by the delta symbol")
    return ParabolicWeylSymbol(n, coef, G, "p" if axis == "p" else "q", H.hbar, -beta * H.h0)


def covariance_matrix(H: QuadraticHamiltonian, beta: float) -> np.ndarray:
    """Sigma = -(hbar/2) (Im C)^-1 of the thermal state."""
    H = _prepared(H, beta)
    S = complex_symplectic(H, beta)
    return -(H.hbar / 2) * inverse_im_cayley(S)


def characteristic_function(H: QuadraticHamiltonian, beta: float) -> GaussianSymbol:
    """chi(xi) = E~(xi) / ((2 pi hbar)^n E~(0))."""
    E = thermal_weyl_symbol(H, beta)
    scale = (2 * math.pi * E.hbar) ** E.n
    return GaussianSymbol(WEYL, E.n, 1.0 / scale, 0, E.quad_form, E.center, E.wedge, 0.0, E.hbar,
                          {"beta": float(beta), "kind": "characteristic"})


def wigner_function(H: QuadraticHamiltonian, beta: float) -> GaussianSymbol:
    """Normalized Wigner function of the thermal state.

    Raises
    ------
    NotAState
        If Im C is not negative definite.
    """
    Hn = _prepared(H, beta)
    if divergence_sides(Hn, beta) & {"wigner"}:
        raise DivergenceAtWigner(f"Wigner symbol diverges at beta = {beta}", beta)
    S = complex_symplectic(Hn, beta)
    A = -cayley(S).im_part
    w = np.linalg.eigvalsh(A)
    if w[0] <= 1e-12 * max(1.0, w[-1]):
        raise NotAState("Im C is not negative definite: no normalizable Wigner function "
                        "with correct marginals", None)
    norm = math.sqrt(float(np.prod(w))) / (math.pi * Hn.hbar) ** Hn.n
    return GaussianSymbol(WIGNER, Hn.n, norm, 0, A, Hn.eta.copy(), np.zeros(2 * Hn.n), 0.0, Hn.hbar,
                          {"beta": float(beta), "kind": "wigner_function"})


def wigner_and_characteristic(H: QuadraticHamiltonian, beta: float):
    """Return (W, chi). Raises NotAState (with ``characteristic``) when W does not exist."""
    chi = characteristic_function(H, beta)
    try:
        W = wigner_function(H, beta)
    except (NotAState, DivergenceAtWigner) as exc:
        raise NotAState(str(exc), chi) from exc
    return W, chi


# --------------------------------------------------------------------------
# real-time metaplectic symbols


def metaplectic_symbols(H: QuadraticHamiltonian, t: float, cz: Optional[CZIndexState] = None):
    """Weyl and Wigner symbols of the metaplectic operator exp(-i H t / hbar).

    Returns
    -------
    (weyl, wigner)
        Either entry is None when that side diverges at ``t``.

    Raises
    ------
    DivergenceAtWeyl
        If both sides diverge (only possible at t = 0 for the Weyl side
        combined with a singular S + I, which cannot happen).
    """
    H = H.normalized()
    t = float(t)
    classes = mode_classes(H)
    sides = divergence_sides(H, t, realtime=True, classes=classes)
    if cz is None:
        from .wick import cz_realtime
        cz = cz_realtime(H, [t])[-1] if t > 0 else cz_realtime(H, [0.0])[0]
    S = realtime_symplectic(H, t)
    n = H.n
    J = symplectic_form(n)
    scalar = -1j * H.h0 * t / H.hbar
    weyl = wig = None
    if "weyl" not in sides:
        A = 0.25j * J @ cayley_inverse(S) @ J
        A = 0.5 * (A + A.T)
        weyl = GaussianSymbol(WEYL, n, math.exp(-0.5 * log_abs_det_shift(S, -1)), cz.nu_minus, A,
                              np.zeros(2 * n), H.eta.copy(), scalar, H.hbar, {"t": t})
    if "wigner" not in sides:
        C = cayley(S).matrix
        wig = GaussianSymbol(WIGNER, n, 2.0 ** n * math.exp(-0.5 * log_abs_det_shift(S, 1)), cz.nu_plus,
                             1j * C, H.eta.copy(), np.zeros(2 * n), scalar, H.hbar, {"t": t})
    if weyl is None and wig is None:
        raise DivergenceAtWeyl(f"both symbols diverge at t = {t}", t)
    return weyl, wig


def fourier_sign_rule(H: QuadraticHamiltonian, t: float) -> int:
    """Sng C at time t (the quarter-turn jump across a divergence is Sng C / 2)."""
    return signature(cayley(realtime_symplectic(H, t)).matrix.real)


# --------------------------------------------------------------------------
# grid symplectic Fourier transform (n = 1)


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Values on a uniform symmetric (q, p) or (xi_q, xi_p) grid, n = 1.

    ``values[i, j]`` is the sample at (axis_q[i], axis_p[j]).
    """

    axis_q: np.ndarray
    axis_p: np.ndarray
    values: np.ndarray
    hbar: float = 1.0
    representation: str = WIGNER

    def __post_init__(self):
        for ax in (self.axis_q, self.axis_p):
            ax = np.asarray(ax)
            if ax.ndim != 1 or ax.size < 3:
                raise ValidationError("grid axes must be 1-d with at least 3 points")
            d = np.diff(ax)
            if np.max(np.abs(d - d[0])) > 1e-9 * abs(d[0]) or abs(ax[0] + ax[-1]) > 1e-9 * abs(ax[0]):
                raise ValidationError("grid axes must be uniform and symmetric about 0")
        if np.shape(self.values) != (len(self.axis_q), len(self.axis_p)):
            raise ValidationError("values shape must match the axes")

    @property
    def points(self) -> np.ndarray:
        Q, P = np.meshgrid(self.axis_q, self.axis_p, indexing="ij")
        return np.stack([Q, P], axis=-1)

    def boundary_ratio(self) -> float:
        v = np.abs(self.values)
        peak = float(np.max(v))
        if peak == 0:
            return 0.0
        edge = max(v[0].max(), v[-1].max(), v[:, 0].max(), v[:, -1].max())
        return float(edge) / peak

    def integral(self) -> complex:
        wq = _trapezoid_weights(self.axis_q)
        wp = _trapezoid_weights(self.axis_p)
        return complex(wq @ self.values @ wp)

    def to_csv(self) -> str:
        lines = ["q,p,re,im"]
        for i, q in enumerate(self.axis_q):
            for j, p in enumerate(self.axis_p):
                v = complex(self.values[i, j])
                lines.append(f"{fmt_float(q)},{fmt_float(p)},{fmt_float(v.real)},{fmt_float(v.imag)}")
        return "\n".join(lines) + "\n"


def _trapezoid_weights(ax) -> np.ndarray:
    h = ax[1] - ax[0]
    w = np.full(len(ax), h)
    w[0] = w[-1] = h / 2
    return w


def sample_grid(sym: GaussianSymbol, extent: float, points: int = 1024) -> GridFunction:
    """Sample an n = 1 symbol on [-extent, extent]^2."""
    if sym.n != 1:
        raise ValidationError("grid sampling is limited to one degree of freedom")
    ax = np.linspace(-extent, extent, points)
    Q, P = np.meshgrid(ax, ax, indexing="ij")
    vals = sym.values(np.stack([Q, P], axis=-1))
    return GridFunction(ax, ax.copy(), vals, sym.hbar, sym.representation)


def auto_extent(sym: GaussianSymbol, ratio: float = DECAY_RATIO, margin: float = 1.15) -> float:
    """Half-width L at which the Gaussian envelope falls below ``ratio`` of its peak."""
    A = np.real(sym.quad_form)
    w = np.linalg.eigvalsh(0.5 * (A + A.T))
    if w[0] <= 0:
        raise InsufficientDecay("symbol has no Gaussian decay (Re A not positive definite)", 1.0)
    r = math.sqrt(sym.hbar * math.log(1.0 / ratio) / w[0])
    return margin * (r + float(np.max(np.abs(sym.center))))


def symplectic_fourier(grid: GridFunction, direction: str = "forward",
                       decay_ratio: float = DECAY_RATIO) -> GridFunction:
    """Trapezoidal symplectic Fourier transform on the same symmetric grid.

    F[A](xi) = (2 pi hbar)^-1 sum A(q, p) exp((i/hbar)(p xi_q - q xi_p)) dq dp.
    The transform is an involution, so both directions use the same kernel;
    ``direction`` only selects the output label.

    Raises
    ------
    InsufficientDecay
        If the boundary magnitude exceeds ``decay_ratio`` of the peak.
    """
    if direction not in ("forward", "inverse", "wigner_to_weyl", "weyl_to_wigner"):
        raise ValidationError(f"unknown direction {direction!r}")
    ratio = grid.boundary_ratio()
    if not np.isfinite(ratio) or ratio >= decay_ratio:
        raise InsufficientDecay(
            f"grid function does not decay: boundary/peak = {ratio:.3e} >= {decay_ratio:.1e}", ratio)
    q, p = grid.axis_q, grid.axis_p
    hb = grid.hbar
    wq = _trapezoid_weights(q)
    wp = _trapezoid_weights(p)
    # out[a, b] = sum_ij Eq[a, j] Ep[b, i] A[i, j] with xi_q = q_a, xi_p = p_b
    Ep = np.exp(-1j * np.outer(p, q) / hb) * wq          # (xi_p index b, q index i)
    Eq = np.exp(1j * np.outer(q, p) / hb) * wp           # (xi_q index a, p index j)
    out = (Eq @ grid.values.T @ Ep.T) / (2 * math.pi * hb)
    rep = WEYL if grid.representation == WIGNER else WIGNER
    return GridFunction(q.copy(), p.copy(), out, hb, rep)
