"""Wick-rotated symplectic matrices, Cayley parametrization, divergence
detection and Conley-Zehnder index bookkeeping.

The thermal matrix is S_beta = exp(-i hbar beta J H). It is complex
symplectic with S* = S^-1, and its Cayley matrix is purely imaginary.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.optimize

from .errors import (
    DivergenceAtWeyl,
    DivergenceAtWigner,
    NumericalFailure,
    SimultaneousDivergence,
    ValidationError,
)
from .hamiltonians import QuadraticHamiltonian
from .symplectic import (
    ELLIPTIC,
    HYPERBOLIC,
    PARABOLIC,
    HamiltonianClass,
    classify_generator,
    matrix_exponential,
    symplectic_form,
)

WSP_TOL = 1e-10
# phase distance (relative) below which a mode counts as exactly resonant
DIVERGENCE_PHASE_TOL = 1e-9
NEAR_DIVERGENCE_PHASE = 1e-6
CAYLEY_COND_LIMIT = 1e13
SPECTRAL_ROUTE_NORM = 1e3
EIGVEC_COND_LIMIT = 1e8

FULL_PATH = "full_path"
POSITIVITY_ONLY = "positivity_only"
UNDETERMINED_BEYOND = "undetermined_beyond"


class NearDivergenceWarning(UserWarning):
    """A symbol is evaluated close to one of its divergences."""


@dataclass(frozen=True)
class ComplexSymplectic:
    """S_beta (thermal) or S_t (real time, ``thermal=False``)."""

    matrix: np.ndarray
    beta: float
    hbar: float = 1.0
    thermal: bool = True
    generator: Optional[np.ndarray] = None  # X with S = exp(X), when known

    @property
    def n(self) -> int:
        return self.matrix.shape[0] // 2


@dataclass(frozen=True)
class CayleyMatrix:
    """C = -J (S - I)(S + I)^-1, complex symmetric."""

    matrix: np.ndarray

    @property
    def n(self) -> int:
        return self.matrix.shape[0] // 2

    @property
    def im_part(self) -> np.ndarray:
        X = self.matrix.imag
        return 0.5 * (X + X.T)

    @property
    def re_part(self) -> np.ndarray:
        X = self.matrix.real
        return 0.5 * (X + X.T)


@dataclass(frozen=True)
class Divergence:
    beta: float
    side: str
    continuum: bool = False


@dataclass(frozen=True)
class CZIndexState:
    """Conley-Zehnder indices (nu-, nu+) in {0, 1, 2, 3}; None when undefined.

    ``window_end`` is the parameter value where the determination stops
    being valid (the next relevant divergence), ``inf`` if none.
    """

    nu_minus: Optional[int]
    nu_plus: Optional[int]
    determination: str
    window_end: float = math.inf
    param: float = 0.0


def wsp_defects(S: np.ndarray) -> dict:
    """Deviations of S from the Wick-rotated group invariants."""
    n = S.shape[0] // 2
    J = symplectic_form(n)
    I = np.eye(2 * n)
    return {
        "symplectic": float(np.max(np.abs(S.T @ J @ S - J))),
        "unitary_conj": float(np.max(np.abs(S.conj() @ S - I))),
        "trace_imag": float(abs(np.trace(S).imag)),
        "det": float(abs(np.linalg.det(S) - 1.0)),
        "det_minus_imag": float(abs(np.linalg.det(S - I).imag)),
        "det_plus_imag": float(abs(np.linalg.det(S + I).imag)),
    }


def complex_symplectic(H: QuadraticHamiltonian, beta: float, check: bool = True) -> ComplexSymplectic:
    """S_beta = exp(-i hbar beta J H) with WSp invariants verified."""
    beta = float(beta)
    if not (beta >= 0 and math.isfinite(beta)):
        raise ValidationError(f"beta must be finite and non-negative, got {beta}")
    X = -1j * H.hbar * beta * H.generator
    S = np.asarray(matrix_exponential(X), dtype=complex)
    if check:
        scale = max(1.0, float(np.max(np.abs(S)))) ** 2
        d = wsp_defects(S) if S.shape[0] <= 64 else None
        if d is not None:
            bad = {k: v for k, v in d.items()
                   if k in ("symplectic", "unitary_conj", "trace_imag") and v > WSP_TOL * scale * 2 * H.n}
            if bad:
                raise NumericalFailure(f"S_beta violates complex-symplectic invariants: {bad}")
    return ComplexSymplectic(S, beta, H.hbar, True, X)


def realtime_symplectic(H: QuadraticHamiltonian, t: float) -> ComplexSymplectic:
    """Real symplectic flow S_t = exp(J H t)."""
    X = H.generator * float(t)
    return ComplexSymplectic(np.asarray(matrix_exponential(X), dtype=float), float(t), H.hbar, False, X)


# --------------------------------------------------------------------------
# functions of S -+ I through the generator
#
# Once |S| is large (low temperature, long times) the matrices S - I and
# S + I are nearly parallel and every formula built from them loses about
# log10 |S|^2 digits. When X = log S is diagonalizable with a reasonably
# conditioned eigenbasis, the same quantities are evaluated as bounded
# scalar functions of the eigenvalues w of X: with z = w/2,
#   (S - I)(S + I)^-1 = tanh(X/2),  S (S - I)^-2 = 1/(4 sinh^2(X/2)),
#   log|det(S -+ I)| = sum log|2 sinh(z)|, resp. log|2 cosh(z)| (tr X = 0).


@dataclass(frozen=True)
class GeneratorEigen:
    values: np.ndarray
    vectors: np.ndarray

    def apply(self, f_values) -> np.ndarray:
        """V diag(f) V^-1."""
        V = self.vectors
        return np.linalg.solve(V.T, (V * f_values).T).T


def generator_eigen(S: ComplexSymplectic) -> Optional[GeneratorEigen]:
    """Eigen-decomposition of log S if the direct S -+ I route would lose digits, else None."""
    if S.generator is None or np.linalg.norm(S.matrix, 2) <= SPECTRAL_ROUTE_NORM:
        return None
    w, V = np.linalg.eig(S.generator)
    if not np.all(np.isfinite(w)) or np.linalg.cond(V) > EIGVEC_COND_LIMIT:
        return None
    return GeneratorEigen(w, V)


def _folded(w):
    """z = w/2 reflected into Re z >= 0, the reflection sign, and e = exp(-2z)."""
    z = 0.5 * np.asarray(w, dtype=complex)
    sgn = np.where(z.real < 0, -1.0, 1.0)
    z = z * sgn
    return z, sgn, np.exp(-2 * z)


def _tanh_half(w):
    z, sgn, e = _folded(w)
    return sgn * (1 - e) / (1 + e), np.abs(1 + e)


def _coth_half(w):
    z, sgn, e = _folded(w)
    return sgn * (1 + e) / (1 - e), np.abs(1 - e)


def log_abs_det_shift(S: ComplexSymplectic, sign: int) -> float:
    """log|det(S + sign I)| for sign = -1 or +1."""
    eig = generator_eigen(S)
    if eig is None:
        _, logabs = np.linalg.slogdet(S.matrix + sign * np.eye(S.matrix.shape[0]))
        return float(logabs)
    z, _, e = _folded(eig.values)
    with np.errstate(divide="ignore"):
        return float(np.sum(z.real + np.log(np.abs(1 + sign * e))))


def sinh_half_inverse_sq(S: ComplexSymplectic) -> np.ndarray:
    """S (S - I)^-2, i.e. 1/(4 sinh^2(X/2))."""
    eig = generator_eigen(S)
    M = S.matrix
    if eig is None:
        A = M - np.eye(M.shape[0])
        return np.linalg.solve(A, np.linalg.solve(A, M))
    z, _, e = _folded(eig.values)
    if np.min(np.abs(1 - e)) < 1.0 / CAYLEY_COND_LIMIT:
        raise DivergenceAtWeyl(f"S - I is singular at parameter {S.beta}", S.beta)
    return eig.apply(e / (1 - e) ** 2)


def cayley_inverse(S: ComplexSymplectic) -> np.ndarray:
    """C^-1 = (S + I)(S - I)^-1 J = coth(X/2) J."""
    M = S.matrix
    I = np.eye(M.shape[0])
    J = symplectic_form(S.n)
    eig = generator_eigen(S)
    if eig is None:
        return (M + I) @ np.linalg.solve(M - I, J)
    vals, denom = _coth_half(eig.values)
    if np.min(denom) < 1.0 / CAYLEY_COND_LIMIT:
        raise DivergenceAtWeyl(f"S - I is singular at parameter {S.beta}", S.beta)
    return eig.apply(vals) @ J


def cayley(S: ComplexSymplectic, cond_limit: float = CAYLEY_COND_LIMIT) -> CayleyMatrix:
    """Cayley matrix C = -J (S - I)(S + I)^-1.

    Raises
    ------
    DivergenceAtWigner
        If S + I is numerically singular.
    """
    M = S.matrix
    I = np.eye(M.shape[0])
    J = symplectic_form(S.n)
    eig = generator_eigen(S)
    if eig is not None:
        vals, denom = _tanh_half(eig.values)
        if np.min(denom) * cond_limit < 1.0:
            raise DivergenceAtWigner(f"S + I is singular at parameter {S.beta}: the Wigner symbol diverges",
                                     beta=S.beta)
        C = -J @ eig.apply(vals)
        C = 0.5 * (C + C.T)
        return CayleyMatrix(1j * C.imag if S.thermal else C)
    P = M + I
    # relative to |S| + 1 rather than |S + I|: at an exact divergence S + I is
    # pure rounding noise, whose own condition number can be small
    sv = np.linalg.svd(P, compute_uv=False)
    rel = sv[-1] / (np.linalg.norm(M, 2) + 1.0)
    if not math.isfinite(rel) or rel * cond_limit < 1.0:
        raise DivergenceAtWigner(
            f"S + I is singular (relative singular value {rel:.3e}) at parameter {S.beta}: "
            "the Wigner symbol diverges", beta=S.beta)
    # (S - I)(S + I)^-1 = ((S + I)^-T (S - I)^T)^T
    X = np.linalg.solve(P.T, (M - I).T).T
    C = -J @ X
    C = 0.5 * (C + C.T)
    if S.thermal:
        C = 1j * C.imag
    return CayleyMatrix(C)


def cayley_from_parts(S: ComplexSymplectic) -> CayleyMatrix:
    """Cross-check route C = i J^T (Re S + I)^-1 Im S (thermal only)."""
    if not S.thermal:
        raise ValidationError("the real/imaginary-part formula applies to thermal matrices")
    M = S.matrix
    I = np.eye(M.shape[0])
    J = symplectic_form(S.n)
    X = np.linalg.solve(M.real + I, M.imag)
    C = 1j * (J.T @ X)
    return CayleyMatrix(0.5 * (C + C.T))


def inverse_cayley(C: CayleyMatrix, thermal: bool = True, beta: float = float("nan")) -> ComplexSymplectic:
    """S = (I + J C)(I - J C)^-1."""
    J = symplectic_form(C.n)
    I = np.eye(2 * C.n)
    A = I - J @ C.matrix
    if np.linalg.cond(A) > CAYLEY_COND_LIMIT:
        raise NumericalFailure("I - J C is singular")
    S = np.linalg.solve(A.T, (I + J @ C.matrix).T).T
    return ComplexSymplectic(S, beta, 1.0, thermal)


def inverse_im_cayley(S: ComplexSymplectic) -> np.ndarray:
    """(Im C)^-1 computed from C^-1 = (S + I)(S - I)^-1 J.

    Valid whenever S - I is invertible, including at wigner divergences.
    """
    R = -cayley_inverse(S).imag
    return 0.5 * (R + R.T)


# --------------------------------------------------------------------------
# divergences


def _phase_resonant(theta: float, period: float, offset: float) -> tuple:
    """Distance of theta to the lattice offset + m*period, relative."""
    m = round((theta - offset) / period)
    d = abs(theta - offset - m * period)
    return m, d / max(1.0, abs(theta))


def mode_classes(H: QuadraticHamiltonian, tol: float = 1e-9) -> HamiltonianClass:
    return classify_generator(H.generator, tol)


def divergence_sides(H: QuadraticHamiltonian, beta: float, realtime: bool = False,
                     classes: Optional[HamiltonianClass] = None,
                     phase_tol: float = DIVERGENCE_PHASE_TOL) -> set:
    """Sides ({'weyl', 'wigner'}) on which the symbols diverge at ``beta``.

    In the thermal case only hyperbolic modes (elliptic after rotation)
    and parabolic modes contribute; in real time the elliptic ones do.
    """
    classes = classes or mode_classes(H)
    sides = set()
    rotating = ELLIPTIC if realtime else HYPERBOLIC
    scale = 1.0 if realtime else H.hbar
    if beta == 0:
        sides.add("weyl")
    for m in classes.modes:
        if m.kind == PARABOLIC:
            sides.add("weyl")
        elif m.kind == rotating:
            theta = scale * m.value * beta
            if _phase_resonant(theta, 2 * math.pi, 0.0)[1] < phase_tol:
                sides.add("weyl")
            if _phase_resonant(theta, 2 * math.pi, math.pi)[1] < phase_tol:
                sides.add("wigner")
    return sides


def nearest_resonance(H: QuadraticHamiltonian, beta: float, realtime: bool = False,
                      classes: Optional[HamiltonianClass] = None) -> float:
    """Smallest relative phase distance of any rotating mode to a resonance."""
    classes = classes or mode_classes(H)
    rotating = ELLIPTIC if realtime else HYPERBOLIC
    scale = 1.0 if realtime else H.hbar
    best = math.inf
    for m in classes.modes:
        if m.kind == rotating:
            theta = scale * m.value * beta
            best = min(best, _phase_resonant(theta, math.pi, 0.0)[1])
    return best


def detect_divergences(H: QuadraticHamiltonian, beta_max: float, realtime: bool = False) -> list:
    """Analytic divergence points in [0, beta_max], sorted.

    Returns
    -------
    list of Divergence
        The beta = 0 weyl endpoint is always listed first. Parabolic
        components add a single ``continuum`` weyl entry.
    """
    beta_max = float(beta_max)
    if not math.isfinite(beta_max) or beta_max <= 0:
        raise ValidationError("beta_max must be positive and finite")
    classes = mode_classes(H)
    out = {(0.0, "weyl"): Divergence(0.0, "weyl")}
    rotating = ELLIPTIC if realtime else HYPERBOLIC
    scale = 1.0 if realtime else H.hbar
    for m in classes.modes:
        if m.kind == PARABOLIC:
            out[(0.0, "weyl-continuum")] = Divergence(0.0, "weyl", continuum=True)
        elif m.kind == rotating:
            rate = scale * m.value
            j = 1
            while True:
                b = j * math.pi / rate
                if b > beta_max * (1 + 1e-15):
                    break
                side = "wigner" if j % 2 else "weyl"
                key = (round(b, 12), side)
                out.setdefault(key, Divergence(b, side))
                j += 1
    return sorted(out.values(), key=lambda d: (d.beta, d.side, d.continuum))


def determinant_zeros(H: QuadraticHamiltonian, beta_max: float, samples: int = 2000,
                      realtime: bool = False) -> list:
    """Cross-check: locate zeros of det(S -+ I) by scanning |det| minima.

    The determinants touch zero without changing sign, so local minima of
    |det| are refined with a bounded scalar minimizer.
    """
    I = np.eye(2 * H.n)

    def det_at(b, sign):
        S = realtime_symplectic(H, b).matrix if realtime else complex_symplectic(H, b, check=False).matrix
        return abs(np.linalg.det(S + sign * I))

    grid = np.linspace(0.0, beta_max, samples + 1)[1:]
    found = []
    for sign, side in ((-1, "weyl"), (1, "wigner")):
        vals = np.array([det_at(b, sign) for b in grid])
        scale = 4.0 ** H.n
        for i in range(1, len(grid) - 1):
            if vals[i] <= vals[i - 1] and vals[i] <= vals[i + 1]:
                res = scipy.optimize.minimize_scalar(lambda b: det_at(b, sign), bounds=(grid[i - 1], grid[i + 1]),
                                                     method="bounded", options={"xatol": 1e-12})
                if res.fun < 1e-8 * scale:
                    found.append(Divergence(float(res.x), side))
    return sorted(found, key=lambda d: (d.beta, d.side))


# --------------------------------------------------------------------------
# Conley-Zehnder indices


def inertia(A, tol: float = 1e-10) -> tuple:
    """(positive, negative, zero) eigenvalue counts of a symmetric form."""
    A = np.asarray(A)
    A = 0.5 * (A + A.T)
    w = np.linalg.eigvalsh(A)
    s = tol * max(1.0, float(np.max(np.abs(w))))
    zero = np.abs(w) <= s
    return int(np.sum(w > s)), int(np.sum(w < -s)), int(np.sum(zero))


def signature(A, tol: float = 1e-10) -> int:
    """Number of positive minus number of negative eigenvalues."""
    pos, neg, zero = inertia(A, tol)
    if zero:
        raise NumericalFailure("quadratic form is singular; signature undefined")
    return pos - neg


def thermal_indices(H: QuadraticHamiltonian, beta: float) -> CZIndexState:
    """Thermal (nu-, nu+) without raising at weyl divergences.

    nu- = 0 by positivity of the partition function (None if the weyl side
    diverges). nu+ = 0 on the full path when Im C < 0, otherwise by
    continuity from beta = 0 up to the first wigner divergence.
    """
    classes = mode_classes(H)
    sides = divergence_sides(H, beta, classes=classes)
    nu_minus = None if "weyl" in sides else 0
    hyper = [m.value for m in classes.modes if m.kind == HYPERBOLIC]
    first_wigner = min((math.pi / (H.hbar * k) for k in hyper), default=math.inf)
    if not hyper:
        # no rotating mode: Im C < 0 (elliptic/loxodromic) or semidefinite (parabolic)
        det = FULL_PATH if PARABOLIC not in classes.kinds else POSITIVITY_ONLY
        return CZIndexState(nu_minus, 0, det, math.inf, beta)
    if "wigner" in sides:
        return CZIndexState(nu_minus, None, UNDETERMINED_BEYOND, first_wigner, beta)
    if beta < first_wigner:
        return CZIndexState(nu_minus, 0, POSITIVITY_ONLY, first_wigner, beta)
    return CZIndexState(nu_minus, None, UNDETERMINED_BEYOND, first_wigner, beta)


def cz_thermal(H: QuadraticHamiltonian, beta: float) -> CZIndexState:
    """Conley-Zehnder indices of the thermal operator at ``beta``.

    Raises
    ------
    DivergenceAtWeyl, DivergenceAtWigner
        If ``beta`` sits on a divergence.
    """
    beta = float(beta)
    if beta < 0:
        raise ValidationError("beta must be non-negative")
    H = H.normalized()
    sides = divergence_sides(H, beta)
    if "weyl" in sides:
        raise DivergenceAtWeyl(f"det(S_beta - I) = 0 at beta = {beta}: the Weyl symbol diverges", beta)
    if "wigner" in sides:
        raise DivergenceAtWigner(f"det(S_beta + I) = 0 at beta = {beta}: the Wigner symbol diverges", beta)
    return thermal_indices(H, beta)


@dataclass(frozen=True)
class _Event:
    t: float
    side: str


def _realtime_events(H: QuadraticHamiltonian, t_max: float, classes: HamiltonianClass) -> list:
    ev = []
    for m in classes.modes:
        if m.kind == ELLIPTIC:
            w = float(m.value)
            j = 1
            while j * math.pi / w <= t_max * (1 + 1e-12):
                ev.append(_Event(j * math.pi / w, "wigner" if j % 2 else "weyl"))
                j += 1
    ev.sort(key=lambda e: e.t)
    merged = []
    for e in ev:
        if merged and abs(e.t - merged[-1].t) <= 1e-9 * max(1.0, e.t):
            if e.side != merged[-1].side:
                raise SimultaneousDivergence(
                    f"both symbols diverge at t = {e.t}", beta=e.t, side="both")
            continue
        merged.append(e)
    return merged


def _realtime_sng(H: QuadraticHamiltonian, t: float) -> int:
    C = cayley(realtime_symplectic(H, t))
    return signature(C.matrix.real)


def cz_realtime(H: QuadraticHamiltonian, t_grid, max_points: int = 2 ** 20) -> list:
    """Track (nu-, nu+) along the real-time path t -> exp(J H t).

    Starts from nu+ = 0 at t = 0+. Across a wigner divergence nu- is
    continuous and nu+ = nu- + Sng(C)/2; across a weyl divergence nu+ is
    continuous and nu- = nu+ - Sng(C)/2 (mod 4). Sng(C) is evaluated at a
    grid point inside each inter-divergence interval; intervals with no grid
    point are filled by halving.

    Returns
    -------
    list of CZIndexState
        One state per input grid point; sides that diverge at a grid point
        are reported as None.
    """
    t = np.asarray(t_grid, dtype=float).ravel()
    if t.size == 0:
        return []
    if t[0] < 0 or np.any(np.diff(t) <= 0):
        raise ValidationError("t_grid must be strictly increasing and start at t >= 0")
    H = H.normalized()
    classes = mode_classes(H)
    parabolic = PARABOLIC in classes.kinds
    events = _realtime_events(H, float(t[-1]), classes)
    bounds = [0.0] + [e.t for e in events] + [math.inf]

    # one interior sample per interval (0, e1), (e1, e2), ...
    pts = sorted(set(t.tolist()))
    samples = []
    total = len(pts)
    for a, b in zip(bounds[:-1], bounds[1:]):
        inside = [x for x in pts if a < x < b and not _near(x, a) and not _near(x, b)]
        if inside:
            samples.append(inside[0])
            continue
        if b == math.inf:
            samples.append(None)
            continue
        # halve the enclosing grid interval until a point falls inside (a, b)
        lo = max([x for x in pts if x <= a] or [0.0])
        hi = min([x for x in pts if x >= b] or [b])
        x = None
        for _ in range(64):
            mid = 0.5 * (lo + hi)
            total += 1
            if total > max_points:
                raise NumericalFailure("cz_realtime grid refinement exceeded the point cap")
            if a < mid < b and not _near(mid, a) and not _near(mid, b):
                x = mid
                break
            if mid <= a:
                lo = mid
            else:
                hi = mid
        if x is None:
            raise NumericalFailure(f"could not place a sample between divergences {a} and {b}")
        samples.append(x)

    # indices per interval
    per_interval = []
    nu_plus = 0
    nu_minus = None if parabolic else (nu_plus - _realtime_sng(H, samples[0]) // 2) % 4
    per_interval.append((nu_minus, nu_plus))
    for k, e in enumerate(events):
        x = samples[k + 1]
        if x is None:
            per_interval.append(per_interval[-1])
            continue
        sng = _realtime_sng(H, x) if not (e.side == "wigner" and nu_minus is None) else None
        if e.side == "wigner":
            nu_plus = None if nu_minus is None else (nu_minus + sng // 2) % 4
        else:
            if nu_plus is not None and not parabolic:
                nu_minus = (nu_plus - _realtime_sng(H, x) // 2) % 4
        per_interval.append((nu_minus, nu_plus))

    out = []
    for x in t:
        k = sum(1 for e in events if e.t < x and not _near(x, e.t))
        nm, np_ = per_interval[k]
        on = [e.side for e in events if _near(x, e.t)]
        if x == 0:
            on.append("weyl")
        if "weyl" in on:
            nm = None
        if "wigner" in on:
            np_ = None
        if np_ is None and nm is None and parabolic:
            det = UNDETERMINED_BEYOND
        else:
            det = FULL_PATH
        end = next((e.t for e in events if e.t > x and not _near(x, e.t)), math.inf)
        out.append(CZIndexState(nm, np_, det, end, float(x)))
    return out


def _near(a: float, b: float) -> bool:
    if math.isinf(a) or math.isinf(b):
        return a == b
    return abs(a - b) <= 1e-9 * max(1.0, abs(a), abs(b))


def warn_if_near(H: QuadraticHamiltonian, beta: float, realtime: bool = False):
    d = nearest_resonance(H, beta, realtime)
    if d < NEAR_DIVERGENCE_PHASE:
        warnings.warn(f"parameter {beta} is within relative phase {d:.2e} of a divergence; "
                      "results are ill-conditioned", NearDivergenceWarning, stacklevel=3)
