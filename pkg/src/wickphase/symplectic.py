"""Symplectic linear algebra: the form J, membership tests, exponentials,
generator classification and Williamson normal forms.

Phase-space vectors are ordered x = (q_1..q_n, p_1..p_n) and the wedge
product is x ^ y = (J x) . y with J = [[0, I], [-I, 0]].
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

from .errors import (
    AmbiguousClassification,
    NotPositiveDefinite,
    NumericalFailure,
    ValidationError,
)

PARABOLIC = "parabolic"
HYPERBOLIC = "hyperbolic"
ELLIPTIC = "elliptic"
LOXODROMIC = "loxodromic"

# category interchange under t -> -i hbar beta
WICK_IMAGE = {
    PARABOLIC: PARABOLIC,
    HYPERBOLIC: ELLIPTIC,
    ELLIPTIC: HYPERBOLIC,
    LOXODROMIC: LOXODROMIC,
}


def symplectic_form(n: int) -> np.ndarray:
    """Canonical symplectic form J = [[0, I], [-I, 0]] of size 2n.

    Parameters
    ----------
    n : int
        Number of degrees of freedom, at least 1.

    Returns
    -------
    numpy.ndarray
        Read-only float array of shape (2n, 2n).
    """
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise ValidationError(f"degrees of freedom must be a positive integer, got {n!r}")
    n = int(n)
    J = np.zeros((2 * n, 2 * n))
    J[:n, n:] = np.eye(n)
    J[n:, :n] = -np.eye(n)
    J.flags.writeable = False
    return J


def _square_even(M, name="matrix") -> np.ndarray:
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValidationError(f"{name} must be square, got shape {M.shape}")
    if M.shape[0] % 2:
        raise ValidationError(f"{name} must have even dimension, got {M.shape[0]}")
    if M.shape[0] == 0:
        raise ValidationError(f"{name} is empty")
    return M


def symplectic_defect(M) -> float:
    """Max-norm of M^T J M - J (plain transpose, also for complex M)."""
    M = _square_even(M)
    J = symplectic_form(M.shape[0] // 2)
    return float(np.max(np.abs(M.T @ J @ M - J)))


def is_symplectic(M, tol: float = 1e-10) -> bool:
    """True iff ||M^T J M - J||_max <= tol."""
    if tol < 0:
        raise ValidationError("tolerance must be non-negative")
    return symplectic_defect(M) <= tol


def matrix_exponential(A) -> np.ndarray:
    """Matrix exponential of a square matrix (real or complex).

    exp(0) is returned as the identity exactly. Non-finite input is rejected.
    """
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValidationError(f"matrix must be square, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValidationError("matrix exponential of non-finite entries")
    if not np.any(A):
        return np.eye(A.shape[0], dtype=A.dtype if np.iscomplexobj(A) else float)
    return scipy.linalg.expm(A)


def random_symplectic(n: int, rng: np.random.Generator, scale: float = 0.5) -> np.ndarray:
    """Random real symplectic matrix exp(J K) with K symmetric Gaussian.

    ``scale`` sets the standard deviation of the entries of K, so the
    squeezing stays moderate for the default.
    """
    G = rng.normal(scale=scale, size=(2 * n, 2 * n))
    K = 0.5 * (G + G.T)
    return matrix_exponential(symplectic_form(n) @ K)


def random_hessian(n: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    G = rng.normal(scale=scale, size=(2 * n, 2 * n))
    return 0.5 * (G + G.T)


# --------------------------------------------------------------------------
# classification


@dataclass(frozen=True)
class Mode:
    """One eigenvalue group of a Hamiltonian matrix.

    ``value`` is 0 for parabolic, the rate k > 0 for hyperbolic, the
    frequency w > 0 for elliptic and gamma with Re, Im > 0 for loxodromic.
    ``multiplicity`` counts pairs (quartets for loxodromic).
    """

    kind: str
    value: complex
    multiplicity: int = 1

    @property
    def eigenvalue_count(self) -> int:
        return (4 if self.kind == LOXODROMIC else 2) * self.multiplicity


@dataclass(frozen=True)
class HamiltonianClass:
    modes: tuple

    @property
    def kinds(self) -> set:
        return {m.kind for m in self.modes}

    def count(self, kind: str) -> int:
        return sum(m.multiplicity for m in self.modes if m.kind == kind)

    @property
    def n(self) -> int:
        return sum(m.eigenvalue_count for m in self.modes) // 2

    def wick_rotated(self) -> "HamiltonianClass":
        """Categories after t -> -i hbar beta (H and E swap)."""
        return HamiltonianClass(tuple(Mode(WICK_IMAGE[m.kind], m.value, m.multiplicity)
                                      for m in self.modes))

    def __str__(self):
        parts = []
        for m in self.modes:
            mult = f" x{m.multiplicity}" if m.multiplicity > 1 else ""
            if m.kind == PARABOLIC:
                parts.append(f"Parabolic{mult}")
            elif m.kind == LOXODROMIC:
                parts.append(f"Loxodromic({m.value.real:.6g}+{m.value.imag:.6g}i){mult}")
            else:
                parts.append(f"{m.kind.capitalize()}({m.value.real:.6g}){mult}")
        return ", ".join(parts)


def hamiltonian_defect(JH) -> float:
    """Asymmetry of -J JH relative to the matrix scale."""
    JH = _square_even(np.asarray(JH, dtype=float), "generator")
    J = symplectic_form(JH.shape[0] // 2)
    Hs = J.T @ JH
    return float(np.max(np.abs(Hs - Hs.T)) / max(1.0, np.max(np.abs(JH))))


def _cluster(values: np.ndarray, radius: float):
    """Single-linkage clustering of complex numbers; returns list of index lists."""
    m = len(values)
    parent = list(range(m))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(m):
        for j in range(i + 1, m):
            if abs(values[i] - values[j]) <= radius:
                parent[find(i)] = find(j)
    groups = {}
    for i in range(m):
        groups.setdefault(find(i), []).append(i)
    return list(groups.values())


def _part_kind(part: float, scale: float, tol: float, band: float) -> Optional[bool]:
    """True if ``part`` is negligible, False if clearly present, else None."""
    if part < tol * scale:
        return True
    if part <= band * tol * scale:
        return None
    return False


def classify_generator(JH, tol: float = 1e-9, cluster_tol: float = 1e-5,
                       ambiguity_factor: float = 1e3) -> HamiltonianClass:
    """Group the spectrum of a Hamiltonian matrix into P/H/E/L modes.

    Parameters
    ----------
    JH : array_like
        Real 2n x 2n Hamiltonian matrix (J times a symmetric matrix).
    tol : float
        A real/imaginary part counts as zero when it is below
        ``tol * max(1, |lambda|)``.
    cluster_tol : float
        Relative radius used to merge eigenvalues split by defective
        (Jordan) structure before categorising.
    ambiguity_factor : float
        Parts between ``tol`` and ``ambiguity_factor * tol`` (scaled) raise
        :class:`AmbiguousClassification`.

    Returns
    -------
    HamiltonianClass
    """
    JH = _square_even(np.asarray(JH), "generator")
    if np.iscomplexobj(JH):
        if np.max(np.abs(JH.imag)) > tol:
            raise ValidationError("generator must be real")
        JH = JH.real
    JH = np.asarray(JH, dtype=float)
    if not np.all(np.isfinite(JH)):
        raise ValidationError("generator has non-finite entries")
    if hamiltonian_defect(JH) > max(tol, 1e-12) * 10:
        raise ValidationError("matrix is not Hamiltonian: -J @ JH is not symmetric")
    scale = max(1.0, float(np.max(np.abs(JH))))
    lam = np.linalg.eigvals(JH)
    groups = _cluster(lam, cluster_tol * scale)

    null_count = 0
    real, imag, cplx = {}, {}, {}
    for g in groups:
        mu = complex(np.mean(lam[g]))
        size = len(g)
        s = max(1.0, abs(mu))
        is_null = _part_kind(abs(mu), 1.0, tol, ambiguity_factor)
        if is_null is None:
            raise AmbiguousClassification(f"eigenvalue {mu:.3e} is neither clearly null nor clearly nonzero")
        if is_null:
            null_count += size
            continue
        re_zero = _part_kind(abs(mu.real), s, tol, ambiguity_factor)
        im_zero = _part_kind(abs(mu.imag), s, tol, ambiguity_factor)
        if re_zero is None or im_zero is None:
            raise AmbiguousClassification(
                f"eigenvalue {mu:.6g} lies within tolerance of a category boundary")
        if im_zero:
            if mu.real > 0:
                real[mu.real] = real.get(mu.real, 0) + size
        elif re_zero:
            if mu.imag > 0:
                imag[mu.imag] = imag.get(mu.imag, 0) + size
        elif mu.real > 0 and mu.imag > 0:
            cplx[mu] = cplx.get(mu, 0) + size

    modes = []
    if null_count:
        if null_count % 2:
            raise NumericalFailure("odd number of null eigenvalues")
        modes.append(Mode(PARABOLIC, 0.0, null_count // 2))
    for k in sorted(real):
        modes.append(Mode(HYPERBOLIC, float(k), real[k]))
    for w in sorted(imag):
        modes.append(Mode(ELLIPTIC, float(w), imag[w]))
    for g in sorted(cplx, key=lambda z: (z.real, z.imag)):
        modes.append(Mode(LOXODROMIC, g, cplx[g]))
    result = HamiltonianClass(tuple(modes))
    if 2 * result.n != JH.shape[0]:
        raise NumericalFailure(
            f"eigenvalues of the generator do not pair up: found {2 * result.n} of {JH.shape[0]}")
    return result


# --------------------------------------------------------------------------
# Williamson normal form


@dataclass(frozen=True)
class WilliamsonDecomposition:
    """S^T M S = diag(mu, mu) with S symplectic and mu sorted descending."""

    symplectic_basis: np.ndarray
    symplectic_spectrum: np.ndarray


def williamson(M, tol: float = 1e-12) -> WilliamsonDecomposition:
    """Williamson normal form of a symmetric positive-definite matrix.

    Uses K = M^(1/2) and the antisymmetric matrix B = K J K, whose
    eigenvalues are +-i mu_j. An orthogonal O bringing B to
    [[0, L], [-L, 0]] gives S = K^-1 O (L + L)^(1/2).
    """
    M = _square_even(np.asarray(M, dtype=float))
    if not np.all(np.isfinite(M)):
        raise ValidationError("matrix has non-finite entries")
    if np.max(np.abs(M - M.T)) > 1e-12 * max(1.0, np.max(np.abs(M))):
        raise ValidationError("matrix is not symmetric")
    M = 0.5 * (M + M.T)
    n = M.shape[0] // 2
    w, V = np.linalg.eigh(M)
    if w[0] <= tol * max(1.0, w[-1]):
        raise NotPositiveDefinite(f"matrix is not positive definite (eigenvalue {w[0]:.6g})", float(w[0]))
    K = (V * np.sqrt(w)) @ V.T
    Kinv = (V / np.sqrt(w)) @ V.T
    B = K @ symplectic_form(n) @ K
    B = 0.5 * (B - B.T)
    ev, U = np.linalg.eigh(1j * B)
    # eigenvalue -mu of iB means B v = i mu v
    idx = np.argsort(ev)[:n]
    mu = -ev[idx]
    order = np.argsort(-mu, kind="stable")
    idx, mu = idx[order], mu[order]
    vecs = U[:, idx]
    Q = np.sqrt(2.0) * vecs.real
    P = np.sqrt(2.0) * vecs.imag
    O = np.hstack([Q, P])
    d = np.concatenate([np.sqrt(mu), np.sqrt(mu)])
    S = Kinv @ O * d
    return WilliamsonDecomposition(S, np.asarray(mu, dtype=float))
