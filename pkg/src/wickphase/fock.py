"""Brute-force oracle in a truncated number basis.

Independent of the Gaussian closed forms: Hamiltonians are quantized with
symmetric ordering, traces come from dense diagonalization, and Wigner
samples from displaced parity operators built by exponentiating the
truncated displacement generator.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.sparse
import scipy.sparse.linalg

from .errors import NotConverged, ValidationError
from .hamiltonians import QuadraticHamiltonian

MIN_CUTOFF = 16
TWO_MODE_CAP = 64


def ladder(N: int) -> np.ndarray:
    """Annihilation operator a in the basis |0>..|N-1>."""
    return np.diag(np.sqrt(np.arange(1, N, dtype=float)), 1)


def quadratures(N: int, hbar: float = 1.0):
    """q = sqrt(hbar/2)(a + a+), p = i sqrt(hbar/2)(a+ - a), truncated to N."""
    a = ladder(N)
    s = math.sqrt(hbar / 2)
    return s * (a + a.T), 1j * s * (a.T - a)


@dataclass(frozen=True, eq=False)
class FockOperator:
    hamiltonian: QuadraticHamiltonian
    cutoff: int
    matrix: np.ndarray

    @property
    def n(self) -> int:
        return self.hamiltonian.n


def _mode_ops(n, N, hbar):
    """Position/momentum operators and same-mode products, embedded in n modes.

    Same-mode products are formed at N + 2 and cropped so that the top
    levels are not corrupted by truncation of the intermediate sum. All
    operators are banded, so they are kept sparse until the final sum.
    """
    qb, pb = (scipy.sparse.csr_matrix(m) for m in quadratures(N + 2, hbar))
    single = {"q": qb, "p": pb}
    eye = scipy.sparse.identity(N, format="csr")

    def crop(m):
        return m[:N, :N]

    def embed(op, mode):
        if n == 1:
            return op
        return scipy.sparse.kron(op, eye, "csr") if mode == 0 else scipy.sparse.kron(eye, op, "csr")

    lin = []
    for kind in ("q", "p"):
        for m in range(n):
            lin.append((kind, m))

    def product(i, j):
        (ki, mi), (kj, mj) = lin[i], lin[j]
        if mi == mj:
            return embed(crop(single[ki] @ single[kj]), mi)
        return embed(crop(single[ki]), mi) @ embed(crop(single[kj]), mj)

    ops = [embed(crop(single[k]), m) for k, m in lin]
    return ops, product


def quantize(H: QuadraticHamiltonian, cutoff: int) -> FockOperator:
    """Symmetrically ordered quantization in a truncated number basis.

    H^ = 1/2 sum_ij H_ij (x_i x_j + x_j x_i)/2 - x.(H eta - J-term) + const.
    """
    n = H.n
    if n > 2:
        raise ValidationError("the Fock oracle supports one or two degrees of freedom")
    cutoff = int(cutoff)
    if cutoff < MIN_CUTOFF:
        raise ValidationError(f"cutoff must be at least {MIN_CUTOFF}")
    if n == 2 and cutoff > TWO_MODE_CAP:
        raise ValidationError(f"two-mode cutoff is capped at {TWO_MODE_CAP} per mode")
    hb = H.hbar
    ops, product = _mode_ops(n, cutoff, hb)
    dim = cutoff ** n
    M = scipy.sparse.csr_matrix((dim, dim), dtype=complex)
    Hs = H.hessian
    for i in range(2 * n):
        for j in range(2 * n):
            if Hs[i, j]:
                xixj = product(i, j)
                xjxi = product(j, i)
                M += 0.25 * Hs[i, j] * (xixj + xjxi)
    # linear part of 1/2 (x-eta).H(x-eta) + x ^ zeta: gradient -(H eta + J zeta)
    J = np.block([[np.zeros((n, n)), np.eye(n)], [-np.eye(n), np.zeros((n, n))]])
    g = -(Hs @ H.eta) - J @ H.linear
    for i in range(2 * n):
        if g[i]:
            M += g[i] * ops[i]
    const = 0.5 * H.eta @ Hs @ H.eta + H.h0
    M = M.toarray() + const * np.eye(dim)
    M = 0.5 * (M + M.conj().T)
    return FockOperator(H, cutoff, M)


class TraceResult(NamedTuple):
    value: float
    converged: bool


def _spectrum(op: FockOperator):
    return np.linalg.eigh(op.matrix)


def _trace_from(evals, beta):
    x = -beta * evals
    m = np.max(x)
    return float(math.exp(m) * np.sum(np.exp(x - m)))


def _top_occupancy(op: FockOperator, beta: float, evals=None, evecs=None) -> float:
    """Thermal weight carried by the top eighth of number levels (per mode)."""
    if evecs is None:
        evals, evecs = _spectrum(op)
    w = np.exp(-beta * (evals - evals.min()))
    w /= w.sum()
    N = op.cutoff
    pops = (np.abs(evecs) ** 2) @ w
    top = N - max(1, N // 8)
    if op.n == 1:
        return float(pops[top:].sum())
    P = pops.reshape(N, N)
    return float(max(P[top:, :].sum(), P[:, top:].sum()))


def thermal_trace(op: FockOperator, beta: float, rtol: float = 1e-8, occupancy_tol: float = 1e-12) -> TraceResult:
    """Tr exp(-beta H^) with a convergence verdict.

    One mode: compare with cutoff 2N. Two modes: compare with N/2 (the
    doubled space is too large for dense diagonalization). Either way the
    top eighth of levels must carry < ``occupancy_tol`` of the weight.
    Spectra unbounded below at the truncated level (hyperbolic, parabolic)
    generally fail these checks and report ``converged = False``.
    """
    beta = float(beta)
    if not beta > 0:
        raise ValidationError("beta must be positive")
    evals, evecs = _spectrum(op)
    Z = _trace_from(evals, beta)
    if op.n == 1:
        other = quantize(op.hamiltonian, 2 * op.cutoff)
    else:
        other = quantize(op.hamiltonian, max(MIN_CUTOFF, op.cutoff // 2))
    Z2 = _trace_from(np.linalg.eigvalsh(other.matrix), beta)
    ok = math.isfinite(Z) and math.isfinite(Z2) and abs(Z - Z2) <= rtol * abs(Z)
    if ok:
        ok = _top_occupancy(op, beta, evals, evecs) < occupancy_tol
    return TraceResult(Z, bool(ok))


class ThermalState:
    """Normalized exp(-beta H^)/Z in the truncated basis, kept as an eigen-ensemble."""

    def __init__(self, op: FockOperator, beta: float, weight_cut: float = 1e-16, check: bool = True):
        if check:
            res = thermal_trace(op, beta)
            if not res.converged:
                raise NotConverged("thermal state is not converged at this cutoff; "
                                   "the oracle only samples bounded-below (elliptic) systems")
        self.op = op
        self.beta = float(beta)
        evals, evecs = _spectrum(op)
        w = np.exp(-beta * (evals - evals.min()))
        w /= w.sum()
        keep = w > weight_cut
        self.weights = w[keep]
        self.vectors = evecs[:, keep]
        n = op.n
        N = op.cutoff
        hb = op.hamiltonian.hbar
        q1, p1 = quadratures(N, hb)
        eye = scipy.sparse.identity(N, format="csr")
        qs = [scipy.sparse.csr_matrix(q1)]
        ps = [scipy.sparse.csr_matrix(p1)]
        if n == 2:
            qs = [scipy.sparse.kron(qs[0], eye, "csr"), scipy.sparse.kron(eye, qs[0], "csr")]
            ps = [scipy.sparse.kron(ps[0], eye, "csr"), scipy.sparse.kron(eye, ps[0], "csr")]
        self._q, self._p = qs, ps
        par = np.array([(-1) ** k for k in range(N)], dtype=float)
        if n == 2:
            par = np.kron(par, par)
        self._parity = par

    def _generator(self, xi):
        """G with T_xi = exp(-(i/hbar) G), G = (J x^).xi = sum p_k xi_qk - q_k xi_pk."""
        n = self.op.n
        xi = np.asarray(xi, dtype=float)
        G = None
        for k in range(n):
            term = self._p[k] * xi[k] - self._q[k] * xi[n + k]
            G = term if G is None else G + term
        return G

    def _shifted(self, x):
        """T_x^+ |v_k> for all kept eigenvectors."""
        hb = self.op.hamiltonian.hbar
        G = self._generator(x)
        return scipy.sparse.linalg.expm_multiply((1j / hb) * G, self.vectors)

    def wigner(self, x) -> float:
        """W(x) = (pi hbar)^-n Tr[rho T_x R_0 T_x^+]."""
        V = self._shifted(x)
        vals = np.einsum("ik,i,ik->k", V.conj(), self._parity, V).real
        return float(self.weights @ vals) / (math.pi * self.op.hamiltonian.hbar) ** self.op.n

    def characteristic(self, xi) -> complex:
        """chi(xi) = (2 pi hbar)^-n Tr[rho T_xi^+]."""
        hb = self.op.hamiltonian.hbar
        G = self._generator(xi)
        V = scipy.sparse.linalg.expm_multiply((1j / hb) * G, self.vectors)
        vals = np.einsum("ik,ik->k", self.vectors.conj(), V)
        return complex(self.weights @ vals) / (2 * math.pi * hb) ** self.op.n


def wigner_sample(op: FockOperator, beta: float, x) -> float:
    """Wigner function of the thermal state at one phase-space point."""
    return ThermalState(op, beta).wigner(x)


def characteristic_sample(op: FockOperator, beta: float, xi) -> complex:
    return ThermalState(op, beta).characteristic(xi)
