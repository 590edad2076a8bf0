"""Partition function and thermodynamics of quadratic Hamiltonians.

All quantities follow from the Wick-rotated matrix S_beta:

    Z = exp(-beta h0) / sqrt|det(S - I)|
    F = -ln Z / beta
    U = h0 - (hbar/4) Tr[H (Im C)^-1]
    C = -(kB/2) hbar^2 beta^2 Tr[(J H)^2 S (S - I)^-2]
    S = kB beta (U - F)
"""
from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.special

from .errors import (
    NumericalFailure,
    ParabolicPartition,
    PartitionDiverges,
    ValidationError,
)
from .hamiltonians import QuadraticHamiltonian, closed_form_partition, fmt_float
from .symplectic import HYPERBOLIC, PARABOLIC, symplectic_form
from .wick import (
    UNDETERMINED_BEYOND,
    complex_symplectic,
    detect_divergences,
    divergence_sides,
    generator_eigen,
    inverse_im_cayley,
    log_abs_det_shift,
    mode_classes,
    sinh_half_inverse_sq,
    thermal_indices,
)

COND_WARN = 1e12
CLOSED_FORM_RTOL = 1e-8


class IllConditionedWarning(UserWarning):
    pass


@dataclass(frozen=True)
class ThermoReport:
    beta: float
    Z: float
    F: float
    U: float
    entropy: float
    C: float
    kB: float = 1.0
    status: str = "ok"

    def as_row(self) -> dict:
        return {"beta": self.beta, "Z": self.Z, "F": self.F, "U": self.U,
                "S": self.entropy, "C": self.C, "status": self.status}


def _check_beta(beta) -> float:
    beta = float(beta)
    if not (beta > 0 and math.isfinite(beta)):
        raise ValidationError(f"beta must be positive and finite, got {beta}")
    return beta


def _require_regular(H: QuadraticHamiltonian, beta: float):
    classes = mode_classes(H)
    if PARABOLIC in classes.kinds:
        raise ParabolicPartition(
            "parabolic component: det(S_beta - I) = 0 for every beta; use truncated_partition "
            "with a phase-space volume", beta)
    if "weyl" in divergence_sides(H, beta, classes=classes):
        divs = [round(d.beta, 12) for d in detect_divergences(H, beta * 1.5) if d.side == "weyl" and d.beta > 0]
        raise PartitionDiverges(
            f"det(S_beta - I) = 0 at beta = {beta}: the partition function diverges "
            f"(weyl-side divergences at beta in {divs})", beta)
    return classes


def log_partition(H: QuadraticHamiltonian, beta: float) -> float:
    """ln Z from the numeric determinant of S_beta - I."""
    beta = _check_beta(beta)
    H = H.normalized()
    _require_regular(H, beta)
    logabs = log_abs_det_shift(complex_symplectic(H, beta), -1)
    if not np.isfinite(logabs):
        raise PartitionDiverges(f"det(S_beta - I) vanished numerically at beta = {beta}", beta)
    return float(-beta * H.h0 - 0.5 * logabs)


def partition_function(H: QuadraticHamiltonian, beta: float, cross_check: bool = True) -> float:
    """Z = exp(-beta h0)/sqrt|det(S_beta - I)| (positive by construction).

    For catalog-built Hamiltonians the result is compared with the per-mode
    closed form and a NumericalFailure is raised on disagreement.
    """
    beta = _check_beta(beta)
    Z = math.exp(log_partition(H, beta))
    if cross_check:
        ref = closed_form_partition(H, beta)
        if ref is not None and abs(Z - ref) > CLOSED_FORM_RTOL * abs(ref):
            raise NumericalFailure(f"numeric Z = {Z!r} disagrees with closed form {ref!r}")
    return Z


def truncated_partition(H: QuadraticHamiltonian, beta: float, volume: float,
                        truncation_side: str = "coordinates") -> float:
    """Volume-regularised PF of a free particle.

    Z = V / ((2 pi hbar^2 beta)^(n/2) sqrt(det M)) for Hessian 0 + M with a
    coordinate volume V, or M + 0 with a momentum volume. The value is not
    invariant under symplectic congruences: the cut-off picks a frame.
    """
    beta = _check_beta(beta)
    if not volume > 0:
        raise ValidationError("volume must be positive")
    n = H.n
    Hq, Hp, X = H.hessian[:n, :n], H.hessian[n:, n:], H.hessian[:n, n:]
    if np.any(X):
        raise ValidationError("truncated_partition needs a block-diagonal 0 + M or M + 0 Hessian")
    if truncation_side == "coordinates":
        if np.any(Hq) or not np.any(Hp):
            raise ValidationError("coordinate truncation needs Hessian 0 + M (kinetic only)")
        M = Hp
    elif truncation_side == "momenta":
        if np.any(Hp) or not np.any(Hq):
            raise ValidationError("momentum truncation needs Hessian M + 0")
        M = Hq
    else:
        raise ValidationError(f"unknown truncation side {truncation_side!r}")
    w = np.linalg.eigvalsh(M)
    if w[0] <= 0:
        raise ValidationError(f"M must be positive definite (eigenvalue {w[0]:.6g})")
    return (math.exp(-beta * H.h0) * volume
            / ((2 * math.pi * H.hbar ** 2 * beta) ** (n / 2) * math.sqrt(float(np.prod(w)))))


def truncated_hyperbolic_partition(beta_bar: float, omega_volume: float, hbar: float = 1.0) -> float:
    """Phase-space-volume truncated PF of kappa q p (one degree of freedom).

    (1/pi) |csc(b/2)| |Shi((2 Omega/hbar) tan(b/2))|. The value is finite at
    b = 2 m pi (it equals 2 Omega/(pi hbar) there) and blows up like
    exp((2 Omega/hbar) |tan(b/2)|) towards b = (2 m + 1) pi, so the cut-off
    moves the singular behaviour rather than removing it.
    """
    shi, _ = scipy.special.shichi(2 * omega_volume / hbar * math.tan(beta_bar / 2))
    return abs(shi) / (math.pi * abs(math.sin(beta_bar / 2)))


def thermo_report(H: QuadraticHamiltonian, beta: float, kB: float = 1.0) -> ThermoReport:
    """All thermodynamic quantities at one inverse temperature."""
    beta = _check_beta(beta)
    H = H.normalized()
    classes = _require_regular(H, beta)
    S = complex_symplectic(H, beta)
    if generator_eigen(S) is None:
        cond = np.linalg.cond(S.matrix - np.eye(2 * H.n))
        if cond > COND_WARN:
            warnings.warn(f"S_beta - I has condition number {cond:.2e} at beta = {beta}",
                          IllConditionedWarning, stacklevel=2)
    lnZ = -beta * H.h0 - 0.5 * log_abs_det_shift(S, -1)
    F = -lnZ / beta
    U = H.h0 - (H.hbar / 4) * float(np.trace(H.hessian @ inverse_im_cayley(S)))
    JH = symplectic_form(H.n) @ H.hessian
    Y = sinh_half_inverse_sq(S)
    c = -0.5 * kB * H.hbar ** 2 * beta ** 2 * np.trace(JH @ JH @ Y)
    if abs(c.imag) > 1e-9 * max(1.0, abs(c.real)):
        raise NumericalFailure(f"heat capacity has imaginary residue {c.imag:.3e}")
    status = "ok"
    if HYPERBOLIC in classes.kinds and thermal_indices(H, beta).determination == UNDETERMINED_BEYOND:
        status = "index-undetermined"
    return ThermoReport(beta, math.exp(lnZ), F, U, kB * beta * (U - F), float(c.real), kB, status)


def heat_capacity(H: QuadraticHamiltonian, beta: float, kB: float = 1.0) -> float:
    return thermo_report(H, beta, kB).C


@dataclass(frozen=True)
class ClassicalLimitExpansion:
    """High-temperature expansion through order beta_bar^2.

    C ~ n kB + (kB/24) hbar^2 beta^2 Tr(JH)^2
    U ~ h0 + n/beta - (hbar^2 beta/24) Tr(JH)^2
    Wigner prefactor ~ 1 + (hbar^2 beta^2/16) Tr(JH)^2
    """

    n: int
    trace_JH_sq: float
    hbar: float = 1.0
    h0: float = 0.0
    kB: float = 1.0

    @property
    def c_coefficient(self) -> float:
        """Coefficient of hbar^2 beta^2 in C / kB."""
        return self.trace_JH_sq / 24.0

    @property
    def u_coefficient(self) -> float:
        """Coefficient of hbar^2 beta in U."""
        return -self.trace_JH_sq / 24.0

    def heat_capacity(self, beta):
        return self.kB * (self.n + self.c_coefficient * (self.hbar * beta) ** 2)

    def internal_energy(self, beta):
        return self.h0 + self.n / beta + self.u_coefficient * self.hbar ** 2 * beta

    def wigner_prefactor(self, beta):
        return 1.0 + (self.hbar * beta) ** 2 * self.trace_JH_sq / 16.0


def classical_limit(H: QuadraticHamiltonian, kB: float = 1.0) -> ClassicalLimitExpansion:
    if not np.any(H.hessian):
        raise ValidationError("classical limit needs a nonzero Hessian")
    JH = H.generator
    return ClassicalLimitExpansion(H.n, float(np.trace(JH @ JH)), H.hbar, H.h0, kB)


# --------------------------------------------------------------------------
# scans

SCAN_COLUMNS = ("beta", "Z", "F", "U", "S", "C", "status")


def default_workers() -> int:
    raw = os.environ.get("WICKPHASE_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ValidationError(f"WICKPHASE_THREADS must be an integer, got {raw!r}") from None


@dataclass
class ScanResult:
    rows: list
    notches: list = field(default_factory=list)
    columns: tuple = SCAN_COLUMNS
    meta: dict = field(default_factory=dict)

    def column(self, name) -> np.ndarray:
        return np.array([r[name] for r in self.rows], dtype=float)

    def to_csv(self) -> str:
        lines = [",".join(self.columns)]
        for r in self.rows:
            lines.append(",".join(_cell(r[c]) for c in self.columns))
        return "\n".join(lines) + "\n"

    def to_json_obj(self) -> dict:
        return {
            "columns": list(self.columns),
            "rows": [{c: _json_cell(r[c]) for c in self.columns} for r in self.rows],
            "notches": [{k: fmt_float(v) for k, v in nt.items()} for nt in self.notches],
            "meta": self.meta,
        }


def _cell(v) -> str:
    if isinstance(v, str):
        return v
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return fmt_float(v)


def _json_cell(v):
    if isinstance(v, str):
        return v
    v = float(v)
    return _cell(v) if not math.isfinite(v) else fmt_float(v)


def notch_grid(H: QuadraticHamiltonian, betas: Sequence[float], notch: float = 1e-6):
    """Move grid points off analytic weyl divergences by +-notch.

    Returns
    -------
    (betas, notched_flags, notches)
    """
    b = np.asarray(betas, dtype=float)
    if b.ndim != 1 or b.size == 0:
        raise ValidationError("beta grid must be a non-empty 1-d sequence")
    if np.any(b <= 0) or np.any(np.diff(b) <= 0) or not np.all(np.isfinite(b)):
        raise ValidationError("beta grid must be positive, finite and strictly increasing")
    crit = [d.beta for d in detect_divergences(H.normalized(), float(b[-1]) + 2 * notch)
            if d.side == "weyl" and d.beta > 0 and not d.continuum]
    out, flags, notches = [], [], []
    for x in b:
        moved = x
        for c in crit:
            if abs(x - c) < notch:
                moved = c - notch if x <= c else c + notch
                notches.append({"original": float(x), "notched": float(moved), "divergence": float(c)})
                break
        if out and moved <= out[-1]:
            continue
        out.append(float(moved))
        flags.append(moved != x)
    return out, flags, notches


def _scan_row(H, beta, kB, notched, truncation):
    row = {"beta": beta}
    try:
        rep = thermo_report(H, beta, kB)
        row.update(rep.as_row())
        status = [] if rep.status == "ok" else [rep.status]
    except ParabolicPartition:
        row.update({k: math.nan for k in ("Z", "F", "U", "S", "C")})
        status = ["parabolic"]
    except PartitionDiverges:
        row.update({k: math.nan for k in ("Z", "F", "U", "S", "C")})
        status = ["divergent:weyl"]
    if notched:
        status.insert(0, "notched")
    row["status"] = ";".join(status) if status else "ok"
    if truncation is not None:
        kappa, omega_vol = truncation
        try:
            row["Z_trunc"] = truncated_hyperbolic_partition(H.hbar * kappa * beta, omega_vol, H.hbar)
        except (ValueError, ZeroDivisionError):
            row["Z_trunc"] = math.nan
    return row


def beta_scan(H: QuadraticHamiltonian, betas: Sequence[float], kB: float = 1.0, notch: float = 1e-6,
              truncation_volume: Optional[float] = None, workers: Optional[int] = None) -> ScanResult:
    """Thermodynamic table over a beta grid with per-row status.

    Parameters
    ----------
    truncation_volume : float, optional
        For one-degree-of-freedom hyperbolic Hamiltonians, also report the
        phase-space-volume truncated PF in a ``Z_trunc`` column.
    workers : int, optional
        Thread count; defaults to the WICKPHASE_THREADS environment value.
    """
    H = H.normalized()
    grid, flags, notches = notch_grid(H, betas, notch)
    truncation = None
    columns = SCAN_COLUMNS
    if truncation_volume is not None:
        cls = mode_classes(H)
        if H.n != 1 or cls.kinds != {HYPERBOLIC}:
            raise ValidationError("the truncated hyperbolic PF needs a one-degree-of-freedom hyperbolic system")
        truncation = (float(cls.modes[0].value), float(truncation_volume))
        columns = SCAN_COLUMNS + ("Z_trunc",)
    workers = workers or default_workers()
    args = list(zip(grid, flags))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda a: _scan_row(H, a[0], kB, a[1], truncation), args))
    else:
        rows = [_scan_row(H, b, kB, f, truncation) for b, f in args]
    return ScanResult(rows, notches, columns, {"kB": fmt_float(kB), "hbar": fmt_float(H.hbar),
                                               "notch": fmt_float(notch)})


def figure_data(name: str, points: int = 2000) -> dict:
    """Plot data for the hyperbolic and loxodromic thermodynamics figures.

    ``"hyperbolic"``: kappa q p with hbar = kappa = 1 over beta_bar in (0, 8 pi).
    ``"loxodromic"``: panels (hbar omega, hbar kappa) = (1, 4), (1, 1), (0.2, 1).
    """
    from .hamiltonians import catalog
    if name == "hyperbolic":
        betas = np.linspace(8 * math.pi / points, 8 * math.pi, points)
        return {"hyperbolic_1d": beta_scan(catalog("hyperbolic_1d", {"kappa": 1.0}), betas)}
    if name == "loxodromic":
        out = {}
        for w, k in ((1.0, 4.0), (1.0, 1.0), (0.2, 1.0)):
            betas = np.linspace(10.0 / points, 10.0, points)
            out[f"omega={w:g},kappa={k:g}"] = beta_scan(catalog("loxodromic_2d", {"omega": w, "kappa": k}), betas)
        return out
    raise ValidationError(f"unknown figure {name!r}; expected 'hyperbolic' or 'loxodromic'")
