"""Quadratic Hamiltonians, the catalog of normal forms, congruences and
JSON (de)serialization.

A quadratic Hamiltonian is stored as

    H_cl(x) = 1/2 (x - eta) . H (x - eta) + x ^ zeta + h0

where ``eta`` is the fixed point (displacement) and ``zeta`` an optional
extra translation term that cannot always be absorbed into ``eta``.
Hessian entries are frequencies; coordinates carry sqrt(action).
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional

import numpy as np

from .errors import UnsupportedLinear, ValidationError
from .symplectic import (
    ELLIPTIC,
    HYPERBOLIC,
    LOXODROMIC,
    PARABOLIC,
    is_symplectic,
    symplectic_form,
)

SYMMETRY_TOL = 1e-12
PARSE_SYMMETRY_TOL = 1e-9


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class QuadraticHamiltonian:
    """Immutable quadratic Hamiltonian.

    Parameters
    ----------
    hessian : array_like
        Real symmetric 2n x 2n matrix H.
    eta : array_like, optional
        Fixed-point displacement (default 0).
    h0 : float
        Constant energy.
    hbar : float
        Reduced Planck constant, positive.
    linear : array_like, optional
        Extra wedge coefficient zeta of an x ^ zeta term (default 0).
    source : tuple, optional
        ``(catalog_name, params)`` when built from the catalog; enables
        closed-form cross-checks. Not part of equality.
    """

    hessian: np.ndarray
    eta: Optional[np.ndarray] = None
    h0: float = 0.0
    hbar: float = 1.0
    linear: Optional[np.ndarray] = None
    source: Optional[tuple] = field(default=None, compare=False)

    def __post_init__(self):
        H = np.array(self.hessian, dtype=float)
        if H.ndim != 2 or H.shape[0] != H.shape[1] or H.shape[0] % 2 or H.shape[0] == 0:
            raise ValidationError(f"hessian must be 2n x 2n, got shape {H.shape}")
        if not np.all(np.isfinite(H)):
            raise ValidationError("hessian has non-finite entries")
        asym = np.max(np.abs(H - H.T))
        if asym > SYMMETRY_TOL * max(1.0, np.max(np.abs(H))):
            raise ValidationError(f"hessian is not symmetric (asymmetry {asym:.3e})")
        dim = H.shape[0]
        eta = np.zeros(dim) if self.eta is None else np.array(self.eta, dtype=float).reshape(-1)
        lin = np.zeros(dim) if self.linear is None else np.array(self.linear, dtype=float).reshape(-1)
        for name, v in (("eta", eta), ("linear", lin)):
            if v.shape != (dim,):
                raise ValidationError(f"{name} must have length {dim}, got {v.shape[0]}")
            if not np.all(np.isfinite(v)):
                raise ValidationError(f"{name} has non-finite entries")
        h0 = float(self.h0)
        hbar = float(self.hbar)
        if not math.isfinite(h0):
            raise ValidationError("h0 must be finite")
        if not (math.isfinite(hbar) and hbar > 0):
            raise ValidationError("hbar must be positive and finite")
        object.__setattr__(self, "hessian", _frozen(H))
        object.__setattr__(self, "eta", _frozen(eta))
        object.__setattr__(self, "linear", _frozen(lin))
        object.__setattr__(self, "h0", h0)
        object.__setattr__(self, "hbar", hbar)

    @property
    def n(self) -> int:
        return self.hessian.shape[0] // 2

    @property
    def generator(self) -> np.ndarray:
        """Hamiltonian matrix J H."""
        return symplectic_form(self.n) @ self.hessian

    @property
    def wedge_coefficient(self) -> np.ndarray:
        """Coefficient eta' of the linear term x ^ eta' after expanding."""
        return symplectic_form(self.n) @ self.hessian @ self.eta + self.linear

    @property
    def has_translation(self) -> bool:
        return bool(np.any(self.linear))

    @property
    def is_pure_linear(self) -> bool:
        return not np.any(self.hessian) and self.has_translation

    def classical(self, x) -> np.ndarray:
        """Evaluate H_cl at points ``x`` of shape (..., 2n)."""
        x = np.asarray(x, dtype=float)
        d = x - self.eta
        J = symplectic_form(self.n)
        quad = 0.5 * np.einsum("...i,ij,...j->...", d, self.hessian, d)
        return quad + (x @ J.T) @ self.linear + self.h0

    def normalized(self) -> "QuadraticHamiltonian":
        """Absorb the translation term into the fixed point.

        Raises
        ------
        UnsupportedLinear
            If the translation is not in the range of the Hessian (for
            example a pure linear Hamiltonian).
        """
        if not self.has_translation:
            return self
        J = symplectic_form(self.n)
        # x ^ zeta = -x . J zeta, so the gradient term is -(H eta + J zeta)
        rhs = self.hessian @ self.eta + J @ self.linear
        sol, *_ = np.linalg.lstsq(self.hessian, rhs, rcond=None)
        if np.max(np.abs(self.hessian @ sol - rhs)) > 1e-10 * max(1.0, np.max(np.abs(rhs))):
            raise UnsupportedLinear(
                "the linear term is not reachable as a fixed-point shift; a pure translation "
                "has a Dirac-delta symbol and no thermal state")
        h0 = self.h0 + 0.5 * self.eta @ self.hessian @ self.eta - 0.5 * sol @ self.hessian @ sol
        return QuadraticHamiltonian(self.hessian, sol, h0, self.hbar)

    def with_hbar(self, hbar: float) -> "QuadraticHamiltonian":
        return QuadraticHamiltonian(self.hessian, self.eta, self.h0, hbar, self.linear, self.source)

    def __eq__(self, other):
        if not isinstance(other, QuadraticHamiltonian):
            return NotImplemented
        return (self.hessian.shape == other.hessian.shape
                and np.array_equal(self.hessian, other.hessian)
                and np.array_equal(self.eta, other.eta)
                and np.array_equal(self.linear, other.linear)
                and self.h0 == other.h0 and self.hbar == other.hbar)

    def __hash__(self):
        return hash((self.hessian.tobytes(), self.eta.tobytes(), self.linear.tobytes(), self.h0, self.hbar))


def direct_sum(a: QuadraticHamiltonian, b: QuadraticHamiltonian) -> QuadraticHamiltonian:
    """Non-interacting union of two systems (same hbar)."""
    if a.hbar != b.hbar:
        raise ValidationError("direct sum needs equal hbar")
    na, nb = a.n, b.n
    n = na + nb
    idx_a = np.r_[0:na, n:n + na]
    idx_b = np.r_[na:n, n + na:2 * n]
    H = np.zeros((2 * n, 2 * n))
    H[np.ix_(idx_a, idx_a)] = a.hessian
    H[np.ix_(idx_b, idx_b)] = b.hessian
    eta = np.zeros(2 * n)
    eta[idx_a], eta[idx_b] = a.eta, b.eta
    lin = np.zeros(2 * n)
    lin[idx_a], lin[idx_b] = a.linear, b.linear
    return QuadraticHamiltonian(H, eta, a.h0 + b.h0, a.hbar, lin)


def apply_congruence(H: QuadraticHamiltonian, Q, zeta=None) -> QuadraticHamiltonian:
    """Transform by the affine symplectic change x = Q (x' + zeta).

    hessian' = Q^T H Q, eta' = Q^-1 eta - zeta, h0 unchanged.
    """
    Q = np.asarray(Q, dtype=float)
    if Q.shape != H.hessian.shape:
        raise ValidationError(f"Q must have shape {H.hessian.shape}")
    if not is_symplectic(Q, 1e-10 * max(1.0, np.max(np.abs(Q))) ** 2):
        raise ValidationError("congruence matrix is not symplectic")
    zeta = np.zeros(2 * H.n) if zeta is None else np.asarray(zeta, dtype=float)
    J = symplectic_form(H.n)
    Qinv = -J @ Q.T @ J
    Hq = Q.T @ H.hessian @ Q
    Hq = 0.5 * (Hq + Hq.T)
    # x ^ lin = Q x' ^ lin = x' ^ Q^-1 lin (up to a constant dropped with zeta)
    lin = Qinv @ H.linear
    h0 = H.h0 + float((J @ (Q @ zeta)) @ H.linear)
    return QuadraticHamiltonian(Hq, Qinv @ H.eta - zeta, h0, H.hbar, lin)


# --------------------------------------------------------------------------
# catalog

_ALIASES = {"ω": "omega", "κ": "kappa", "w": "omega", "k": "kappa", "ħ": "hbar",
            "ω1": "omega1", "ω2": "omega2"}


def _csc_half(x):
    return 0.5 / abs(math.sin(0.5 * x))


def _csch_half(x):
    return 0.5 / math.sinh(0.5 * x)


@dataclass(frozen=True)
class CatalogEntry:
    """A normal-form Hamiltonian with a closed-form partition function."""

    name: str
    category: str
    defaults: Mapping[str, float]
    description: str
    builder: Callable = field(repr=False)
    partition: Optional[Callable] = field(default=None, repr=False)

    def build(self, params: Mapping[str, float]) -> np.ndarray:
        return self.builder(params)


def _free_particle(p):
    n = int(p["n"])
    M = p.get("M")
    M = np.eye(n) * float(p["m"]) if M is None else np.asarray(M, dtype=float).reshape(n, n)
    H = np.zeros((2 * n, 2 * n))
    H[n:, n:] = M
    return H


def _hyperbolic_1d(p):
    k = float(p["kappa"])
    return np.array([[0.0, k], [k, 0.0]])


def _inverted(p):
    k = float(p["kappa"])
    return np.diag([-k, k])


def _degenerate_hyperbolic(p):
    n = int(p["n"])
    k = float(p["kappa"])
    K = k * (np.eye(n) - np.eye(n, k=-1))
    Z = np.zeros((n, n))
    return np.block([[Z, K], [K.T, Z]])


def _harmonic(p):
    return float(p["omega"]) * np.eye(2 * int(p["n"]))


def _positive_definite(p):
    w1, w2, g = float(p["omega1"]), float(p["omega2"]), float(p["g"])
    Hq = np.array([[w1, g], [g, w2]])
    Hp = np.diag([w1, w2])
    Z = np.zeros((2, 2))
    return np.block([[Hq, Z], [Z, Hp]])


def positive_definite_spectrum(omega1, omega2, g):
    """Closed-form symplectic eigenvalues of the two-mode positive_definite entry."""
    a = 0.5 * (omega1 ** 2 + omega2 ** 2)
    r = math.sqrt((0.5 * (omega1 ** 2 - omega2 ** 2)) ** 2 + omega1 * omega2 * g ** 2)
    return math.sqrt(a + r), math.sqrt(a - r)


def _loxodromic(p):
    w, k = float(p["omega"]), float(p["kappa"])
    Om = np.array([[k, -w], [w, k]])
    Z = np.zeros((2, 2))
    return np.block([[Z, Om], [Om.T, Z]])


def _pf_positive_definite(p, hb):
    m1, m2 = positive_definite_spectrum(float(p["omega1"]), float(p["omega2"]), float(p["g"]))
    return _csch_half(hb * m1) * _csch_half(hb * m2)


CATALOG = {
    e.name: e for e in [
        CatalogEntry("free_particle", PARABOLIC, {"n": 1, "m": 1.0},
                     "H = 0_n + M (kinetic energy only)", _free_particle),
        CatalogEntry("hyperbolic_1d", HYPERBOLIC, {"kappa": 1.0},
                     "H = kappa sigma_x, H_cl = kappa q p", _hyperbolic_1d,
                     lambda p, hb: _csc_half(hb * float(p["kappa"]))),
        CatalogEntry("inverted_oscillator", HYPERBOLIC, {"kappa": 1.0},
                     "H = kappa diag(-1, 1), H_cl = kappa (p^2 - q^2)/2", _inverted,
                     lambda p, hb: _csc_half(hb * float(p["kappa"]))),
        CatalogEntry("degenerate_hyperbolic", HYPERBOLIC, {"n": 2, "kappa": 1.0},
                     "H_cl = q.Kp with K = kappa (I - N), N the lower shift", _degenerate_hyperbolic,
                     lambda p, hb: _csc_half(hb * float(p["kappa"])) ** int(p["n"])),
        CatalogEntry("harmonic_oscillator", ELLIPTIC, {"omega": 1.0, "n": 1},
                     "H = omega I", _harmonic,
                     lambda p, hb: _csch_half(hb * float(p["omega"])) ** int(p["n"])),
        CatalogEntry("positive_definite", ELLIPTIC, {"omega1": 1.0, "omega2": 2.0, "g": 0.5},
                     "two coupled modes, q-block [[w1, g], [g, w2]], p-block diag(w1, w2)",
                     _positive_definite, _pf_positive_definite),
        CatalogEntry("loxodromic_2d", LOXODROMIC, {"omega": 1.0, "kappa": 4.0},
                     "H_cl = q.Omega p with Omega = [[kappa, -omega], [omega, kappa]]", _loxodromic,
                     lambda p, hb: 0.5 / (math.cosh(hb * float(p["omega"])) - math.cos(hb * float(p["kappa"])))),
    ]
}


def _normalize_params(entry: CatalogEntry, params: Optional[Mapping]) -> dict:
    out = dict(entry.defaults)
    for key, value in (params or {}).items():
        key = _ALIASES.get(key, key)
        if key == "M" and entry.name == "free_particle":
            out["M"] = value
            continue
        if key not in entry.defaults:
            raise ValidationError(f"unknown parameter {key!r} for catalog entry {entry.name!r}; "
                                  f"expected {sorted(entry.defaults)}")
        try:
            v = float(value)
        except (TypeError, ValueError):
            raise ValidationError(f"parameter {key!r} must be a number, got {value!r}") from None
        if not math.isfinite(v):
            raise ValidationError(f"parameter {key!r} must be finite")
        if key == "n":
            if v != int(v) or v < 1:
                raise ValidationError("parameter 'n' must be a positive integer")
            v = int(v)
        out[key] = v
    if entry.name == "positive_definite":
        if not (out["omega1"] > 0 and out["omega2"] > 0 and out["omega1"] * out["omega2"] > out["g"] ** 2):
            raise ValidationError("positive_definite needs omega1, omega2 > 0 and omega1*omega2 > g^2")
    return out


def catalog(name: str, params: Optional[Mapping] = None, hbar: float = 1.0) -> QuadraticHamiltonian:
    """Build a catalog Hamiltonian.

    Parameters
    ----------
    name : str
        One of :data:`CATALOG`.
    params : mapping, optional
        Entry parameters; unspecified ones take the entry defaults.
        Greek aliases (``ω``, ``κ``) are accepted.
    hbar : float
        Reduced Planck constant.
    """
    entry = CATALOG.get(name)
    if entry is None:
        raise ValidationError(f"unknown catalog entry {name!r}; known: {sorted(CATALOG)}")
    p = _normalize_params(entry, params)
    H = entry.build(p)
    if entry.name == "free_particle":
        n = int(p["n"])
        M = H[n:, n:]
        if np.linalg.eigvalsh(0.5 * (M + M.T))[0] <= 0:
            warnings.warn("free_particle mass matrix is not positive definite; "
                          "the Weyl symbol and truncated PF need M > 0", UserWarning, stacklevel=2)
    frozen = tuple(sorted((k, v) for k, v in p.items() if k != "M"))
    source = (entry.name, frozen) if "M" not in p else None
    return QuadraticHamiltonian(H, None, 0.0, hbar, None, source)


def closed_form_partition(H: QuadraticHamiltonian, beta: float) -> Optional[float]:
    """Closed-form partition function for catalog-built Hamiltonians, else None."""
    if H.source is None:
        return None
    name, params = H.source
    entry = CATALOG[name]
    if entry.partition is None:
        return None
    return math.exp(-beta * H.h0) * entry.partition(dict(params), H.hbar * beta)


# --------------------------------------------------------------------------
# spec files

_KNOWN_KEYS = {"n", "hessian", "eta", "h0", "hbar", "linear", "catalog", "params"}


def _matrix(value, dim, name):
    a = np.asarray(value, dtype=float)
    if a.ndim == 1 and a.size == dim * dim:
        a = a.reshape(dim, dim)
    if a.shape != (dim, dim):
        raise ValidationError(f"{name} must be {dim}x{dim}, got shape {a.shape}")
    return a


def from_mapping(doc: Mapping) -> QuadraticHamiltonian:
    """Build a Hamiltonian from a decoded spec document."""
    if not isinstance(doc, Mapping):
        raise ValidationError("spec document must be a JSON object")
    hbar = float(doc.get("hbar", 1.0))
    if "catalog" in doc:
        params = dict(doc.get("params") or {})
        for key, value in doc.items():
            if key not in _KNOWN_KEYS:
                params[key] = value
        entry = CATALOG.get(doc["catalog"])
        if entry is not None and "n" in doc and "n" in entry.defaults:
            params.setdefault("n", doc["n"])
        base = catalog(doc["catalog"], params, hbar)
        if "n" in doc and int(doc["n"]) != base.n:
            raise ValidationError(f"n = {doc['n']} does not match catalog entry dimension {base.n}")
        eta = doc.get("eta")
        h0 = doc.get("h0", 0.0)
        if eta is None and not h0:
            return base
        return QuadraticHamiltonian(base.hessian, eta, h0, hbar, None, base.source)
    if "hessian" not in doc:
        raise ValidationError("Hamiltonian document needs either 'hessian' or 'catalog'")
    try:
        raw = np.asarray(doc["hessian"], dtype=float)
    except (TypeError, ValueError):
        raise ValidationError("hessian must be a numeric matrix") from None
    n = doc.get("n")
    if n is None:
        dim = raw.shape[0] if raw.ndim == 2 else int(round(math.sqrt(raw.size)))
        n = dim // 2
    n = int(n)
    if n < 1:
        raise ValidationError("n must be a positive integer")
    H = _matrix(raw, 2 * n, "hessian")
    if not np.all(np.isfinite(H)):
        raise ValidationError("hessian has non-finite entries")
    asym = np.max(np.abs(H - H.T))
    if asym > PARSE_SYMMETRY_TOL * max(1.0, np.max(np.abs(H))):
        raise ValidationError(f"hessian asymmetry {asym:.3e} exceeds {PARSE_SYMMETRY_TOL:g}")
    if asym:
        H = 0.5 * (H + H.T)
    return QuadraticHamiltonian(H, doc.get("eta"), doc.get("h0", 0.0), hbar, doc.get("linear"))


def parse_spec(text: str) -> QuadraticHamiltonian:
    """Parse a JSON Hamiltonian spec document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"Hamiltonian document is not valid JSON: {exc}") from None
    return from_mapping(doc)


def load_spec(path) -> QuadraticHamiltonian:
    with open(path, encoding="utf-8") as fh:
        return parse_spec(fh.read())


def fmt_float(x: float) -> str:
    """Shortest decimal that round-trips the double exactly."""
    x = float(x)
    if not math.isfinite(x):
        raise ValidationError("cannot serialize non-finite value")
    return repr(x)


def serialize(H: QuadraticHamiltonian) -> str:
    """Canonical JSON text of an explicit Hamiltonian (row-major Hessian)."""
    rows = ",\n    ".join("[" + ", ".join(fmt_float(v) for v in row) + "]" for row in H.hessian)
    parts = [
        f'  "n": {H.n}',
        f'  "hessian": [\n    {rows}\n  ]',
        '  "eta": [' + ", ".join(fmt_float(v) for v in H.eta) + "]",
        f'  "h0": {fmt_float(H.h0)}',
        f'  "hbar": {fmt_float(H.hbar)}',
    ]
    if H.has_translation:
        parts.append('  "linear": [' + ", ".join(fmt_float(v) for v in H.linear) + "]")
    return "{\n" + ",\n".join(parts) + "\n}\n"
