"""Command-line front end.

Exit codes: 0 success, 2 configuration error, 3 divergence at the
requested beta, 4 verification failure.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from typing import Optional

import numpy as np

from . import thermo
from .errors import (
    DivergenceError,
    NotConverged,
    NumericalFailure,
    ValidationError,
    WickPhaseError,
)
from .hamiltonians import CATALOG, catalog, closed_form_partition, fmt_float, load_spec
from .symplectic import WICK_IMAGE, classify_generator

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGENCE = 3
EXIT_VERIFY = 4

TOL_DEFAULTS = {"classify": 1e-9, "notch": 1e-6, "verify": 1e-7}


class ConfigError(Exception):
    pass


def _parse_kv(items, what):
    out = {}
    for item in items or []:
        if "=" not in item:
            raise ConfigError(f"{what} must look like NAME=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def parse_beta_grid(text: str) -> np.ndarray:
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError("--beta-grid must be start:stop:count")
    try:
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise ConfigError(f"cannot parse --beta-grid {text!r}") from None
    if count < 1 or not (math.isfinite(start) and math.isfinite(stop)):
        raise ConfigError("--beta-grid needs finite bounds and count >= 1")
    if count > 1 and stop <= start:
        raise ConfigError("--beta-grid must be strictly increasing (stop > start)")
    if start <= 0:
        raise ConfigError("--beta-grid values must be positive")
    return np.linspace(start, stop, count)


def _hamiltonian(args):
    if args.input and args.catalog:
        raise ConfigError("give either --input or --catalog, not both")
    if args.input:
        if args.param:
            raise ConfigError("--param only applies to --catalog")
        try:
            H = load_spec(args.input)
        except OSError as exc:
            raise ConfigError(f"cannot read {args.input}: {exc.strerror}") from None
        if args.hbar is not None:
            H = H.with_hbar(args.hbar)
        return H
    if args.catalog:
        params = _parse_kv(args.param, "--param")
        return catalog(args.catalog, params, 1.0 if args.hbar is None else args.hbar)
    raise ConfigError("a Hamiltonian is required: use --input PATH or --catalog NAME")


def _tols(args):
    raw = _parse_kv(args.tol, "--tol")
    tols = dict(TOL_DEFAULTS)
    for k, v in raw.items():
        if k not in tols:
            raise ConfigError(f"unknown tolerance {k!r}; known: {sorted(tols)}")
        try:
            tols[k] = float(v)
        except ValueError:
            raise ConfigError(f"tolerance {k} must be a number") from None
        if not tols[k] > 0:
            raise ConfigError(f"tolerance {k} must be positive")
    return tols


def _betas(args, required=True):
    if args.beta is not None and args.beta_grid is not None:
        raise ConfigError("give either --beta or --beta-grid")
    if args.beta is not None:
        if not (args.beta > 0 and math.isfinite(args.beta)):
            raise ConfigError("--beta must be positive and finite")
        return np.array([args.beta]), True
    if args.beta_grid is not None:
        return parse_beta_grid(args.beta_grid), False
    if required:
        raise ConfigError("--beta or --beta-grid is required")
    return None, False


def _csv(columns, rows) -> str:
    lines = [",".join(columns)]
    for r in rows:
        lines.append(",".join(_cell(r.get(c, "")) for c in columns))
    return "\n".join(lines) + "\n"


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return thermo._cell(v)
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    s = "" if v is None else str(v)
    if "," in s or '"' in s:
        s = '"' + s.replace('"', '""') + '"'
    return s


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False, ensure_ascii=True) + "\n"


# --------------------------------------------------------------------------
# commands


def cmd_catalog(args, tols):
    rows = []
    for name in sorted(CATALOG):
        e = CATALOG[name]
        params = " ".join(f"{k}={v}" for k, v in e.defaults.items())
        rows.append({"name": name, "category": e.category, "parameters": params, "description": e.description})
    if args.format == "json":
        return _json(rows), EXIT_OK
    return _csv(("name", "category", "parameters", "description"), rows), EXIT_OK


def cmd_classify(args, tols):
    H = _hamiltonian(args)
    cls = classify_generator(H.generator, tols["classify"])
    rows = []
    for m in cls.modes:
        v = complex(m.value)
        rows.append({"kind": m.kind, "value_re": v.real, "value_im": v.imag,
                     "multiplicity": m.multiplicity, "wick_kind": WICK_IMAGE[m.kind]})
    if args.format == "json":
        return _json({"n": H.n, "summary": str(cls),
                      "modes": [{**r, "value_re": fmt_float(r["value_re"]), "value_im": fmt_float(r["value_im"])}
                                for r in rows]}), EXIT_OK
    return _csv(("kind", "value_re", "value_im", "multiplicity", "wick_kind"), rows), EXIT_OK


def cmd_symbols(args, tols):
    from .symbols import thermal_weyl_symbol, thermal_wigner_symbol
    from .wick import detect_divergences, thermal_indices

    H = _hamiltonian(args)
    betas, single = _betas(args)
    if not single:
        raise ConfigError("symbols takes a single --beta")
    beta = float(betas[0])
    out = {"beta": fmt_float(beta)}
    failures = []
    for key, fn in (("weyl", thermal_weyl_symbol), ("wigner", thermal_wigner_symbol)):
        try:
            out[key] = fn(H, beta).to_dict()
        except DivergenceError as exc:
            out[key] = {"error": str(exc), "side": exc.side}
            failures.append(exc)
    idx = thermal_indices(H.normalized(), beta)
    out["cz"] = {"nu_minus": idx.nu_minus, "nu_plus": idx.nu_plus, "determination": idx.determination,
                 "window_end": "inf" if math.isinf(idx.window_end) else fmt_float(idx.window_end)}
    out["divergences"] = [{"beta": fmt_float(d.beta), "side": d.side, "continuum": d.continuum}
                          for d in detect_divergences(H.normalized(), max(beta, 1e-12) * 2)]
    code = EXIT_DIVERGENCE if len(failures) == 2 else EXIT_OK
    if args.format == "json":
        return _json(out), code
    rows = []
    for key in ("weyl", "wigner"):
        for field, value in out[key].items():
            rows.append({"field": f"{key}.{field}", "value": json.dumps(value, separators=(",", ":"))})
    for field, value in out["cz"].items():
        rows.append({"field": f"cz.{field}", "value": json.dumps(value)})
    return _csv(("field", "value"), rows), code


def _scan(args, tols, H, betas):
    res = thermo.beta_scan(H, betas, notch=tols["notch"],
                           truncation_volume=getattr(args, "truncation_volume", None))
    if args.format == "json":
        return _json(res.to_json_obj())
    return res.to_csv()


def cmd_thermo(args, tols):
    H = _hamiltonian(args)
    betas, single = _betas(args)
    if not single:
        return _scan(args, tols, H, betas), EXIT_OK
    beta = float(betas[0])
    rep = thermo.thermo_report(H, beta)
    row = rep.as_row()
    if args.format == "json":
        return _json({"columns": list(thermo.SCAN_COLUMNS),
                      "rows": [{c: thermo._json_cell(row[c]) for c in thermo.SCAN_COLUMNS}]}), EXIT_OK
    return _csv(thermo.SCAN_COLUMNS, [row]), EXIT_OK


def cmd_scan(args, tols):
    H = _hamiltonian(args)
    betas, single = _betas(args)
    return _scan(args, tols, H, betas), EXIT_OK


def verification_checks(H, beta: float, rtol: float = 1e-7, cutoff: Optional[int] = None) -> list:
    """Run the oracle and invariant checks for one Hamiltonian.

    Returns a list of dicts with keys check, value, tolerance, status.
    """
    from .fock import ThermalState, quantize, thermal_trace
    from .symbols import wigner_function
    from .symplectic import ELLIPTIC
    from .wick import cayley, cayley_from_parts, complex_symplectic, mode_classes, wsp_defects

    H = H.normalized()
    out = []

    def add(name, value, tol):
        ok = bool(np.isfinite(value) and value <= tol)
        out.append({"check": name, "value": float(value), "tolerance": float(tol), "status": "pass" if ok else "fail"})

    S = complex_symplectic(H, beta)
    d = wsp_defects(S.matrix)
    add("wsp_unitary_conj", d["unitary_conj"], 1e-9)
    add("wsp_symplectic", d["symplectic"], 1e-9)
    add("wsp_trace_real", d["trace_imag"], 1e-9)
    add("det_pm_real", max(d["det_minus_imag"], d["det_plus_imag"]), 1e-9)
    try:
        C1, C2 = cayley(S).matrix, cayley_from_parts(S).matrix
        add("cayley_routes", float(np.max(np.abs(C1 - C2))), 1e-9)
    except DivergenceError:
        pass
    classes = mode_classes(H)
    try:
        rep = thermo.thermo_report(H, beta)
    except DivergenceError:
        return out
    ref = closed_form_partition(H, beta)
    if ref is not None:
        add("closed_form_Z", abs(rep.Z - ref) / ref, 1e-9)
    h = 1e-4 * beta
    l = [thermo.log_partition(H, beta + k * h) for k in (-1, 0, 1)]
    U_fd = -(l[2] - l[0]) / (2 * h)
    C_fd = beta ** 2 * (l[2] - 2 * l[1] + l[0]) / h ** 2
    add("U_vs_dlnZ", abs(rep.U - U_fd) / max(1.0, abs(rep.U)), 1e-6)
    add("C_vs_d2lnZ", abs(rep.C - C_fd) / max(1.0, abs(rep.C)), 1e-4)
    add("entropy_identity", abs(rep.entropy - rep.kB * beta * (rep.U - rep.F)), 1e-10 * max(1.0, abs(rep.entropy)))
    if classes.kinds == {ELLIPTIC} and H.n <= 2:
        N = cutoff or (256 if H.n == 1 else 48)
        op = quantize(H, N)
        tr = thermal_trace(op, beta)
        add("fock_converged", 0.0 if tr.converged else 1.0, 0.5)
        add("fock_Z", abs(tr.value - rep.Z) / rep.Z, rtol)
        if H.n == 1 and tr.converged:
            st = ThermalState(op, beta, check=False)
            W = wigner_function(H, beta)
            pts = [H.eta + np.array([a, b]) for a, b in ((0.0, 0.0), (0.5, -0.3), (-0.7, 0.9), (1.1, 0.2))]
            err = max(abs(st.wigner(x) - W.values(x).real) for x in pts)
            add("fock_wigner", err, 1e-6)
    return out


def cmd_verify(args, tols):
    H = _hamiltonian(args)
    betas, _ = _betas(args, required=False)
    betas = [1.0] if betas is None else list(betas)
    rows = []
    for b in betas:
        for r in verification_checks(H, float(b), tols["verify"], args.cutoff):
            rows.append({"beta": float(b), **r})
    failed = any(r["status"] == "fail" for r in rows)
    if args.format == "json":
        text = _json([{**r, "beta": fmt_float(r["beta"]), "value": thermo._json_cell(r["value"]),
                       "tolerance": fmt_float(r["tolerance"])} for r in rows])
    else:
        text = _csv(("beta", "check", "value", "tolerance", "status"), rows)
    return text, EXIT_VERIFY if failed else EXIT_OK


COMMANDS = {
    "catalog": cmd_catalog,
    "classify": cmd_classify,
    "symbols": cmd_symbols,
    "thermo": cmd_thermo,
    "scan": cmd_scan,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_argument_group("Hamiltonian")
    src.add_argument("--input", metavar="PATH", help="JSON Hamiltonian spec file")
    src.add_argument("--catalog", metavar="NAME", help="catalog entry name (see the catalog command)")
    src.add_argument("--param", action="append", metavar="K=V", help="catalog parameter (repeatable)")
    src.add_argument("--hbar", type=float, help="override hbar")
    common.add_argument("--beta", type=float, help="inverse temperature")
    common.add_argument("--beta-grid", metavar="START:STOP:COUNT", help="uniform beta grid")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--out", metavar="PATH", help="write output to PATH instead of stdout")
    common.add_argument("--tol", action="append", metavar="NAME=VALUE",
                        help=f"tolerance override; names: {', '.join(sorted(TOL_DEFAULTS))}")

    parser = argparse.ArgumentParser(prog="wickphase",
                                     description="Thermal Weyl-Wigner symbols and thermodynamics of "
                                                 "quadratic Hamiltonians.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("catalog", parents=[common], help="list catalog entries")
    sub.add_parser("classify", parents=[common], help="eigenvalue categories of J H")
    sub.add_parser("symbols", parents=[common], help="thermal Weyl and Wigner symbols at one beta")
    sub.add_parser("thermo", parents=[common], help="Z, F, U, S, C at one beta (or a grid)")
    scan = sub.add_parser("scan", parents=[common], help="thermodynamics over a beta grid")
    scan.add_argument("--truncation-volume", type=float, metavar="OMEGA",
                      help="also report the phase-space truncated PF (1-dof hyperbolic)")
    ver = sub.add_parser("verify", parents=[common], help="oracle and invariant checks")
    ver.add_argument("--cutoff", type=int, help="Fock cutoff per mode")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        tols = _tols(args)
        text, code = COMMANDS[args.command](args, tols)
    except (ConfigError, ValidationError) as exc:
        print(f"wickphase: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DivergenceError as exc:
        print(f"wickphase: divergence ({exc.side} side): {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except (NumericalFailure, NotConverged) as exc:
        print(f"wickphase: verification failure: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except WickPhaseError as exc:
        print(f"wickphase: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
