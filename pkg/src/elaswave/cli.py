"""Command-line front end.

Every subcommand reads material JSON files, prints machine-readable output
(JSON or CSV, floats at 17 significant digits for byte-stable regression
fixtures), and maps validation errors to exit code 2 and numerical-domain
errors to exit code 3, with a structured JSON error on stderr.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass

import numpy as np

from . import boundary as bnd
from . import layered as lyr
from .acoustic import christoffel_modes, eigen_gap_scan, fibonacci_sphere
from .errors import ElasticError, NumericalDomainError, ValidationError
from .factorization import (
    BoundaryFrame,
    boundary_polynomial,
    classify_spectrum,
    factorization_residual,
    factorize,
)
from .impedance import flux_form, impedance_from_factorization, mode_projectors
from .materials import (
    check_strong_convexity,
    decompose_harmonic,
    load_material,
    to_voigt,
)
from .scatter import energy_balance, incoming_mode, reflect_free_surface, transmit_interface


@dataclass(frozen=True)
class Config:
    """Tolerance overrides and output options shared by subcommands."""

    tol_grouping: float = 1e-8
    tol_glancing: float = 1e-6
    tol_quadrature: float = 1e-8
    tol_bisection: float = 1e-10
    fmt: str = "json"
    out: str | None = None

    def __post_init__(self):
        for name in ("tol_grouping", "tol_glancing", "tol_quadrature",
                     "tol_bisection"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be positive")


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _jsonable(obj):
    """Recursively render floats at fixed 17-significant-digit precision."""
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, complex) or isinstance(obj, np.complexfloating):
        return {"re": _fmt(obj.real), "im": _fmt(obj.imag)}
    if isinstance(obj, (float, np.floating)):
        return _fmt(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def _matrix(m: np.ndarray):
    if np.iscomplexobj(m):
        return {"re": [[_fmt(v) for v in row] for row in m.real],
                "im": [[_fmt(v) for v in row] for row in m.imag]}
    return [[_fmt(v) for v in row] for row in m]


def _emit(text: str, cfg: Config) -> None:
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_json(doc, cfg: Config) -> None:
    _emit(json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n", cfg)


def _emit_csv(header: list[str], rows, cfg: Config) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) if isinstance(v, (float, np.floating))
                              else str(v) for v in row))
    _emit("\n".join(lines) + "\n", cfg)


def _frame(args) -> BoundaryFrame:
    eta = np.array([args.eta[0], args.eta[1], 0.0])
    return BoundaryFrame(np.array([0.0, 0.0, 1.0]), eta, args.tau)


# --- subcommand handlers ----------------------------------------------------

def _cmd_material(args, cfg: Config) -> int:
    path = args.material or args.path
    if path is None:
        raise ValidationError("material subcommand needs a material file path")
    m = load_material(path)
    convex, min_eig = check_strong_convexity(m.stiffness)
    if args.validate:
        _emit_json({"name": m.name, "valid": True, "strongly_convex": convex,
                    "min_eigenvalue": min_eig}, cfg)
        return 0
    h = decompose_harmonic(m.stiffness)
    _emit_json({
        "name": m.name,
        "density": m.density,
        "strongly_convex": convex,
        "min_eigenvalue": min_eig,
        "harmonic": {
            "lambda": h.lam, "mu": h.mu,
            "deviator_a_norm": float(np.linalg.norm(h.a)),
            "deviator_b_norm": float(np.linalg.norm(h.b)),
            "harmonic_norm": float(np.linalg.norm(h.h)),
        },
        "voigt": _matrix(to_voigt(m.stiffness)),
    }, cfg)
    return 0


def _cmd_slowness(args, cfg: Config) -> int:
    m = load_material(args.material)
    rows = []
    if args.direction is not None:
        d = np.asarray(args.direction, dtype=float)
        d = d / np.linalg.norm(d)
        modes = christoffel_modes(m, d)
        vals = np.sort(modes.speeds)[::-1]
        gap = float(np.min(vals[:-1] - vals[1:]))
        rows.append((d[0], d[1], d[2], *vals, gap))
    else:
        for d in fibonacci_sphere(args.grid):
            modes = christoffel_modes(m, d)
            vals = np.sort(modes.speeds)[::-1]
            gap = float(np.min(vals[:-1] - vals[1:]))
            rows.append((d[0], d[1], d[2], *vals, gap))
    header = ["dir_x", "dir_y", "dir_z", "speed_1", "speed_2", "speed_3",
              "min_speed_gap"]
    if cfg.fmt == "csv":
        _emit_csv(header, rows, cfg)
    else:
        _emit_json({"columns": header, "rows": [list(r) for r in rows]}, cfg)
    return 0


def _cmd_factorize(args, cfg: Config) -> int:
    m = load_material(args.material)
    frame = _frame(args)
    a = boundary_polynomial(m, frame)
    f = factorize(a, args.direction, grouping_tol=cfg.tol_grouping,
                  glancing_tol=cfg.tol_glancing)
    rng = np.random.default_rng(0)
    samples = rng.standard_normal(10) + 1j * rng.standard_normal(10)
    _emit_json({
        "direction": f.direction,
        "sigma": list(f.sigma),
        "q": _matrix(f.q),
        "q_sharp": _matrix(f.q_sharp),
        "solvency_residual": f.solvency_residual,
        "factorization_residual": factorization_residual(f, samples),
    }, cfg)
    return 0


def _cmd_impedance(args, cfg: Config) -> int:
    m = load_material(args.material)
    frame = _frame(args)
    a = boundary_polynomial(m, frame)
    f = factorize(a, "outgoing", grouping_tol=cfg.tol_grouping,
                  glancing_tol=cfg.tol_glancing)
    z = impedance_from_factorization(a, f)
    pr = mode_projectors(f)
    rng = np.random.default_rng(0)
    fluxes = [flux_form(z, frame.tau,
                        rng.standard_normal(3) + 1j * rng.standard_normal(3))
              for _ in range(100)]
    _emit_json({
        "z": _matrix(z.z),
        "eigenvalues_hermitian_part":
            list(np.linalg.eigvalsh(0.5 * (z.z + z.z.conj().T))),
        "singular_values": list(np.linalg.svd(z.z, compute_uv=False)),
        "dim_ec": pr.dim_ec,
        "hermiticity_residual_on_ec": z.hermiticity_residual(pr.ec_basis()),
        "flux_spot_check_min": float(min(fluxes)),
        "flux_spot_check_max": float(max(fluxes)),
    }, cfg)
    return 0


def _load_sides(args):
    if args.material is not None:
        return load_material(args.material)
    if args.material_plus is None or args.material_minus is None:
        raise ValidationError(
            "need --material, or both --material-plus and --material-minus")
    return (load_material(args.material_plus), load_material(args.material_minus))


def _cmd_classify(args, cfg: Config) -> int:
    sides = _load_sides(args)
    if args.grid:
        rows = []
        for k in range(args.grid):
            ang = 2.0 * np.pi * k / args.grid
            eta = np.array([np.cos(ang), np.sin(ang), 0.0])
            frame = BoundaryFrame(np.array([0.0, 0.0, 1.0]), eta, args.tau)
            region = bnd.classify(sides, frame)
            if region.is_glancing:
                rows.append((eta[0], eta[1], args.tau, region.label, 0.0))
                continue
            margin, _ = bnd.ellipticity_margin(sides, [frame])
            margin = 0.0 if not np.isfinite(margin) else margin
            rows.append((eta[0], eta[1], args.tau, region.label, margin))
        _emit_csv(["eta_x", "eta_y", "tau", "label", "margin"], rows, cfg)
        return 0
    frame = _frame(args)
    region = bnd.classify(sides, frame)
    _emit_json({"label": region.label,
                "dim_ec": list(region.dim_ec),
                "dim_intersection": region.dim_intersection}, cfg)
    return 0


def _surface_wave_doc(res: bnd.RayleighResult):
    return {
        "tau_r": res.tau_r,
        "slowness": res.slowness,
        "tau_eta": res.tau_eta,
        "polarization": list(res.polarization.astype(complex)),
        "bracket": list(res.bracket),
        "det_residual": res.det_residual,
    }


def _cmd_rayleigh(args, cfg: Config) -> int:
    m = load_material(args.material)
    eta_hat = np.array([args.eta[0], args.eta[1], 0.0])
    eta_hat = eta_hat / np.linalg.norm(eta_hat)
    res = bnd.rayleigh_speed(m, np.array([0.0, 0.0, 1.0]), eta_hat,
                             rel_tol=cfg.tol_bisection)
    _emit_json(_surface_wave_doc(res), cfg)
    return 0


def _cmd_stoneley(args, cfg: Config) -> int:
    mp = load_material(args.material_plus)
    mm = load_material(args.material_minus)
    eta_hat = np.array([args.eta[0], args.eta[1], 0.0])
    eta_hat = eta_hat / np.linalg.norm(eta_hat)
    res = bnd.stoneley_speed(mp, mm, np.array([0.0, 0.0, 1.0]), eta_hat,
                             rel_tol=cfg.tol_bisection)
    _emit_json(_surface_wave_doc(res), cfg)
    return 0


def _cmd_reflect(args, cfg: Config) -> int:
    sides = _load_sides(args)
    frame = _frame(args)
    if isinstance(sides, tuple):
        inc = incoming_mode(sides[0], frame, args.mode)
        result = transmit_interface(sides[0], sides[1], frame, inc)
    else:
        inc = incoming_mode(sides, frame, args.mode)
        result = reflect_free_surface(sides, frame, inc)
    report = energy_balance(result)
    rows = []
    for tag in sorted(result.sides):
        side = result.sides[tag]
        for s in sorted(side.amplitudes):
            a = side.amplitudes[s]
            rows.append((args.eta[0], args.eta[1], args.tau, inc.s_in, tag, s,
                         a[0].real, a[0].imag, a[1].real, a[1].imag,
                         a[2].real, a[2].imag, side.fluxes[s],
                         result.balance_residual))
    header = ["eta_x", "eta_y", "tau", "s_in", "side", "s_out",
              "a1_re", "a1_im", "a2_re", "a2_im", "a3_re", "a3_im",
              "flux", "balance_residual"]
    if cfg.fmt == "csv":
        _emit_csv(header, rows, cfg)
    else:
        _emit_json({"columns": header, "rows": [list(r) for r in rows],
                    "incident_flux": result.incident_flux,
                    "energy": report}, cfg)
    return 0


def _cmd_trace(args, cfg: Config, arrivals_only: bool = False) -> int:
    stack = lyr.load_stack(args.stack)
    tree = lyr.trace_plane_wave(stack, (args.eta[0], args.eta[1]), args.tau,
                                source_layer=args.source_layer,
                                source_mode=args.mode,
                                max_events=args.max_events,
                                amplitude_floor=args.amplitude_floor)
    if arrivals_only:
        _emit_csv(["time", "layer", "mode_s", "amplitude", "flux"],
                  lyr.arrivals_rows(tree), cfg)
    else:
        _emit_json(tree.to_dict(), cfg)
    return 0


# --- parser -----------------------------------------------------------------

def _add_frame_args(p, tau_required: bool = True):
    p.add_argument("--eta", nargs=2, type=float, required=True,
                   metavar=("X", "Y"))
    if tau_required:
        p.add_argument("--tau", type=float, required=True)


def _add_common(p):
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", default=None)
    for key in ("grouping", "glancing", "quadrature", "bisection"):
        p.add_argument(f"--tol-{key}", type=float, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="elaswave",
        description="Elastodynamic boundary quantities for layered anisotropic media")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("material", help="validate and decompose a material file")
    p.add_argument("path", nargs="?", default=None)
    p.add_argument("--material", default=None)
    p.add_argument("--validate", action="store_true")
    _add_common(p)

    p = sub.add_parser("slowness", help="Christoffel speeds over directions")
    p.add_argument("--material", required=True)
    p.add_argument("--grid", type=int, default=100)
    p.add_argument("--direction", nargs=3, type=float, default=None,
                   metavar=("X", "Y", "Z"))
    _add_common(p)

    p = sub.add_parser("factorize", help="spectral factorization at a frame")
    p.add_argument("--material", required=True)
    p.add_argument("--direction", choices=("outgoing", "incoming"),
                   default="outgoing")
    _add_frame_args(p)
    _add_common(p)

    p = sub.add_parser("impedance", help="outgoing impedance at a frame")
    p.add_argument("--material", required=True)
    _add_frame_args(p)
    _add_common(p)

    p = sub.add_parser("classify", help="region of a frame or angular grid")
    p.add_argument("--material", default=None)
    p.add_argument("--material-plus", default=None)
    p.add_argument("--material-minus", default=None)
    p.add_argument("--grid", type=int, default=0)
    _add_frame_args(p)
    _add_common(p)

    p = sub.add_parser("rayleigh", help="free-surface wave speed")
    p.add_argument("--material", required=True)
    _add_frame_args(p, tau_required=False)
    _add_common(p)

    p = sub.add_parser("stoneley", help="interface wave speed")
    p.add_argument("--material-plus", required=True)
    p.add_argument("--material-minus", required=True)
    _add_frame_args(p, tau_required=False)
    _add_common(p)

    p = sub.add_parser("reflect", help="reflection/transmission amplitudes")
    p.add_argument("--material", default=None)
    p.add_argument("--material-plus", default=None)
    p.add_argument("--material-minus", default=None)
    p.add_argument("--mode", type=int, default=0)
    _add_frame_args(p)
    _add_common(p)

    for name, help_text in (("trace", "layered plane-wave event tree"),
                            ("arrivals", "surface arrival table of a trace")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--stack", required=True)
        p.add_argument("--source-layer", type=int, default=0)
        p.add_argument("--mode", type=int, default=0)
        p.add_argument("--max-events", type=int, default=64)
        p.add_argument("--amplitude-floor", type=float, default=1e-4)
        _add_frame_args(p)
        _add_common(p)

    return parser


_HANDLERS = {
    "material": _cmd_material,
    "slowness": _cmd_slowness,
    "factorize": _cmd_factorize,
    "impedance": _cmd_impedance,
    "classify": _cmd_classify,
    "rayleigh": _cmd_rayleigh,
    "stoneley": _cmd_stoneley,
    "reflect": _cmd_reflect,
    "trace": _cmd_trace,
    "arrivals": lambda a, c: _cmd_trace(a, c, arrivals_only=True),
}


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = Config(
            tol_grouping=args.tol_grouping or 1e-8,
            tol_glancing=args.tol_glancing or 1e-6,
            tol_quadrature=args.tol_quadrature or 1e-8,
            tol_bisection=args.tol_bisection or 1e-10,
            fmt=args.format,
            out=args.out,
        )
        return _HANDLERS[args.command](args, cfg)
    except ValidationError as exc:
        _print_error(exc)
        return 2
    except NumericalDomainError as exc:
        _print_error(exc)
        return 3
    except ValueError as exc:
        _print_error(exc, code=2)
        return 2
    except ElasticError as exc:
        _print_error(exc)
        return exc.exit_code


def _print_error(exc: Exception, code: int | None = None) -> None:
    doc = {"error": type(exc).__name__, "message": str(exc)}
    if code is not None:
        doc["exit_code"] = code
    sys.stderr.write(json.dumps(doc, sort_keys=True) + "\n")


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
