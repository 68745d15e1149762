"""Command-line entry points and the end-to-end pipeline."""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import asdict

import numpy as np
from numpy.polynomial import polynomial as npoly

from .config import TOLERANCES, PipelineConfig
from .dpw import MeromorphicFrame, PicardError, picard_integrate
from .factor import FactorizationError, birkhoff, duality_check, iwasawa
from .harmonic import (FrameOptions, GridError, alpha_support_residual, extended_solution,
                       flatness_residual, frame_grid, nearest_index, parse_grid, parse_lambdas, uniton_degree)
from .liealg import parse_signature
from .loops import Loop
from .potentials import (PotentialError, example_s6_potential, load_potential, make_s4_potential,
                         timelike_probe_potential, zero_potential)
from .roots import all_selectors, grade_report
from .willmore import check_s4_data, export_csv, export_mesh, sample_s4, sample_s6, verify_surface

EXIT_OK, EXIT_CHECK_FAILED, EXIT_BAD_INPUT = 0, 1, 2


# deterministic JSON with 17 significant digits

def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    return obj


def _encode(obj, indent: int = 0) -> str:
    pad = "  " * (indent + 1)
    end = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(k)}: {_encode(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list)) for v in obj):
            return "[" + ", ".join(_encode(v) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + _encode(v, indent + 1) for v in obj) + "\n" + end + "]"
    if isinstance(obj, float):
        if math.isnan(obj) or math.isinf(obj):
            return json.dumps(str(obj))
        return format(obj, ".17g")
    return json.dumps(obj)


def dumps(obj) -> str:
    """JSON text with floats at 17 significant digits (byte-stable for equal inputs)."""
    return _encode(_plain(obj)) + "\n"


def _emit(obj, path: str | None = None) -> None:
    text = dumps(obj)
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# pipeline

class _Checks:
    def __init__(self):
        self.items: list[dict] = []

    def add(self, name: str, invariant: str, value, tolerance, passed: bool) -> None:
        self.items.append({"name": name, "invariant": invariant, "value": value,
                           "tolerance": tolerance, "passed": bool(passed)})

    def first_failure(self) -> dict | None:
        return next((c for c in self.items if not c["passed"]), None)


def _potential_for(cfg: PipelineConfig):
    if cfg.source == "s6-example":
        return example_s6_potential()
    if cfg.source == "s4-family":
        if not cfg.s4_derivatives:
            raise PotentialError("s4-family needs f1'..f4'", "s4 data")
        check_s4_data(_s4_primitives(cfg.s4_derivatives))
        return make_s4_potential(*cfg.s4_derivatives)
    if cfg.source == "zero":
        return zero_potential()
    if cfg.source == "probe":
        return timelike_probe_potential()
    return load_potential(cfg.source)


def _axes(cfg: PipelineConfig):
    (a, b, n), (c, d, m) = cfg.grid
    return np.linspace(a, b, int(n)), np.linspace(c, d, int(m))


def _failure(invariant: str, message: str, residual=None) -> dict:
    return {"status": "fail", "failure": {"invariant": invariant, "message": message,
                                          "residual": residual}}


def run_pipeline(cfg: PipelineConfig) -> tuple[int, dict]:
    """Run potential -> meromorphic frame -> frames -> checks and write the artifacts.

    Returns ``(exit_status, report)``: 0 when every enabled check passes,
    1 when a check fails, 2 for invalid input. Failure reports name the
    first violated invariant.
    """
    tol = cfg.tolerances
    base = {"config": {k: v for k, v in asdict(cfg).items() if k != "tolerances"},
            "tolerances": tol.as_dict()}
    try:
        cfg.validate()
    except ValueError as err:
        return EXIT_BAD_INPUT, {**base, **_failure("config", str(err))}
    try:
        eta = _potential_for(cfg)
    except PotentialError as err:
        return EXIT_BAD_INPUT, {**base, **_failure(err.invariant, str(err), err.residual)}
    except (OSError, ValueError, KeyError) as err:
        return EXIT_BAD_INPUT, {**base, **_failure("potential input", str(err))}

    checks = _Checks()
    xs, ys = _axes(cfg)
    try:
        iy0, ix0 = nearest_index(xs, ys, 0j)
        frame = picard_integrate(eta, z0=complex(xs[ix0], ys[iy0]))
    except PicardError as err:
        return EXIT_CHECK_FAILED, {**base, **_failure("nilpotency (Picard termination)", str(err))}
    checks.add("maurer_cartan", "dF_- = F_- eta", frame.residual, 0.0, frame.residual == 0.0)

    form = "noncompact" if cfg.mode == "noncompact" else "compact"
    try:
        fr = frame_grid(eta, xs, ys, options=FrameOptions(form=form), frame=frame)
    except GridError as err:
        return EXIT_CHECK_FAILED, {**base, **_failure("Iwasawa cell at the base point", str(err))}
    n_sing = int(fr.singular.sum())
    checks.add("singular_points", "Iwasawa splitting at every grid point", n_sing, 0,
               n_sing == 0 or form == "noncompact")

    if eta.is_zero():
        eye = Loop.identity(eta.size)
        dev = max(((f - eye).norm() for row in fr.frames for f in row if f is not None), default=0.0)
        checks.add("constant_frames", "F = I for the zero potential", dev, tol.solution, dev < tol.solution)

    flat = flatness_residual(fr, cfg.lambdas, stencil="local")
    checks.add("flatness", "d alpha + [alpha ^ alpha] / 2 = 0 for all lam", flat.max,
               tol.flatness, flat.max < tol.flatness)
    support = alpha_support_residual(fr)
    checks.add("alpha_support", "alpha_lam has Fourier support {-1, 0, 1}", support,
               tol.alpha_support, support < tol.alpha_support)

    sol = extended_solution(fr)
    checks.add("phi_at_one", "Phi(z, 1) = I", sol.one_residual, tol.solution,
               sol.one_residual < tol.solution)
    checks.add("idempotence", "(Phi(z, -1) D)^2 = I", sol.idempotence_residual, tol.solution,
               sol.idempotence_residual < tol.solution)
    checks.add("twisting", "Phi(-lam) Phi(-1)^{-1} = D Phi(lam) D^{-1}", sol.twist_residual,
               tol.solution, sol.twist_residual < tol.solution)
    uni = uniton_degree(sol)
    if cfg.source == "s6-example":
        checks.add("uniton_degree", "uniton number 2", uni.degree, 2, uni.degree == 2)
    elif cfg.source == "s4-family":
        # the S^4 value is matched by the unnormalized adjoint degree
        checks.add("uniton_degree", "uniton number 2 (adjoint degree of Phi)",
                   uni.raw_degree, 2, uni.raw_degree == 2)

    if cfg.mode == "duality":
        worst = 0.0
        for iy, ix, z in list(fr.points())[:: max(1, len(xs) * len(ys) // 9)]:
            rep = duality_check(frame.loop_at(z))
            vals = [v for k, v in rep.items() if "_vs_" in k and v is not None]
            worst = max([worst] + vals)
        checks.add("duality", "F_- agrees across real forms", worst, 1e-8, worst <= 1e-8)

    surface = None
    if cfg.source == "s6-example":
        surface = sample_s6(xs, ys)
        rep = verify_surface(surface)
        checks.add("unit_norm", "|x_lam| = 1", rep["norm_defect"], tol.unit_norm,
                   rep["norm_defect"] < tol.unit_norm)
    elif cfg.source == "s4-family":
        fs = _s4_primitives(cfg.s4_derivatives)
        surface = sample_s4(fs, xs, ys)
        lc = surface.diagnostics["light_cone_relative"]
        checks.add("light_cone", "<Y, Y> = 0 (relative)", lc, tol.light_cone, lc < tol.light_cone)

    report = {**base,
              "potential": {"kind": eta.kind, "size": eta.size, "z_degree": eta.z_degree},
              "picard_steps": frame.steps_used,
              "singular_points": n_sing,
              "flatness_per_lambda": [[complex(l), v] for l, v in zip(flat.lambdas, flat.per_lambda)],
              "uniton_degree": uni.degree,
              "uniton_raw_adjoint_degree": uni.raw_degree,
              "uniton_normalized": uni.normalized,
              "checks": checks.items}
    failed = checks.first_failure()
    report["status"] = "pass" if failed is None else "fail"
    if failed is not None:
        report["failure"] = {"invariant": failed["invariant"], "message": f"check {failed['name']} failed",
                             "residual": failed["value"]}
    if cfg.out_dir:
        _write_artifacts(cfg.out_dir, fr, frame, flat, uni, surface, report)
    return (EXIT_OK if failed is None else EXIT_CHECK_FAILED), report


def _s4_primitives(derivs):
    """Primitives ``f_k`` with ``f_k(0) = 0`` of the coefficient lists ``f_k'``."""
    return [npoly.polyint(np.asarray(d, complex)) for d in derivs]


def _write_artifacts(out_dir, fr, frame: MeromorphicFrame, flat, uni, surface, report) -> None:
    os.makedirs(out_dir, exist_ok=True)
    frames = [{"z": [float(z.real), float(z.imag)],
               "loop": None if fr.frames[iy][ix] is None else fr.frames[iy][ix].to_dict()}
              for iy, ix, z in fr.points()]
    _emit({"base_point": fr.base_point, "form": fr.form, "frames": frames},
          os.path.join(out_dir, "frames.json"))
    _emit(frame.to_dict(), os.path.join(out_dir, "meromorphic_frame.json"))
    write_grid_csv(fr, flat, os.path.join(out_dir, "flatness.csv"))
    _emit({"uniton_degree": uni.degree, "raw_adjoint_degree": uni.raw_degree,
           "normalized": uni.normalized, "per_point": uni.per_point},
          os.path.join(out_dir, "uniton.json"))
    if surface is not None:
        export_csv(surface, os.path.join(out_dir, "surface.csv"))
    _emit(report, os.path.join(out_dir, "report.json"))


def write_grid_csv(fr, flat, path: str) -> None:
    with open(path, "w") as fh:
        fh.write("z_re,z_im,residual,singular_flag\n")
        for iy, ix, z in fr.points():
            r = flat.per_point[iy, ix]
            fh.write(f"{z.real:.17g},{z.imag:.17g},{r:.17g},{int(fr.frames[iy][ix] is None)}\n")


# subcommands

def _cmd_roots(args) -> int:
    if args.action == "list":
        _emit([grade_report(args.m, sel) for sel in all_selectors(args.m)])
    else:
        sel = [int(v) for v in args.selector.split(",")]
        _emit(grade_report(args.m, sel))
    return EXIT_OK


def _parse_poly(text: str) -> list:
    return [complex(t.strip().replace("i", "j")) for t in text.split(",")]


def _cmd_potential(args) -> int:
    try:
        if args.kind == "s6-example":
            eta = example_s6_potential()
        elif args.kind == "probe":
            eta = timelike_probe_potential(parse_signature(args.signature))
        elif args.kind == "zero":
            eta = zero_potential(parse_signature(args.signature))
        elif args.kind == "s4":
            eta = make_s4_potential(*[_parse_poly(p) for p in args.f_prime])
        else:
            eta = load_potential(args.file)
    except PotentialError as err:
        _emit(_failure(err.invariant, str(err), err.residual))
        return EXIT_BAD_INPUT
    if args.out:
        _emit(eta.to_dict(), args.out)
    _emit({"kind": eta.kind, "size": eta.size, "z_degree": eta.z_degree,
           "p_residual": eta.p_residual(), "nilpotency_index": eta.nilpotency_index()})
    return EXIT_OK


def _load(args):
    n = parse_signature(args.signature)
    if args.potential == "s6-example":
        return example_s6_potential()
    if args.potential == "probe":
        return timelike_probe_potential(n)
    if args.potential == "zero":
        return zero_potential(n)
    return load_potential(args.potential)


def _cmd_dpw(args) -> int:
    eta = _load(args)
    frame = picard_integrate(eta, z0=complex(args.z0.replace("i", "j")))
    if args.out:
        _emit(frame.to_dict(), args.out)
    _emit({"steps_used": frame.steps_used, "lam_degree": frame.lam_degree,
           "z_degree": frame.z_degree, "maurer_cartan_residual": frame.residual})
    return EXIT_OK


def _cmd_factor(args) -> int:
    if args.input:
        with open(args.input) as fh:
            x = Loop.from_json(fh.read())
    else:
        z = complex(args.z.replace("i", "j"))
        x = picard_integrate(_load(args)).loop_at(z)
    try:
        if args.action == "birkhoff":
            b = birkhoff(x)
            out = {"in_big_cell": b.in_big_cell, "residual": b.residual,
                   "consistency": b.consistency, "F_minus": b.F_minus.to_dict()}
        elif args.action == "iwasawa":
            r = iwasawa(x, args.form, tol=args.tol)
            out = {"residual": r.residual, "reality_residual": r.reality_residual,
                   "twist_residual": r.twist_residual, "gauge_note": r.gauge_note,
                   "F_real": r.F_real.to_dict()}
        else:
            out = duality_check(x, tol=args.tol)
    except FactorizationError as err:
        _emit(_failure("factorization", str(err), getattr(err, "residual", None)))
        return EXIT_CHECK_FAILED
    _emit(out)
    return EXIT_OK


def _cmd_harmonic(args) -> int:
    eta = _load(args)
    xs, ys = parse_grid(args.grid)
    lams = parse_lambdas(args.lambdas)
    fr = frame_grid(eta, xs, ys, options=FrameOptions(form=args.form))
    flat = flatness_residual(fr, lams, stencil=args.stencil)
    if args.csv:
        write_grid_csv(fr, flat, args.csv)
    out = {"singular_points": int(fr.singular.sum()),
           "flatness_per_lambda": [[l, v] for l, v in zip(flat.lambdas, flat.per_lambda)],
           "stencil": flat.stencil, "step": flat.step}
    if args.report in ("uniton", "all"):
        u = uniton_degree(extended_solution(fr))
        out["uniton_degree"] = u.degree
        out["raw_adjoint_degree"] = u.raw_degree
    _emit(out)
    return EXIT_OK


def _cmd_willmore(args) -> int:
    xs, ys = parse_grid(args.grid)
    lam = parse_lambdas(args.lambdas)[0]
    if args.surface == "s6":
        s = sample_s6(xs, ys, lam)
    else:
        if not args.f:
            _emit(_failure("s4 data", "willmore s4 needs --f f1 f2 f3 f4"))
            return EXIT_BAD_INPUT
        fs = [_parse_poly(p) for p in args.f]
        try:
            s = sample_s4(fs, xs, ys, lam)
        except PotentialError as err:
            _emit(_failure(err.invariant, str(err), err.residual))
            return EXIT_BAD_INPUT
    report = verify_surface(s) if min(s.shape) >= 5 else {}
    report.update(s.diagnostics)
    if args.out:
        if args.out.endswith(".obj"):
            proj = None if args.project is None else args.project.split(",")
            v, t = export_mesh(s, args.out, proj)
            report["mesh"] = {"vertices": v, "triangles": t}
        else:
            export_csv(s, args.out)
    _emit(report)
    return EXIT_OK


def _cmd_run(args) -> int:
    if args.config:
        with open(args.config) as fh:
            data = json.load(fh)
        cfg = PipelineConfig(**{k: v for k, v in data.items() if k != "tolerances"})
        if "tolerances" in data:
            cfg.tolerances = TOLERANCES.updated(**data["tolerances"])
        if isinstance(cfg.grid, list):
            cfg.grid = tuple(tuple(a) for a in cfg.grid)
    else:
        xs, ys = args.grid.split(",")
        cfg = PipelineConfig(
            source=args.source,
            grid=tuple((float(a), float(b), int(n)) for a, b, n in (s.split(":") for s in (xs, ys))),
            lambdas=parse_lambdas(args.lambdas), mode=args.mode, out_dir=args.out_dir,
            s4_derivatives=[_parse_poly(p) for p in args.f_prime] if args.f_prime else None)
    status, report = run_pipeline(cfg)
    _emit(report)
    return status


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="unitonlab", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("roots", help="canonical elements and gradings")
    r.add_argument("action", choices=["grade", "list"])
    r.add_argument("--m", type=int, default=4)
    r.add_argument("--selector", default="1", help="comma separated 1-based simple-root indices")
    r.set_defaults(func=_cmd_roots)

    q = sub.add_parser("potential", help="build or check a normalized potential")
    q.add_argument("kind", choices=["s6-example", "s4", "probe", "zero", "file"])
    q.add_argument("--file")
    q.add_argument("--f-prime", nargs=4, metavar="COEFFS",
                   help="f1'..f4' as comma separated coefficients, lowest degree first")
    q.add_argument("--signature", default="1,7", help="metric signature 1,n+3")
    q.add_argument("--out")
    q.set_defaults(func=_cmd_potential)

    d = sub.add_parser("dpw", help="exact Picard integration")
    d.add_argument("action", choices=["integrate"])
    d.add_argument("--potential", default="s6-example", help="JSON file, s6-example, probe or zero")
    d.add_argument("--signature", default="1,7")
    d.add_argument("--z0", default="0")
    d.add_argument("--out")
    d.set_defaults(func=_cmd_dpw)

    f = sub.add_parser("factor", help="Birkhoff / Iwasawa / duality at one point")
    f.add_argument("action", choices=["birkhoff", "iwasawa", "duality"])
    f.add_argument("--in", dest="input", help="loop JSON (default: F_- of --potential at --z)")
    f.add_argument("--potential", default="s6-example")
    f.add_argument("--signature", default="1,7")
    f.add_argument("--z", default="0.5+0.5i")
    f.add_argument("--form", choices=["compact", "noncompact"], default="compact")
    f.add_argument("--tol", type=float, default=TOLERANCES.iwasawa_reconstruction)
    f.set_defaults(func=_cmd_factor)

    h = sub.add_parser("harmonic", help="frame grids and flatness")
    h.add_argument("action", choices=["frames"])
    h.add_argument("--potential", default="s6-example")
    h.add_argument("--signature", default="1,7")
    h.add_argument("--grid", default="-1:1:21,-1:1:21")
    h.add_argument("--lambda", dest="lambdas", default="1,i,-1")
    h.add_argument("--form", choices=["compact", "noncompact"], default="compact")
    h.add_argument("--stencil", choices=["grid", "local"], default="local")
    h.add_argument("--report", choices=["flatness", "uniton", "all"], default="flatness")
    h.add_argument("--csv")
    h.set_defaults(func=_cmd_harmonic)

    w = sub.add_parser("willmore", help="closed-form surfaces and mesh export")
    w.add_argument("surface", choices=["s6", "s4"])
    w.add_argument("--grid", default="-1.5:1.5:41,-1.5:1.5:41")
    w.add_argument("--lambda", dest="lambdas", default="1")
    w.add_argument("--f", nargs=4, metavar="COEFFS", help="f1..f4 for s4, lowest degree first")
    w.add_argument("--out", help="mesh.obj or samples.csv")
    w.add_argument("--project", help="three 1-based coordinate indices for the OBJ")
    w.set_defaults(func=_cmd_willmore)

    u = sub.add_parser("run", help="end-to-end pipeline")
    u.add_argument("--config", help="JSON with PipelineConfig fields")
    u.add_argument("--source", default="s6-example")
    u.add_argument("--grid", default="-1:1:21,-1:1:21")
    u.add_argument("--lambda", dest="lambdas", default="1,0.70710678118654757+0.70710678118654757i,i,-1")
    u.add_argument("--mode", choices=["compact", "noncompact", "duality"], default="compact")
    u.add_argument("--f-prime", nargs=4, metavar="COEFFS")
    u.add_argument("--out-dir")
    u.set_defaults(func=_cmd_run)
    return p


_VALUE_FLAGS = ("--grid", "--z", "--z0", "--lambda")


def _join_negative_values(argv: list[str]) -> list[str]:
    """Rewrite ``--grid -1:1:5,...`` as ``--grid=-1:1:5,...`` so argparse accepts it."""
    out: list[str] = []
    it = iter(argv)
    for tok in it:
        if tok in _VALUE_FLAGS:
            nxt = next(it, None)
            out.append(tok if nxt is None else f"{tok}={nxt}")
        else:
            out.append(tok)
    return out


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(_join_negative_values(argv))
    try:
        return int(args.func(args))
    except (GridError, PotentialError, OSError, ValueError) as err:
        _emit(_failure(getattr(err, "invariant", "input"), str(err)))
        return EXIT_BAD_INPUT
