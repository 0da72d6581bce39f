"""Command line front end.

Every subcommand prints a single JSON report object on stdout (or to
--out); reports are deterministic for fixed flags and seed, so wall time
goes to stderr only.  SVG and CSV artifacts are written only to paths
given explicitly.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time

import numpy as np

from . import __version__, bounds, catalog, contact, foliation, levi
from .errors import ContactLabError, InsufficientData
from .manifold import EvalContext, load_spec
from .tensor import DEFAULT_FD, FDConfig, sectional

SCHEMA = "contactlab/1"


# --- flag parsing helpers --------------------------------------------------

def _parse_point(text):
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("point must be x,y,z")
    return [float(p) for p in parts]


def _parse_region(text):
    out = []
    for axis in text.split(","):
        lo, _, hi = axis.partition(":")
        if not _ or hi == "":
            raise argparse.ArgumentTypeError(
                "region must be x0:x1,y0:y1,z0:z1")
        out.append((float(lo), float(hi)))
    if len(out) != 3:
        raise argparse.ArgumentTypeError("region needs 3 axes")
    return tuple(out)


def _parse_range(text):
    lo, _, hi = text.partition(":")
    if hi == "":
        raise argparse.ArgumentTypeError("range must be a:b")
    return float(lo), float(hi)


def _parse_grid(text):
    parts = text.lower().split("x")
    if len(parts) not in (2, 3):
        raise argparse.ArgumentTypeError("grid must be NxM or NxMxK")
    return tuple(int(p) for p in parts)


def _common_flags(sp, point=False):
    src = sp.add_mutually_exclusive_group(required=True)
    src.add_argument("--spec", help="path to a chart JSON document")
    src.add_argument("--catalog", help="built-in entry name")
    if point:
        sp.add_argument("--point", type=_parse_point)
    sp.add_argument("--region", type=_parse_region)
    sp.add_argument("--grid", type=_parse_grid)
    sp.add_argument("--fd-step", type=float)
    sp.add_argument("--ode-step", type=float, default=1e-3)
    sp.add_argument("--tol", type=float, default=1e-4)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", help="write the JSON report here, not stdout")
    sp.add_argument("--threads", type=int, default=1,
                    help="worker cap for grid sweeps (recorded in report)")


def _load(args):
    """(ctx, entry-or-None, parameters dict)."""
    if args.catalog:
        entry = catalog.catalog_get(args.catalog)
        spec = entry.spec
    else:
        entry = None
        with open(args.spec, "rb") as fh:
            spec = load_spec(fh.read())
    ctx = EvalContext(spec)
    fd = DEFAULT_FD if args.fd_step is None else FDConfig(h=args.fd_step)
    region = args.region or (entry.region if entry else None)
    grid = args.grid or (entry.grid if entry else (5, 5, 5))
    params = {
        "fd_step": fd.h, "ode_step": args.ode_step, "tol": args.tol,
        "seed": args.seed, "threads": args.threads,
    }
    if region:
        params["region"] = [list(ax) for ax in region]
        params["grid"] = list(grid)
    return ctx, entry, fd, region, grid, params


def _finish(args, report):
    def default(o):
        if isinstance(o, np.ndarray):
            return o.tolist()
        if isinstance(o, (np.floating, np.integer)):
            return o.item()
        if o == math.inf:
            return "infinity"
        raise TypeError(type(o).__name__)

    text = json.dumps(report, sort_keys=True, indent=2, default=default)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        sys.stdout.write(text + "\n")
    return 0


def _report(command, ctx, params, results, warnings=()):
    return {
        "schema": SCHEMA,
        "version": __version__,
        "command": command,
        "spec": {"name": ctx.spec.name, "sha256": ctx.spec.sha256()},
        "parameters": params,
        "results": results,
        "warnings": list(warnings),
    }


def _need_region(region):
    if region is None:
        raise InsufficientData(
            "this command needs --region (no catalog default available)")


def _curvature(args, ctx, entry):
    if entry is not None:
        curv = bounds.curvature_from_known(ctx.spec)
        if entry.A_override is not None:
            curv = bounds.CurvatureData(
                K_upper=curv.K_upper, sec_abs_max=curv.sec_abs_max,
                ric_reeb_min=curv.ric_reeb_min, A_override=entry.A_override,
                provenance={**curv.provenance, "A": "catalog"})
        return curv
    return bounds.curvature_from_known(ctx.spec, provenance="user")


# --- subcommands -----------------------------------------------------------

def cmd_check(args):
    ctx, entry, fd, region, grid, params = _load(args)
    _need_region(region)
    cls = contact.classify_compatibility(ctx, region, grid, args.tol, fd)
    results = {
        "class": cls.cls, "tol": cls.tol, "max_defect": cls.max_defect,
        "rho_deviation": cls.rho_deviation, "theta_spread": cls.theta_spread,
        "theta_one_deviation": cls.theta_one_deviation,
        "n_points": cls.n_points,
    }
    return _finish(args, _report("check", ctx, params, results))


def cmd_invariants(args):
    ctx, entry, fd, region, grid, params = _load(args)
    if args.point is None:
        raise InsufficientData("invariants needs --point")
    p = np.asarray(args.point)
    params["point"] = args.point
    data = contact.contact_point_data(ctx, p, fd)
    he = contact.h_endomorphism(ctx, p, fd)
    results = {
        "reeb": data.R_alpha.tolist(),
        "rho": float(data.rho),
        "rho_alpha": float(data.rho_alpha),
        "theta_prime": float(data.theta_prime),
        "defect": float(data.defect),
        "n": data.n.tolist(),
        "mean_curvature": float(contact.mean_curvature(ctx, p, fd)),
        "extrinsic_curvature": float(contact.extrinsic_curvature(ctx, p, fd)),
        "nabla_n_n_norm": float(ctx.norm(p, contact.nabla_n_n(ctx, p, fd))),
        "h_norm": float(he.norm),
        "h_heuristic": he.heuristic,
    }
    return _finish(args, _report("invariants", ctx, params, results))


def cmd_bound(args):
    ctx, entry, fd, region, grid, params = _load(args)
    _need_region(region)
    params["method"] = args.method
    curv = _curvature(args, ctx, entry)
    known = ctx.spec.known
    if args.method in ("main", "geometric", "tube"):
        compat = contact.classify_compatibility(ctx, region, grid,
                                                args.tol, fd)
    if args.method == "main":
        rep = bounds.bound_main(ctx, curv, known.inj_radius,
                                known.conv_radius, compat)
    elif args.method == "weak":
        rep = bounds.bound_weak(ctx, curv, known.conv_radius,
                                region, grid, fd)
    elif args.method == "geometric":
        rep = bounds.bound_geometric(ctx, curv, known.inj_radius,
                                     region, grid, fd, compat)
    else:
        rep = bounds.bound_reeb_tube(ctx, curv, args.inj_gamma,
                                     region, grid, fd, compat)
    return _finish(args, _report("bound", ctx, params, rep.as_dict(),
                                 rep.warnings))


def cmd_criteria(args):
    ctx, entry, fd, region, grid, params = _load(args)
    _need_region(region)
    params["assert_complete"] = args.assert_complete
    params["assert_closed"] = args.assert_closed
    curv = _curvature(args, ctx, entry)
    hyp = bounds.criterion_hyperbolic(ctx, curv, region, grid, fd,
                                      complete=args.assert_complete)
    qg = bounds.criterion_quasi_geodesic(ctx, curv, region, grid, fd,
                                         closed=args.assert_closed)
    print(f"hyperbolic: {hyp.verdict}", file=sys.stderr)
    print(f"quasi-geodesic: {qg.verdict}", file=sys.stderr)
    results = {"hyperbolic": hyp.as_dict(), "quasi_geodesic": qg.as_dict()}
    return _finish(args, _report("criteria", ctx, params, results))


def cmd_foliation(args):
    ctx, entry, fd, region, grid, params = _load(args)
    center = np.asarray(args.point if args.point else [0.0, 0.0, 0.0])
    sphere_grid = args.grid if args.grid else (64, 128)
    if len(sphere_grid) != 2:
        raise InsufficientData("foliation --grid must be NxM (phi x psi)")
    params.update({"point": list(map(float, center)), "radius": args.radius,
                   "grid": list(sphere_grid)})
    from .geodesic import sphere_chart
    chart = sphere_chart(ctx, center, args.radius, sphere_grid, fd,
                         args.ode_step)
    trace = foliation.trace_foliation(chart)
    closed = foliation.detect_closed_leaves(trace)
    cls = foliation.classify_sphere(trace, closed)
    if args.assert_closed_leaves and not closed:
        raise InsufficientData("asserted closed leaves, none detected")
    if args.assert_complete_trace and any(
            leaf.end_state == foliation.LEFT_RESOLUTION
            for leaf in trace.leaves):
        raise InsufficientData("asserted complete traces, budget exhausted")
    if args.out_csv:
        foliation.export_csv(trace, args.out_csv)
    if args.svg:
        foliation.export_svg(trace, args.svg, closed)
    results = {
        "singularities": [{"phi": s.phi, "psi": s.psi, "sign": s.sign}
                          for s in trace.singularities],
        "leaves": [{"end_state": leaf.end_state,
                    "n_points": int(len(leaf.points)),
                    "max_alpha_residual": float(np.max(leaf.alpha_residual))}
                   for leaf in trace.leaves],
        "closed_leaves": [{"phi": r.phi, "psi": r.psi,
                           "residual": r.residual,
                           "orientation": r.orientation} for r in closed],
        "classification": cls,
    }
    return _finish(args, _report("foliation", ctx, params, results))


def cmd_tau_scan(args):
    ctx, entry, fd, region, grid, params = _load(args)
    center = np.asarray(args.center if args.center else [0.0, 0.0, 0.0])
    r_min, r_max = args.range
    sphere_grid = args.grid if args.grid and len(args.grid) == 2 else (64, 128)
    params.update({"center": list(map(float, center)),
                   "range": [r_min, r_max], "grid": list(sphere_grid)})
    compatible = None
    if region is not None:
        cls = contact.classify_compatibility(ctx, region,
                                             entry.grid if entry else (5, 5, 5),
                                             args.tol, fd)
        compatible = contact.compat_at_least(cls, "Compatible")
    res = foliation.tau_scan(ctx, center, r_min, r_max, grid=sphere_grid,
                             fd=fd, ode_h=args.ode_step,
                             compatible=compatible)
    return _finish(args, _report("tau-scan", ctx, params, res))


def cmd_verify_identities(args):
    ctx, entry, fd, region, grid, params = _load(args)
    _need_region(region)
    params["samples"] = args.samples
    rng = np.random.default_rng(args.seed)
    lo = np.array([ax[0] for ax in region])
    hi = np.array([ax[1] for ax in region])
    pts = lo + (hi - lo) * rng.random((args.samples, 3))

    results = {}
    warnings = []
    g = ctx.metric(pts)

    def norms(w):
        return np.sqrt(np.einsum("...ij,...i,...j->...", g, w, w))

    # H + 1/2 n . ln(rho/theta') = 0
    from .tensor import gradient
    data = contact.contact_point_data(ctx, pts, fd)

    def ln_rt(q):
        R = contact.reeb_field(ctx, q, fd)
        gq = ctx.metric(q)
        rho = np.sqrt(np.einsum("...ij,...i,...j->...", gq, R, R))
        return np.log(rho / contact.theta_prime(ctx, q, fd))

    grad = gradient(ctx, ln_rt, pts, fd)
    h_vals = contact.mean_curvature(ctx, pts, fd, cross_check=False)
    ddir = np.einsum("...ij,...i,...j->...", g, grad, data.n)
    results["trace_ii"] = float(np.max(np.abs(h_vals + 0.5 * ddir)))

    # nabla_n n + (grad ln rho)^xi = 0
    def ln_rho(q):
        R = contact.reeb_field(ctx, q, fd)
        gq = ctx.metric(q)
        return 0.5 * np.log(np.einsum("...ij,...i,...j->...", gq, R, R))

    glr = gradient(ctx, ln_rho, pts, fd)
    along = np.einsum("...ij,...i,...j->...", g, glr, data.n)
    xi_part = glr - along[..., None] * data.n
    acc = contact.nabla_n_n(ctx, pts, fd)
    results["nabla_n_n"] = float(np.max(norms(acc + xi_part)))

    f1, f2 = contact._mg_fields(ctx, pts, fd)
    results["m_g_two_formulas"] = float(np.max(np.abs(f1 - f2)))

    cls = contact.classify_compatibility(ctx, region, grid, args.tol, fd)
    if contact.compat_at_least(cls, "Compatible"):
        from .tensor import ricci_dir
        sub = pts[:: max(1, len(pts) // 10)]
        res = []
        for q in sub:
            ric = float(ricci_dir(ctx, q, contact.reeb_field(ctx, q, fd), fd))
            th = float(contact.theta_prime(ctx, q, fd))
            hn = float(contact.h_endomorphism(ctx, q, fd).norm)
            res.append(abs(0.5 * ric - (th / 2.0) ** 2 + hn ** 2))
        results["ricci_reeb"] = float(np.max(res))
    else:
        warnings.append("ricci identity skipped: not Compatible on region")

    levi_res = []
    coord_fs = [lambda q: q[..., 0], lambda q: q[..., 1], lambda q: q[..., 2]]
    for i in range(min(args.samples, 20)):
        p = pts[i]
        f = coord_fs[i % 3]
        try:
            v = levi.complex_tangency_sample(ctx, f, p, 1.0, args.seed + i, fd)
        except ContactLabError:
            continue
        levi_res.append(levi.levi_identity_residual(ctx, f, p, 1.0, v, fd))
    if levi_res:
        results["levi_identity"] = float(np.max(levi_res))

    tol = {"trace_ii": 1e-3, "nabla_n_n": 1e-3, "m_g_two_formulas": 1e-3,
           "ricci_reeb": 1e-2, "levi_identity": 1e-3}
    verdict = "holds" if all(results[k] < tol[k] for k in results) else "fails"
    results["verdict"] = verdict
    print(verdict, file=sys.stderr)
    return _finish(args, _report("verify-identities", ctx, params, results,
                                 warnings))


def cmd_catalog(args):
    if args.action == "list":
        report = {"schema": SCHEMA, "version": __version__,
                  "command": "catalog",
                  "results": {"entries": catalog.catalog_list()}}
    else:
        entry = catalog.catalog_get(args.name)
        report = entry.spec.document()
    text = json.dumps(report, sort_keys=True, indent=2)
    if getattr(args, "out", None):
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        sys.stdout.write(text + "\n")
    return 0


# --- entry point -----------------------------------------------------------

def build_parser():
    ap = argparse.ArgumentParser(
        prog="contactlab",
        description="contact-form/metric invariants, tightness-radius "
                    "bounds and sphere foliations on 3-manifold charts")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("check", help="compatibility classification")
    _common_flags(sp)
    sp.set_defaults(fn=cmd_check)

    sp = sub.add_parser("invariants", help="pointwise invariant report")
    _common_flags(sp, point=True)
    sp.set_defaults(fn=cmd_invariants)

    sp = sub.add_parser("bound", help="tightness-radius lower bounds")
    _common_flags(sp)
    sp.add_argument("--method", choices=["main", "weak", "geometric", "tube"],
                    required=True)
    sp.add_argument("--inj-gamma", type=float,
                    help="normal injectivity radius of the Reeb orbit "
                         "(tube method)")
    sp.set_defaults(fn=cmd_bound)

    sp = sub.add_parser("criteria", help="tightness criteria verdicts")
    _common_flags(sp)
    sp.add_argument("--assert-complete", action="store_true",
                    help="assert the metric is complete")
    sp.add_argument("--assert-closed", action="store_true",
                    help="assert the manifold is closed")
    sp.set_defaults(fn=cmd_criteria)

    sp = sub.add_parser("foliation",
                        help="characteristic foliation of a geodesic sphere")
    _common_flags(sp, point=True)
    sp.add_argument("--radius", type=float, required=True)
    sp.add_argument("--out-csv", help="write the leaf polylines as CSV")
    sp.add_argument("--svg", help="render the trace to an SVG file")
    sp.add_argument("--assert-closed-leaves", action="store_true")
    sp.add_argument("--assert-complete-trace", action="store_true")
    sp.set_defaults(fn=cmd_foliation)

    sp = sub.add_parser("tau-scan",
                        help="first sphere radius with a closed leaf")
    _common_flags(sp)
    sp.add_argument("--center", type=_parse_point)
    sp.add_argument("--range", type=_parse_range, required=True)
    sp.set_defaults(fn=cmd_tau_scan)

    sp = sub.add_parser("verify-identities",
                        help="run the internal identity battery")
    _common_flags(sp)
    sp.add_argument("--samples", type=int, default=50)
    sp.set_defaults(fn=cmd_verify_identities)

    sp = sub.add_parser("catalog", help="list or export built-in charts")
    sp.add_argument("action", choices=["list", "export"])
    sp.add_argument("name", nargs="?")
    sp.add_argument("--out")
    sp.set_defaults(fn=cmd_catalog)
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.command == "catalog" and args.action == "export" and not args.name:
        ap.error("catalog export needs an entry name")
    start = time.monotonic()
    try:
        code = args.fn(args)
    except ContactLabError as exc:
        err = {"error": {"code": exc.code, "message": str(exc)}}
        print(json.dumps(err, sort_keys=True), file=sys.stderr)
        return 1
    finally:
        print(f"wall time: {time.monotonic() - start:.3f}s", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
