"""Command-line orchestration.

Subcommands: sample, verify, plateau, asymptotics, conjugate.  Exit codes:
0 = all checks/solves passed, 1 = a check failed or a solve was rejected,
2 = usage or I/O error.  ``--config file.json`` supplies defaults that
mirror the flags one-to-one; explicitly passed flags win; unknown config
keys are a usage error.  MAXSURF_THREADS caps the numba worker pool
(0 = auto); outputs are byte-identical for any worker count.
"""

import argparse
import json
import sys

import numpy as np

from . import asymptotics as asym
from . import catalog, maxgraph, verify, weierstrass
from .errors import (AdmissibilityError, ConvergenceError, MaxsurfError)

USAGE_ERROR = 2
CHECK_FAILED = 1


def _parse_range(text):
    lo, _, hi = text.partition(":")
    return float(lo), float(hi)


def _parse_res(text):
    a, _, b = text.partition("x")
    return int(a), int(b)


def _parse_floats(text):
    return [float(tok) for tok in text.split(",") if tok]


def _json_dump(obj, path):
    with open(path, "w") as fh:
        json.dump(obj, fh, sort_keys=True, indent=1)
        fh.write("\n")


# --------------------------------------------------------------------------
# per-model verification fixtures (chart patches; h = spacing)
# --------------------------------------------------------------------------

_PATCHES = {
    "helicoid": (0.2, 0.8),
    "catenoid": (1.0, 0.3),
    "enneper1": (0.2, 0.5),
    "enneper2": (0.2, 1.2),
    "plane": (0.0, 0.0),
}


def _patch_immersion(model, h=2e-3, n=61, offset=None):
    if model.chart is not None and model.name in _PATCHES:
        a0, b0 = _PATCHES[model.name]
        imm = catalog.sample_chart(model, (a0, a0 + h * (n - 1), b0, b0 + h * (n - 1)),
                                   (n, n))
    else:
        dom = weierstrass.ParamDomain("rectangle", (0.1, 0.1 + h * (n - 1),
                                                    0.2, 0.2 + h * (n - 1)), (n, n))
        U, V = dom.grid()
        pts = catalog.param_grid(model, U, V)
        uax, vax = dom.axes()
        imm = weierstrass.SampledImmersion(domain=dom, u=uax, v=vax, points=pts)
    if offset is not None:
        imm.points = imm.points + np.asarray(offset, dtype=float)
    return imm


def _verify_reports(model, suite):
    reports = []
    wants = (("curvature", "spacelike", "mirror", "implicit", "acausal", "superharmonic")
             if suite == "all" else (suite,))
    for kind in wants:
        if kind == "curvature":
            if model.name == "sphere-fixture":
                rep = verify.mean_curvature(_patch_immersion(model), tol=1e-6)
            elif model.chart is None:
                if suite != "all":
                    raise MaxsurfError(f"{model.name}: no chart for curvature")
                continue
            else:
                rep = verify.mean_curvature(_patch_immersion(model), tol=1e-6)
            if model.name == "sphere-fixture":
                # negative control: pass means |H| is genuinely away from 0
                rep.passed = rep.max_violation > 1e-3
                rep.name = "mean_curvature_negative_control"
            reports.append(rep)
        elif kind == "spacelike":
            reports.append(verify.spacelike_check(_patch_immersion(model)))
        elif kind == "mirror":
            try:
                data = model.weierstrass(resolution=(48, 48))
            except MaxsurfError:
                if suite == "all":
                    continue
                raise
            if data.mirror is None:
                if suite == "all":
                    continue
                raise MaxsurfError(f"{model.name}: no mirror involution configured")
            rg, rf = weierstrass.mirror_residual(data)
            worst = max(rg, rf)
            reports.append(verify.CheckReport("mirror_symmetry", worst, None,
                                              worst < 1e-12, 1e-12,
                                              {"gauss_residual": rg, "form_residual": rf}))
        elif kind == "implicit":
            if model.implicit is None:
                if suite == "all":
                    continue
                raise MaxsurfError(f"{model.name}: no implicit equation")
            scale = model.known.get("implicit_scale") or 1.0
            mm = np.linspace(0.1, 1.6, 40)
            ss = np.linspace(0.0, np.pi, 41)
            M, S = np.meshgrid(mm, ss, indexing="ij")
            pts = catalog.param_grid(model, M, S)
            res = float(np.abs(catalog.eval_implicit(model, scale * pts)).max())
            reports.append(verify.CheckReport("implicit_consistency", res, None,
                                              res < 1e-10, 1e-10,
                                              {"scale": scale}))
        elif kind == "acausal":
            if model.graph is None:
                if suite == "all":
                    continue
                raise MaxsurfError(f"{model.name}: no entire-graph sampler")
            gg = maxgraph.GridGraph.from_function((-2.0, -2.0), 0.05, 81, 81,
                                                  model.graph)
            margin = maxgraph.acausality_check(gg, (40, 40))
            reports.append(verify.CheckReport("acausality", max(0.0, -margin), None,
                                              margin >= -1e-12, 1e-12,
                                              {"min_norm2": margin}))
        elif kind == "superharmonic":
            if model.chart_factor is None:
                if suite == "all":
                    continue
                raise MaxsurfError(f"{model.name}: no conformal chart factor")
            imm = _patch_immersion(model, offset=(8.0, 0.0, 0.0))
            reports.append(verify.superharmonicity_check(imm, eps=1e-2, tol=1e-8))
        else:
            raise MaxsurfError(f"unknown suite {kind!r}")
    return reports


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def cmd_sample(args):
    model = catalog.get_model(args.model)
    bounds = (*_parse_range(args.u), *_parse_range(args.v))
    res = _parse_res(args.res)
    data = model.weierstrass(bounds=bounds, resolution=res)
    imm = weierstrass.integrate_immersion(data)
    n_sing = sum(len(c.indices) for c in weierstrass.singular_scan(imm, tol=1e-8))
    if args.format == "obj":
        weierstrass.export_obj(imm, args.out)
    else:
        weierstrass.export_csv(imm, args.out, singular_tol=1e-8)
    lo = imm.points.reshape(-1, 3).min(axis=0)
    hi = imm.points.reshape(-1, 3).max(axis=0)
    print(f"sampled {args.model}: {res[0]}x{res[1]} nodes -> {args.out}")
    print(f"bounds x1 [{lo[0]:.6g}, {hi[0]:.6g}] x2 [{lo[1]:.6g}, {hi[1]:.6g}] "
          f"t [{lo[2]:.6g}, {hi[2]:.6g}]")
    print(f"singular nodes (| |g|-1 | <= 1e-8): {n_sing}")
    return 0


def cmd_verify(args):
    if args.model.endswith(".csv"):
        imm = import_csv(args.model)
        reports = []
        if args.suite in ("curvature", "all"):
            reports.append(verify.mean_curvature(imm, tol=1e-6))
        if args.suite in ("spacelike", "all"):
            reports.append(verify.spacelike_check(imm))
        if not reports:
            raise MaxsurfError(f"suite {args.suite!r} unavailable for CSV input")
    else:
        model = catalog.get_model(args.model)
        reports = _verify_reports(model, args.suite)
    lines = [rep.as_json() for rep in reports]
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    sys.stdout.write(text)
    return 0 if all(r.passed for r in reports) else CHECK_FAILED


def import_csv(path) -> weierstrass.SampledImmersion:
    """Re-ingest a cmd_sample CSV into a SampledImmersion."""
    raw = np.genfromtxt(path, delimiter=",", names=True)
    u = np.unique(raw["u"])
    v = np.unique(raw["v"])
    nu, nv = len(u), len(v)
    if nu * nv != len(raw):
        raise MaxsurfError(f"{path}: not a full grid sample")
    pts = np.stack([raw["x1"], raw["x2"], raw["t"]], axis=-1).reshape(nu, nv, 3)
    gauss = (raw["re_g"] + 1j * raw["im_g"]).reshape(nu, nv)
    lam = raw["lambda"].reshape(nu, nv)
    du = u[1] - u[0]
    dv = v[1] - v[0]
    dom = weierstrass.ParamDomain("rectangle", (u[0], u[-1] + 0 * du, v[0], v[-1] + 0 * dv),
                                  (nu, nv))
    return weierstrass.SampledImmersion(domain=dom, u=u, v=v, points=pts,
                                        gauss=gauss, conformal_factor=lam)


def cmd_plateau(args):
    mask_graph = maxgraph.load_gridgraph(args.mask)
    pairs = np.loadtxt(args.boundary, delimiter=",", ndmin=2)
    cfg = maxgraph.SolverConfig(
        eps_reg=args.eps_reg, tol=args.tol,
        max_iters=args.max_iters, relaxation=args.relaxation)
    try:
        sol, stats = maxgraph.solve_plateau(mask_graph, pairs, cfg)
    except AdmissibilityError as exc:
        print(f"admissibility violation: {exc}", file=sys.stderr)
        return CHECK_FAILED
    except ConvergenceError as exc:
        print(f"convergence failure: {exc}", file=sys.stderr)
        return CHECK_FAILED
    maxgraph.save_gridgraph(sol, args.out_prefix + "_solution.csv")
    report = maxgraph.detect_singular(sol, tol=1e-6)
    _json_dump({
        "flagged_nodes": int(len(report.nodes)),
        "segments": [
            {
                "nodes": int(len(seg.indices)),
                "is_point": seg.is_point,
                "direction": None if seg.direction is None else [float(x) for x in seg.direction],
                "lightlike_defect": seg.lightlike_defect,
                "fit_residual": seg.fit_residual,
            } for seg in report.segments
        ],
    }, args.out_prefix + "_singular.json")
    _json_dump({
        "sweeps": stats.sweeps,
        "newton_steps": stats.newton_steps,
        "residual": stats.residual,
        "degenerate": stats.degenerate,
        "clamped_nodes": stats.clamped_nodes,
        "residual_history": stats.residual_history,
    }, args.out_prefix + "_iterations.json")
    print(f"solved: residual {stats.residual:.3e} after {stats.sweeps} sweeps + "
          f"{stats.newton_steps} Newton steps; {stats.clamped_nodes} clamped nodes; "
          f"degenerate={stats.degenerate}")
    return 0


def cmd_asymptotics(args):
    model = catalog.get_model(args.model)
    out = {"model": args.model, "mode": args.mode}
    csv_rows = []
    if args.mode in ("blowdown", "blowup"):
        if model.graph is None:
            raise MaxsurfError(f"{args.model}: no entire-graph sampler")
        scales = _parse_floats(args.scales)
        if not scales or any(s <= 0 for s in scales):
            raise MaxsurfError("positive --scales list required")
        region = _parse_range(args.region)
        # scales are the lambda values; they must progress toward the limit
        diffs = np.diff(scales)
        if args.mode == "blowdown" and np.any(diffs > 0):
            raise MaxsurfError("blowdown scales must decrease toward 0")
        if args.mode == "blowup" and np.any(diffs < 0):
            raise MaxsurfError("blowup scales must increase")
        blown = asym.blow_scale(model.graph, scales, region)
        fit = asym.classify_limit(blown, region)
        out.update({"scales": scales, "region": list(region), "limit": fit.as_dict()})
        for g in blown:
            csv_rows.append((g.scale, float(np.abs(g.u).max()),
                             float(np.abs(g.u - g.r[:, None]).max())))
        csv_header = "scale,sup_abs_u,sup_dist_upper_cone"
    elif args.mode == "tau":
        if model.graph is None:
            raise MaxsurfError(f"{args.model}: no entire-graph sampler")
        radii = _parse_floats(args.radii) if args.radii else list(
            np.logspace(0, 3, 25))
        rep = asym.tau_measures(model.graph, radii, circle_samples=args.circle_samples)
        out.update({"tau": rep.as_dict()})
        for r, tp, tm in zip(rep.radii, rep.tau_plus_r, rep.tau_minus_r):
            csv_rows.append((r, tp, tm))
        csv_header = "r,tau_plus,tau_minus"
    elif args.mode == "rotation":
        if model.boundary_gauss is None:
            raise MaxsurfError(f"{args.model}: no boundary Gauss trace")
        lo, hi = _parse_range(args.range)
        if not lo < hi:
            raise MaxsurfError("bad --range")
        s = np.linspace(lo, hi, args.samples)
        rep = asym.rotation_number(model.boundary_gauss(s), s)
        out.update({"rotation": rep.as_dict()})
        csv_rows.append((lo, hi, rep.raw_change))
        csv_header = "s_min,s_max,raw_change"
    else:
        raise MaxsurfError(f"unknown mode {args.mode!r}")
    _json_dump(out, args.out)
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write(csv_header + "\n")
            for row in csv_rows:
                fh.write(",".join(repr(float(x)) for x in row) + "\n")
    print(json.dumps(out, sort_keys=True))
    return 0


def cmd_conjugate(args):
    if args.grid:
        g = maxgraph.load_gridgraph(args.grid)
        anchor = None
        if args.anchor:
            i, _, j = args.anchor.partition(",")
            anchor = (int(i), int(j))
        direction = -1 if args.inverse else +1
        out, loop = maxgraph.conjugate_graph(g, anchor=anchor, direction=direction)
        maxgraph.save_gridgraph(out, args.out)
        print(f"conjugate graph -> {args.out} (loop residual {loop:.3e})")
        return 0
    model = catalog.get_model(args.model)
    bounds = (*_parse_range(args.u), *_parse_range(args.v))
    res = _parse_res(args.res)
    data = model.weierstrass(bounds=bounds, resolution=res)
    imm = weierstrass.conjugate_immersion(data)
    if args.format == "obj":
        weierstrass.export_obj(imm, args.out)
    else:
        weierstrass.export_csv(imm, args.out)
    print(f"conjugate immersion of {args.model} -> {args.out}")
    return 0


# --------------------------------------------------------------------------
# parser and config merging
# --------------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="maxsurf",
                                description="maximal-surface numerical laboratory")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("sample", help="sample a model surface to OBJ/CSV")
    sp.add_argument("model")
    sp.add_argument("--u", default=None, help="u range a:b")
    sp.add_argument("--v", default=None, help="v range a:b")
    sp.add_argument("--res", default=None, help="resolution NxM")
    sp.add_argument("--format", default=None, choices=["obj", "csv"])
    sp.add_argument("--out", default=None)
    sp.add_argument("--config", default=None)
    sp.set_defaults(fn=cmd_sample,
                    defaults={"u": "-3.14:3.14", "v": "0:2", "res": "128x128",
                              "format": "csv", "out": "sample.csv"})

    vp = sub.add_parser("verify", help="run verification suites")
    vp.add_argument("model", help="model name or sampled CSV path")
    vp.add_argument("--suite", default=None,
                    choices=["curvature", "spacelike", "mirror", "implicit",
                             "acausal", "superharmonic", "all"])
    vp.add_argument("--out", default=None)
    vp.add_argument("--config", default=None)
    vp.set_defaults(fn=cmd_verify, defaults={"suite": "all", "out": ""})

    pp = sub.add_parser("plateau", help="solve a Dirichlet problem from files")
    pp.add_argument("--boundary", default=None, help="CSV of index,value pairs")
    pp.add_argument("--mask", default=None, help="GridGraph CSV (non-NaN = active)")
    pp.add_argument("--eps-reg", dest="eps_reg", type=float, default=None)
    pp.add_argument("--tol", type=float, default=None)
    pp.add_argument("--max-iters", dest="max_iters", type=int, default=None)
    pp.add_argument("--relaxation", type=float, default=None)
    pp.add_argument("--out-prefix", dest="out_prefix", default=None)
    pp.add_argument("--config", default=None)
    pp.set_defaults(fn=cmd_plateau,
                    defaults={"eps_reg": 1e-6, "tol": 1e-10, "max_iters": 0,
                              "relaxation": 0.0, "out_prefix": "plateau"})

    ap = sub.add_parser("asymptotics", help="blow-down/up, tau, rotation experiments")
    ap.add_argument("model")
    ap.add_argument("--mode", default=None,
                    choices=["blowdown", "blowup", "tau", "rotation"])
    ap.add_argument("--scales", default=None, help="comma list of scale factors")
    ap.add_argument("--region", default=None, help="annulus a:b")
    ap.add_argument("--radii", default=None, help="comma list of radii")
    ap.add_argument("--circle-samples", dest="circle_samples", type=int, default=None)
    ap.add_argument("--range", default=None, help="trace range a:b")
    ap.add_argument("--samples", type=int, default=None)
    ap.add_argument("--out", default=None)
    ap.add_argument("--csv", default=None)
    ap.add_argument("--config", default=None)
    ap.set_defaults(fn=cmd_asymptotics,
                    defaults={"mode": "tau", "scales": "1,10,100,1000",
                              "region": "1:2", "radii": "",
                              "circle_samples": 720, "range": "-1000:1000",
                              "samples": 20001, "out": "asymptotics.json",
                              "csv": ""})

    cp = sub.add_parser("conjugate", help="conjugate immersion/graph")
    cp.add_argument("model", nargs="?", default=None)
    cp.add_argument("--grid", default=None, help="GridGraph CSV input")
    cp.add_argument("--anchor", default=None, help="anchor node i,j")
    cp.add_argument("--inverse", action="store_true",
                    help="minimal -> maximal direction")
    cp.add_argument("--u", default=None)
    cp.add_argument("--v", default=None)
    cp.add_argument("--res", default=None)
    cp.add_argument("--format", default=None, choices=["obj", "csv"])
    cp.add_argument("--out", default=None)
    cp.add_argument("--config", default=None)
    cp.set_defaults(fn=cmd_conjugate,
                    defaults={"u": "-3.14:3.14", "v": "0:2", "res": "96x96",
                              "format": "csv", "out": "conjugate.csv"})
    return p


def _merge_config(args):
    defaults = getattr(args, "defaults", {})
    cfg = {}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            cfg = json.load(fh)
        unknown = set(cfg) - set(defaults)
        if unknown:
            raise MaxsurfError(f"unknown config keys: {sorted(unknown)}")
    for key, builtin in defaults.items():
        if getattr(args, key, None) is None:
            setattr(args, key, cfg.get(key, builtin))
    return args


_RANGE_FLAGS = {"--u", "--v", "--range", "--region", "--scales", "--radii"}


def _join_range_tokens(argv):
    """Glue '--u -6.28:6.28' into '--u=-6.28:6.28' so argparse does not
    mistake the negative range for an option."""
    out = []
    skip = False
    for k, tok in enumerate(argv):
        if skip:
            skip = False
            continue
        if tok in _RANGE_FLAGS and k + 1 < len(argv) and argv[k + 1].startswith("-"):
            out.append(f"{tok}={argv[k + 1]}")
            skip = True
        else:
            out.append(tok)
    return out


def main(argv=None):
    parser = build_parser()
    if argv is None:
        argv = sys.argv[1:]
    argv = _join_range_tokens(list(argv))
    try:
        args = parser.parse_args(argv)
        args = _merge_config(args)
        return args.fn(args)
    except (AdmissibilityError, ConvergenceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return CHECK_FAILED
    except MaxsurfError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR


if __name__ == "__main__":
    sys.exit(main())
