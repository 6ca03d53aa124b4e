"""Command line entry point: ``hplab <subcommand> [options]``.

Every subcommand accepts ``--config FILE`` with ``key = value`` lines whose
keys are the long option names (dashes or underscores); flags given on the
command line override the file.  Exit status is 0 on success, 2 when some
rows or samples were flagged, and 1 on hard failure.
"""

from __future__ import annotations

import argparse
import math
import sys
import time


EXIT_OK, EXIT_FAIL, EXIT_PARTIAL = 0, 1, 2


def parse_config(text: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = val
    return out


def _floats(text) -> list[float]:
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    return [float(v) for v in str(text).replace(",", " ").split()]


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {text!r}")


def _emit(text: str, path: str | None):
    if path:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------- commands

def cmd_solve1d(args) -> int:
    from .exact import exact_1d
    from .fem import LoadSpec, assemble_1d, solve
    from .formats import write_field, write_mesh
    from .mesh import mesh_interval
    from .norms import rel_error

    n_elem = args.n_elem or math.ceil(1.0 / args.h - 1e-9)
    mesh = mesh_interval(n_elem)
    load = LoadSpec(args.load, exponent=args.exponent)
    system = assemble_1d(args.k, mesh, args.p, load)
    u = solve(system)
    print(f"k={args.k:g} h={mesh.h:.6g} p={args.p} dofs={system.n_dofs} residual={u.residual:.3e}")
    if args.load in ("one", "bad"):
        rep = rel_error(u, exact_1d(args.k, load), args.k)
        print(f"rel_err_h1k={rep.rel_err_h1k:.6e} abs_err_h1k={rep.abs_err_h1k:.6e} "
              f"norm_u={rep.norm_u_h1k:.6e}")
    if args.mesh_out:
        write_mesh(mesh, args.mesh_out)
    if args.field_out:
        write_field(u, args.field_out)
    return EXIT_OK


def _scatter_config(args):
    from .coefficients import ScatterConfig
    from .experiments import bump_preset

    th = math.radians(args.angle)
    kw = dict(k=args.k, R=args.R, a=args.a, direction=(math.cos(th), math.sin(th)), bc=args.bc,
              n_modes=args.modes)
    if args.preset == "bump":
        kw["A"], kw["n"] = bump_preset()
    return ScatterConfig(**kw)


def cmd_solve2d(args) -> int:
    from .exact import mie_solution
    from .fem import assemble_2d, solve
    from .formats import write_field, write_mesh
    from .mesh import mesh_annulus
    from .norms import rel_error

    cfg = _scatter_config(args)
    mesh = mesh_annulus(args.a, args.R, args.h if args.h else args.c * args.k ** -1.5)
    system = assemble_2d(cfg, mesh)
    t0 = time.perf_counter()
    u = solve(system)
    dt = time.perf_counter() - t0
    print(f"k={args.k:g} h={mesh.h:.6g} dofs={system.n_dofs} modes={len(system.d)} "
          f"residual={u.residual:.3e} solve_seconds={dt:.2f}")
    if args.preset == "none" and args.a > 0:
        mie = mie_solution(args.k, args.a, args.R, cfg.direction, cfg.bc)
        rep = rel_error(u, mie, args.k)
        print(f"rel_err_h1k={rep.rel_err_h1k:.6e} abs_err_h1k={rep.abs_err_h1k:.6e} "
              f"norm_u={rep.norm_u_h1k:.6e}")
    if args.mesh_out:
        write_mesh(mesh, args.mesh_out)
    if args.field_out:
        write_field(u, args.field_out)
    return EXIT_OK


def cmd_sweep(args) -> int:
    from .experiments import SweepSpec, rows_to_csv, run_sweep

    spec = SweepSpec(args.problem, tuple(_floats(args.k_list)), rule=args.rule, c=args.c,
                     p=args.p, bc=args.bc, preset=args.preset, seed=args.seed, load=args.load,
                     exponent=args.exponent, a=args.a, R=args.R, max_dofs=args.max_dofs,
                     timing=_bool(args.timing), workers=args.workers)
    rows = run_sweep(spec)
    _emit(rows_to_csv(rows), args.out)
    flagged = [r for r in rows if not r.ok]
    for r in flagged:
        print(f"flagged: k={r.k:g} status={r.status}", file=sys.stderr)
    return EXIT_PARTIAL if flagged else EXIT_OK


def cmd_eta(args) -> int:
    from .adjoint import estimate_eta
    from .mesh import mesh_annulus, mesh_refine

    cfg = _scatter_config(args)
    coarse = mesh_annulus(args.a, args.R, args.h)
    fine = coarse
    for _ in range(args.depth):
        fine = mesh_refine(fine, project_boundary=False)
    est = estimate_eta(cfg, coarse, fine, args.samples, seed=args.seed,
                       projection=args.projection, adapted=not args.no_adapted)
    hk = coarse.h * args.k
    print(f"k={args.k:g} h={coarse.h:.6g} samples={est.sample_count} skipped={est.skipped} "
          f"eta_hat={est.eta_hat:.6e} eta_hat/(hk)={est.eta_hat / hk:.6e}")
    return EXIT_PARTIAL if est.skipped else EXIT_OK


def cmd_rays(args) -> int:
    from .rays import flowout_geometry, verify_flowout_claims

    status = EXIT_OK
    for rho in _floats(args.rho):
        g = flowout_geometry(args.R_sc, rho)
        strict, weak = g.length_order()
        print(f"R_sc={args.R_sc:g} rho={rho:g} rho0={g.rho0:.6g} t0={g.t0:.6g} eps={g.eps:.6g} "
              f"L1={g.L1:.17g} 2t0={2 * g.t0:.17g} L2={g.L2:.17g} "
              f"L1<2t0={strict} 2t0<=L2={weak}")
        for seed in range(args.seed, args.seed + args.seeds):
            rep = verify_flowout_claims(args.R_sc, rho, args.samples, seed)
            print(f"  seed={seed} claim1={rep.claim1_pass}/{rep.claim1_total} "
                  f"claim2={rep.claim2_pass}/{rep.claim2_total} acceptance={rep.acceptance:.4f}")
            if not rep.all_pass:
                status = EXIT_PARTIAL
        if not (strict and weak):
            status = EXIT_PARTIAL
    return status


def cmd_cosc(args) -> int:
    from .exact import mie_solution, plane_wave
    from .mesh import mesh_annulus
    from .norms import cosc_estimate

    ks = _floats(args.k_list)
    vals = []
    for k in ks:
        mesh = mesh_annulus(args.a, args.R, min(args.h_factor / k, 0.5 * (args.R - args.a))
                            if args.a > 0 else args.h_factor / k)
        ev = mie_solution(k, args.a, args.R, bc=args.bc) if args.a > 0 else plane_wave(k)
        c = cosc_estimate(ev, mesh, k)
        vals.append(c)
        print(f"k={k:g} cosc_hat={c:.10f}")
    print(f"max/min={max(vals) / min(vals):.6f}")
    return EXIT_OK


def cmd_constants(args) -> int:
    from .constants import (IngredientConstants, lemma8_eta_bounds, load_ingredients,
                            star_constants, theorem1_constants, theorem2_constants)

    if args.ingredients:
        with open(args.ingredients, encoding="utf-8") as fh:
            c = load_ingredients(fh.read())
    else:
        c = IngredientConstants()
    t1 = theorem1_constants(c)
    t2 = theorem2_constants(c)
    cont, coer, h2 = star_constants(c)
    print(f"p1: C1={t1.C1:.12g} C2={t1.C2:.12g} C3={t1.C3:.12g}")
    print(f"high-order: C1={t2.C1:.12g} C2={t2.C2:.12g} C3={t2.C3:.12g}")
    print(f"star: C_cont={cont:.12g} C_coer={coer:.12g} C_H2={h2:.12g}")
    if args.h and args.k:
        b1, b2 = lemma8_eta_bounds(c, args.h, args.k)
        print(f"eta bounds at h={args.h:g} k={args.k:g}: h2_based={b1:.12g} splitting={b2:.12g}")
        print(f"p1 threshold holds: {t1.threshold_holds(args.h, args.k)} "
              f"bound={t1.bound(args.h, args.k):.12g}")
    return EXIT_OK


def cmd_plot(args) -> int:
    from .plotting import PlotSpec, emit_plot

    spec = PlotSpec(x=args.x, y=args.y, logx=_bool(args.logx), logy=_bool(args.logy),
                    title=args.title)
    emit_plot(args.csv, args.out, spec)
    print(args.out)
    return EXIT_OK


# ---------------------------------------------------------------- parser

def _common_scatter(p):
    p.add_argument("--k", type=float, default=10.0)
    p.add_argument("--a", type=float, default=1.0, help="obstacle radius (0: none)")
    p.add_argument("--R", type=float, default=2.0, help="truncation radius")
    p.add_argument("--bc", choices=("dirichlet", "neumann"), default="dirichlet")
    p.add_argument("--preset", choices=("none", "bump"), default="none")
    p.add_argument("--angle", type=float, default=0.0, help="incidence angle in degrees")
    p.add_argument("--modes", type=int, default=None, help="DtN Fourier modes")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hplab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve1d", help="1-d model problem on (0, 1)")
    p.add_argument("--k", type=float, default=10.0)
    p.add_argument("--h", type=float, default=0.01)
    p.add_argument("--n-elem", type=int, default=None)
    p.add_argument("--p", type=int, default=1, choices=(1, 2, 3))
    p.add_argument("--load", choices=("one", "gaussian", "bad"), default="one")
    p.add_argument("--exponent", type=float, default=2.0)
    p.add_argument("--mesh-out")
    p.add_argument("--field-out")
    p.set_defaults(func=cmd_solve1d)

    p = sub.add_parser("solve2d", help="plane-wave scattering in an annulus")
    _common_scatter(p)
    p.add_argument("--h", type=float, default=None)
    p.add_argument("--c", type=float, default=1.0, help="h = c k^(-3/2) when --h is absent")
    p.add_argument("--mesh-out")
    p.add_argument("--field-out")
    p.set_defaults(func=cmd_solve2d)

    p = sub.add_parser("sweep", help="error sweep over k, CSV output")
    p.add_argument("--problem", choices=("model1d", "disk2d", "bump2d"), default="model1d")
    p.add_argument("--k-list", default="10,20,40")
    p.add_argument("--rule", choices=("hk", "k32", "hk2", "hp"), default="k32")
    p.add_argument("--c", type=float, default=0.5)
    p.add_argument("--p", type=int, default=1)
    p.add_argument("--bc", choices=("dirichlet", "neumann"), default="dirichlet")
    p.add_argument("--preset", choices=("none", "bump"), default="none")
    p.add_argument("--load", choices=("one", "bad"), default="one")
    p.add_argument("--exponent", type=float, default=2.0)
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--R", type=float, default=2.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-dofs", type=int, default=400_000)
    p.add_argument("--timing", default="false", help="record wall time (breaks byte-determinism)")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", help="CSV path (default: stdout)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("eta", help="sampled adjoint approximability")
    _common_scatter(p)
    p.add_argument("--h", type=float, default=0.1)
    p.add_argument("--depth", type=int, default=2)
    p.add_argument("--samples", type=int, default=16)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--projection", choices=("h1k", "elliptic"), default="h1k")
    p.add_argument("--no-adapted", action="store_true")
    p.set_defaults(func=cmd_eta)

    p = sub.add_parser("rays", help="flowout geometry checks")
    p.add_argument("--R-sc", type=float, default=1.0)
    p.add_argument("--rho", default="1.5,2,8")
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--seeds", type=int, default=10)
    p.set_defaults(func=cmd_rays)

    p = sub.add_parser("cosc", help="oscillation ratio of the exact solution")
    p.add_argument("--k-list", default="10,20,40,80")
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--R", type=float, default=2.0)
    p.add_argument("--bc", choices=("dirichlet", "neumann"), default="dirichlet")
    p.add_argument("--h-factor", type=float, default=1.0, help="quadrature mesh h = factor / k")
    p.set_defaults(func=cmd_cosc)

    p = sub.add_parser("constants", help="explicit threshold and bound constants")
    p.add_argument("--ingredients", help="key = value file of ingredient constants")
    p.add_argument("--h", type=float, default=None)
    p.add_argument("--k", type=float, default=None)
    p.set_defaults(func=cmd_constants)

    p = sub.add_parser("plot", help="SVG plot of a sweep CSV")
    p.add_argument("--csv", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--x", default="k")
    p.add_argument("--y", default="rel_err_h1k")
    p.add_argument("--logx", default="true")
    p.add_argument("--logy", default="true")
    p.add_argument("--title", default="")
    p.set_defaults(func=cmd_plot)

    for action in parser._subparsers._group_actions:
        for sp in action.choices.values():
            sp.add_argument("--config", help="key = value defaults file")
    return parser


def _apply_config(parser, argv):
    """Re-parse with defaults taken from ``--config``; flags still win."""
    args = parser.parse_args(argv)
    if not getattr(args, "config", None):
        return args
    with open(args.config, encoding="utf-8") as fh:
        cfg = parse_config(fh.read())
    sub = next(a for a in parser._subparsers._group_actions).choices[args.command]
    known = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, val in cfg.items():
        if key not in known or key in ("config", "help"):
            raise ValueError(f"unknown config key {key!r} for {args.command}")
        action = known[key]
        if action.type is not None:
            val = action.type(val)
        elif isinstance(action, argparse._StoreTrueAction):
            val = _bool(val)
        if action.choices is not None and val not in action.choices:
            raise ValueError(f"config value {val!r} not allowed for {key}")
        defaults[key] = val
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
    except SystemExit as exc:
        return EXIT_FAIL if exc.code else EXIT_OK
    except (OSError, ValueError) as exc:
        print(f"hplab: {exc}", file=sys.stderr)
        return EXIT_FAIL
    try:
        return args.func(args)
    except Exception as exc:  # noqa: BLE001 - reported as a hard failure
        print(f"hplab {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
