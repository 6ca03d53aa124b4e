"""Acceptance criteria, each run at its stated tolerance and time budget."""

import math
import time

import numpy as np
import pytest

from hplab.adjoint import estimate_eta
from hplab.coefficients import ScatterConfig
from hplab.constants import IngredientConstants, composed_theorem1, theorem1_constants
from hplab.dtn import build_dtn
from hplab.exact import mie_solution, plane_wave
from hplab.experiments import SweepSpec, bump_preset, run_bad_data_demo, run_sweep
from hplab.fem import assemble_2d, assemble_reference, astar_system, elliptic_project, solve
from hplab.mesh import mesh_annulus, mesh_refine, prolongation
from hplab.norms import cosc_estimate, l2_norm_vector
from hplab.rays import flowout_geometry, verify_flowout_claims

pytestmark = pytest.mark.acceptance

K_1D = (10, 20, 40, 80, 160)
LADDER = (0.2, 0.1, 0.05, 0.025)


def _fmt(xs):
    return "[" + ", ".join(f"{x:.4g}" for x in xs) + "]"


def _slope(xs, ys):
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])


def _nested_ladder():
    """Meshes with h = 0.2, 0.1, 0.05, 0.025 plus one finer level, all nested."""
    levels = [mesh_annulus(1.0, 2.0, LADDER[0])]
    for _ in range(len(LADDER)):
        levels.append(mesh_refine(levels[-1], project_boundary=False))
    return levels


def test_criterion_01_threshold_boundedness_1d(report):
    t = time.perf_counter()
    rows = run_sweep(SweepSpec("model1d", K_1D, rule="k32", c=0.5))
    dt = time.perf_counter() - t
    errs = [r.rel_err_h1k for r in rows]
    spread = max(errs) / min(errs)
    ok = all(r.ok for r in rows) and spread <= 2.0 and dt < 10
    assert report(1, ok, f"rel errors {_fmt(errs)}, max/min {spread:.3f} (need <= 2)", dt)


def test_criterion_02_pollution_1d(report):
    t = time.perf_counter()
    rows = run_sweep(SweepSpec("model1d", K_1D, rule="hk", c=0.5))
    dt = time.perf_counter() - t
    errs = [r.rel_err_h1k for r in rows]
    ratio = errs[-1] / errs[0]
    ok = all(b > a for a, b in zip(errs, errs[1:])) and ratio >= 2 and dt < 10
    assert report(2, ok, f"rel errors {_fmt(errs)}, final/initial {ratio:.3f} (need >= 2)", dt)


def test_criterion_03_boundedness_disk(report):
    t = time.perf_counter()
    rows = run_sweep(SweepSpec("disk2d", (10, 20, 40), rule="k32", c=1.8))
    dt = time.perf_counter() - t
    errs = [r.rel_err_h1k for r in rows]
    spread = max(errs) / min(errs)
    ok = all(r.ok for r in rows) and rows[-1].dofs <= 400_000 and spread <= 2.5 and dt < 300
    assert report(3, ok, f"c = 1.8, DOFs at k=40 {rows[-1].dofs}, rel errors {_fmt(errs)}, "
                         f"max/min {spread:.3f} (need <= 2.5)", dt)


def test_criterion_04_quasi_optimality(report):
    t = time.perf_counter()
    rows = run_sweep(SweepSpec("disk2d", (10, 20, 30), rule="hk2", c=6.5))
    dt = time.perf_counter() - t
    ratios = [r.quasi_opt_ratio for r in rows]
    ok = all(r.ok for r in rows) and max(ratios) <= 3 and dt < 300
    assert report(4, ok, f"c = 6.5, DOFs {[r.dofs for r in rows]}, Galerkin/interpolant "
                         f"{_fmt(ratios)} (need <= 3)", dt)


def test_criterion_05_oscillation(report):
    t = time.perf_counter()
    vals = [cosc_estimate(mie_solution(k, 1.0, 2.0), mesh_annulus(1.0, 2.0, 1.0 / k), k)
            for k in (10.0, 20.0, 40.0, 80.0)]
    pw = cosc_estimate(plane_wave(10.0), mesh_annulus(0.0, 2.0, 0.1), 10.0)
    dt = time.perf_counter() - t
    spread = max(vals) / min(vals)
    ok = spread <= 2 and abs(pw - 1 / math.sqrt(2)) <= 1e-6 and dt < 120
    assert report(5, ok, f"c_osc {_fmt(vals)}, spread {spread:.4f} (need <= 2); plane wave "
                         f"{pw:.10f} vs 1/sqrt(2)", dt)


def _random_traces(rng, dtn, nodes, count):
    nb = len(dtn.boundary_nodes)
    theta = np.arctan2(nodes[:, 1], nodes[:, 0])
    out = []
    for i in range(count):
        if i % 2 == 0:
            out.append(rng.standard_normal(nb) + 1j * rng.standard_normal(nb))
        else:
            n0 = int(rng.integers(1, int(dtn.k * dtn.R) + 2))
            a = rng.standard_normal(2 * n0 + 1) + 1j * rng.standard_normal(2 * n0 + 1)
            out.append(np.exp(1j * np.outer(theta, np.arange(-n0, n0 + 1))) @ a)
    return out


def _random_volume_field(rng, system, radius, theta, low_mode):
    """Nodal noise on the free DOFs, or a radial ramp times a random low-mode series."""
    if not low_mode:
        u = np.zeros(system.n_nodes, complex)
        u[system.free] = rng.standard_normal(system.n_dofs) + 1j * rng.standard_normal(system.n_dofs)
        return u
    n0 = int(rng.integers(1, int(system.k * 2.0) + 2))
    a = rng.standard_normal(2 * n0 + 1) + 1j * rng.standard_normal(2 * n0 + 1)
    return (radius - 1.0) * (np.exp(1j * np.outer(theta, np.arange(-n0, n0 + 1))) @ a)


def test_criterion_06_dtn_inequalities(report):
    t = time.perf_counter()
    rng = np.random.default_rng(6)
    worst_coer, stable, details = math.inf, True, []
    for k in (10.0, 40.0):
        mesh = mesh_annulus(1.0, 2.0, min(0.1, 2.0 / k))
        system = assemble_2d(ScatterConfig(k=k), mesh)
        dtn = system.dtn
        bn = dtn.boundary_nodes
        floor = float(np.min(-dtn.symbols.real))
        traces = _random_traces(rng, dtn, mesh.vertices[bn], 100)
        coer = min(-dtn.form(p, p).real / (floor * dtn.l2_norm_sq(p)) for p in traces)
        worst_coer = min(worst_coer, coer)
        # continuity: |<DtN gamma u, gamma v>| / (|u|_{H^1_k} |v|_{H^1_k}) on discrete pairs
        KI, MI = assemble_reference(mesh)
        radius = np.hypot(mesh.vertices[:, 0], mesh.vertices[:, 1])
        theta = np.arctan2(mesh.vertices[:, 1], mesh.vertices[:, 0])

        def h1k(u):
            return math.sqrt(np.vdot(u, KI @ u).real + k * k * np.vdot(u, MI @ u).real)

        cont = []
        for i in range(200):
            u = _random_volume_field(rng, system, radius, theta, i % 2 == 1)
            v = _random_volume_field(rng, system, radius, theta, i % 4 >= 2)
            cont.append(abs(dtn.form(u[bn], v[bn])) / (h1k(u) * h1k(v)))
        m100, m200 = max(cont[:100]), max(cont)
        change = (m200 - m100) / m100
        stable &= math.isfinite(m200) and change < 0.1
        details.append(f"k={k:g}: coercivity ratio {coer:.3f}, continuity max "
                       f"{m100:.4g} -> {m200:.4g} ({100 * change:.1f}%)")
    dt = time.perf_counter() - t
    ok = worst_coer >= 0.9 and stable and dt < 60
    assert report(6, ok, "; ".join(details) + " (need ratio >= 0.9, change < 10%)", dt)


def test_criterion_07_garding(report):
    t = time.perf_counter()
    rng = np.random.default_rng(7)
    worst, count = math.inf, 0
    A, n = bump_preset()
    for k in (10.0, 40.0):
        mesh = mesh_annulus(1.0, 2.0, min(0.1, 2.0 / k))
        KI, MI = assemble_reference(mesh)
        for cfg in (ScatterConfig(k=k), ScatterConfig(k=k, A=A, n=n)):
            s = assemble_2d(cfg, mesh)
            a_min, n_max = cfg.A_bounds[0], cfg.n_bounds[1]
            for _ in range(100):
                v = np.zeros(mesh.n_vertices, complex)
                v[s.free] = rng.standard_normal(s.n_dofs) + 1j * rng.standard_normal(s.n_dofs)
                mass = np.vdot(v, MI @ v).real
                lhs = s.form(v, v).real
                rhs = a_min * (np.vdot(v, KI @ v).real + k * k * mass) - k * k * (n_max + a_min) * mass
                worst = min(worst, (lhs - rhs) / abs(rhs))
                count += 1
    dt = time.perf_counter() - t
    ok = worst >= -1e-9 and dt < 60
    assert report(7, ok, f"{count} vectors, min relative slack {worst:.3e} (need >= -1e-9)", dt)


def test_criterion_08_elliptic_projection(report):
    t = time.perf_counter()
    k = 10.0
    cfg = ScatterConfig(k=k)
    levels = _nested_ladder()
    fine = levels[-1]
    sf = assemble_2d(cfg, fine)
    uf = solve(sf)
    star_f = astar_system(sf)
    ratios = []
    for coarse in levels[:-1]:
        P = prolongation(coarse, fine)
        w = elliptic_project(astar_system(assemble_2d(cfg, coarse)), star_f, uf, P)
        e = uf.nodal - P @ w.nodal
        l2 = l2_norm_vector(fine, e)
        ratios.append(l2 / math.sqrt(star_f.form(e, e).real + k * k * l2 * l2))
    dt = time.perf_counter() - t
    hs = [m.h for m in levels[:-1]]
    slope = _slope(hs, ratios)
    ok = abs(slope - 1.0) <= 0.25 and dt < 180
    assert report(8, ok, f"L2/star ratios {_fmt(ratios)}, slope {slope:.3f} (need 1 +- 0.25)", dt)


def test_criterion_09_adjoint_approximability(report):
    t = time.perf_counter()
    k = 10.0
    cfg = ScatterConfig(k=k)
    scaled = []
    for h in LADDER:
        coarse = mesh_annulus(1.0, 2.0, h)
        fine = mesh_refine(mesh_refine(coarse, project_boundary=False), project_boundary=False)
        est = estimate_eta(cfg, coarse, fine, 16, seed=9)
        scaled.append(est.eta_hat / (coarse.h * k))
    dt = time.perf_counter() - t
    spread = max(scaled) / min(scaled)
    ok = spread <= 2 and dt < 600
    assert report(9, ok, f"eta/(hk) {_fmt(scaled)}, spread {spread:.3f} (need <= 2)", dt)


def test_criterion_10_ray_geometry(report):
    t = time.perf_counter()
    failures = []
    for rho in (1.5, 2.0, 8.0):
        for seed in range(1, 11):
            rep = verify_flowout_claims(1.0, rho, 10_000, seed=seed)
            if not rep.all_pass:
                failures.append((rho, seed))
    grid = np.linspace(1.01, 10.0, 100)
    orders = [flowout_geometry(1.0, r).length_order() for r in grid]
    strict = sum(s for s, _ in orders)
    weak = sum(w for _, w in orders)
    gap = max(abs(flowout_geometry(1.0, r).L1 - 2 * flowout_geometry(1.0, r).t0) for r in grid)
    dt = time.perf_counter() - t
    ok = not failures and strict == len(grid) and weak == len(grid) and dt < 30
    assert report(10, ok, f"Monte-Carlo failures {len(failures)}/30 runs; L1 < 2t0 on {strict}/100, "
                          f"2t0 <= L2 on {weak}/100, max |L1 - 2t0| {gap:.2e}", dt)


def test_criterion_11_adversarial_data(report):
    t = time.perf_counter()
    rows = run_bad_data_demo((10, 20, 40), exponent=2.0)
    bounded = run_sweep(SweepSpec("model1d", K_1D, rule="k32", c=0.5))
    dt = time.perf_counter() - t
    errs = [r.rel_err_h1k for r in rows]
    ratio = errs[-1] / errs[0]
    ref = [r.rel_err_h1k for r in bounded]
    spread = max(ref) / min(ref)
    ok = all(b > a for a, b in zip(errs, errs[1:])) and ratio >= 2 and spread <= 2 and dt < 30
    assert report(11, ok, f"bad-data rel errors {_fmt(errs)}, final/initial {ratio:.3f} (need >= 2); "
                          f"f = 1 spread {spread:.3f} (need <= 2)", dt)


def test_criterion_12_constants_composition(report):
    t = time.perf_counter()
    rng = np.random.default_rng(12)
    worst = 0.0
    for _ in range(100):
        v = np.exp(rng.uniform(-2.0, 2.0, 16))
        k0 = v[8]
        c = IngredientConstants(A_min=v[0], A_max=v[0] * (1 + v[1]), n_min=v[2], n_max=v[2] * (1 + v[3]),
                                C_DtN1=v[4], C_DtN2=v[5], C_sol=v[6], R=v[7], k0=k0,
                                R0=(1 + v[9]) / k0, C_osc=v[10], C_PF=v[11], C_H2=v[12],
                                C_int=v[13], C_MS=v[14])
        for a, b in zip(theorem1_constants(c), composed_theorem1(c)):
            worst = max(worst, abs(a - b) / abs(a))
    dt = time.perf_counter() - t
    ok = worst <= 1e-12 and dt < 1
    assert report(12, ok, f"max relative mismatch {worst:.2e} over 100 draws (need <= 1e-12)", dt)
