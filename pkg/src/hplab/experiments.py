"""Batch sweeps over the wavenumber with CSV output."""

from __future__ import annotations

import csv
import io
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .coefficients import CoefficientField, ScatterConfig
from .exact import exact_1d, mie_solution
from .fem import (DiscreteField, LoadSpec, SingularSystemError, assemble_1d, assemble_2d,
                  dofs_1d, interpolate, solve)
from .mesh import MeshError, mesh_annulus, mesh_interval, mesh_refine
from .norms import rel_error

__all__ = [
    "CSV_HEADER",
    "CSV_COLUMNS",
    "RULES",
    "PRESETS",
    "SweepSpec",
    "SweepRow",
    "DofGuardError",
    "mesh_size",
    "bump_preset",
    "run_sweep",
    "run_bad_data_demo",
    "rows_to_csv",
    "read_csv",
    "growth_exponent",
]

CSV_HEADER = "k,h,p,rule,rel_err_h1k,abs_err_h1k,norm_u,dofs,solve_seconds,status"
# provenance and diagnostics appended after the fixed schema
EXTRA_COLUMNS = ("seed", "residual", "interp_rel_err_h1k", "norm_f_l2")
CSV_COLUMNS = tuple(CSV_HEADER.split(",")) + EXTRA_COLUMNS
MAX_DOFS = 400_000

RULES = {
    "hk": "h = c / k",
    "k32": "h = c k^(-3/2)",
    "hk2": "h = c / k^2",
    "hp": "h = c k^(-(p+2)/(p+1))",
}
PRESETS = ("none", "bump")


class DofGuardError(ValueError):
    """A solve would exceed the desk-scale DOF budget."""


def mesh_size(rule: str, c: float, k: float, p: int = 1) -> float:
    if rule == "hk":
        return c / k
    if rule == "k32":
        return c * k ** -1.5
    if rule == "hk2":
        return c / k ** 2
    if rule == "hp":
        return c * k ** (-(p + 2) / (p + 1))
    raise ValueError(f"unknown mesh rule {rule!r}; choose from {sorted(RULES)}")


def bump_preset() -> tuple[CoefficientField, CoefficientField]:
    """Smooth A and n perturbations inside the annulus 1 < r < 2."""
    A = CoefficientField("radial-bump", amplitude=0.5, center=(0.0, 1.5), radius=0.3)
    n = CoefficientField("radial-bump", amplitude=0.5, center=(0.0, -1.5), radius=0.3)
    return A, n


@dataclass(frozen=True)
class SweepSpec:
    problem: str
    k_list: tuple
    rule: str = "k32"
    c: float = 0.5
    p: int = 1
    bc: str = "dirichlet"
    preset: str = "none"
    seed: int = 0
    load: str = "one"
    exponent: float = 2.0
    a: float = 1.0
    R: float = 2.0
    max_dofs: int = MAX_DOFS
    timing: bool = False
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "k_list", tuple(float(k) for k in self.k_list))
        if self.problem not in ("model1d", "disk2d", "bump2d"):
            raise ValueError(f"unknown problem {self.problem!r}")
        if not self.k_list:
            raise ValueError("k_list is empty")
        if any(k <= 0 for k in self.k_list):
            raise ValueError("wavenumbers must be positive")
        if any(b <= a for a, b in zip(self.k_list, self.k_list[1:])):
            raise ValueError("k_list must be strictly ascending")
        if self.c <= 0:
            raise ValueError("rule constant c must be positive")
        if self.problem != "model1d" and self.p != 1:
            raise ValueError("2-d problems use p = 1 elements")
        if self.problem == "model1d" and self.p not in (1, 2, 3):
            raise ValueError("1-d elements support p = 1, 2, 3")
        if self.preset not in PRESETS:
            raise ValueError(f"unknown coefficient preset {self.preset!r}")
        if self.problem == "bump2d" and self.preset == "none":
            object.__setattr__(self, "preset", "bump")
        if self.load not in ("one", "bad"):
            raise ValueError("load must be 'one' or 'bad'")
        if self.load == "bad" and self.problem != "model1d":
            raise ValueError("the bad-data family exists for model1d only")
        for k in self.k_list:
            hk = mesh_size(self.rule, self.c, k, self.p) * k
            if hk > 1.0 + 1e-12:
                raise ValueError(f"rule gives hk = {hk:.3g} > 1 at k = {k:g}")

    def h(self, k: float) -> float:
        return mesh_size(self.rule, self.c, k, self.p)


@dataclass
class SweepRow:
    k: float
    h: float
    p: int
    rule: str
    rel_err_h1k: float = math.nan
    abs_err_h1k: float = math.nan
    norm_u: float = math.nan
    dofs: int = 0
    solve_seconds: float = math.nan
    status: str = "ok"
    seed: int = 0
    residual: float = math.nan
    interp_rel_err_h1k: float = math.nan
    norm_f_l2: float = math.nan

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    @property
    def quasi_opt_ratio(self) -> float:
        return self.rel_err_h1k / self.interp_rel_err_h1k


def _fmt(v) -> str:
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(v)
    return str(v)


def rows_to_csv(rows) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        d = asdict(r)
        w.writerow([_fmt(d[c]) for c in CSV_COLUMNS])
    return out.getvalue()


def read_csv(text: str) -> list[dict]:
    """Parse a sweep CSV; numeric fields become floats."""
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None:
        raise ValueError("empty CSV")
    missing = [c for c in CSV_HEADER.split(",") if c not in reader.fieldnames]
    if missing:
        raise ValueError(f"CSV lacks columns {missing}")
    rows = []
    for i, raw in enumerate(reader, 2):
        row = {}
        for key, val in raw.items():
            if key in ("rule", "status"):
                row[key] = val
                continue
            try:
                row[key] = float(val)
            except (TypeError, ValueError) as exc:
                raise ValueError(f"line {i}: bad value {val!r} for {key}") from exc
        rows.append(row)
    return rows


# ---------------------------------------------------------------- sweep points

def _dof_positions_1d(mesh, p):
    x = mesh.nodes
    hs = np.diff(x)
    pos = np.zeros(p * len(hs) + 1)
    local = x[:-1, None] + hs[:, None] * np.linspace(0.0, 1.0, p + 1)[None, :]
    pos[dofs_1d(len(hs), p)] = local
    return pos


def _point_1d(spec: SweepSpec, k: float, row: SweepRow) -> SweepRow:
    h = spec.h(k)
    mesh = mesh_interval(math.ceil(1.0 / h - 1e-9))
    row.h = mesh.h
    load = LoadSpec(spec.load, exponent=spec.exponent)
    system = assemble_1d(k, mesh, spec.p, load)
    row.dofs = system.n_dofs
    _guard(spec, row.dofs)
    t0 = time.perf_counter()
    u = solve(system)
    if spec.timing:
        row.solve_seconds = time.perf_counter() - t0
    row.residual = u.residual
    exact = exact_1d(k, load)
    rep = rel_error(u, exact, k)
    vals = exact.u(_dof_positions_1d(mesh, spec.p))
    interp = DiscreteField.from_nodal(mesh, spec.p, vals, system.free)
    row.interp_rel_err_h1k = rel_error(interp, exact, k).rel_err_h1k
    if spec.load == "bad":
        from .quadrature import gauss_interval

        t, w = gauss_interval(24)
        xs = mesh.nodes[:-1, None] + np.diff(mesh.nodes)[:, None] * t[None, :]
        ws = np.diff(mesh.nodes)[:, None] * w[None, :]
        row.norm_f_l2 = math.sqrt(float(np.sum(ws * np.abs(exact.load(xs)) ** 2)))
    row.rel_err_h1k, row.abs_err_h1k, row.norm_u = rep.rel_err_h1k, rep.abs_err_h1k, rep.norm_u_h1k
    return row


def _config(spec: SweepSpec, k: float) -> ScatterConfig:
    if spec.preset == "bump":
        A, n = bump_preset()
        return ScatterConfig(k=k, R=spec.R, a=spec.a, A=A, n=n, bc=spec.bc)
    return ScatterConfig(k=k, R=spec.R, a=spec.a, bc=spec.bc)


def _point_2d(spec: SweepSpec, k: float, row: SweepRow) -> SweepRow:
    mesh = mesh_annulus(spec.a, spec.R, spec.h(k))
    row.h = mesh.h
    cfg = _config(spec, k)
    system = assemble_2d(cfg, mesh)
    row.dofs = system.n_dofs
    _guard(spec, row.dofs)
    if spec.problem == "bump2d":
        # nested reference: two red refinements on the same polygonal domain
        fine = mesh_refine(mesh_refine(mesh, project_boundary=False), project_boundary=False)
        _guard(spec, len(fine.vertices))
    t0 = time.perf_counter()
    u = solve(system)
    if spec.timing:
        row.solve_seconds = time.perf_counter() - t0
    row.residual = u.residual
    if spec.problem == "disk2d":
        oracle = mie_solution(k, spec.a, spec.R, bc=spec.bc)
        rep = rel_error(u, oracle, k)
        row.interp_rel_err_h1k = rel_error(interpolate(mesh, oracle, system.free), oracle, k).rel_err_h1k
    else:
        ref = solve(assemble_2d(cfg, fine))
        rep = rel_error(u, ref, k)
        injected = DiscreteField.from_nodal(mesh, 1, ref.nodal[: mesh.n_vertices], system.free)
        row.interp_rel_err_h1k = rel_error(injected, ref, k).rel_err_h1k
    row.rel_err_h1k, row.abs_err_h1k, row.norm_u = rep.rel_err_h1k, rep.abs_err_h1k, rep.norm_u_h1k
    return row


def _guard(spec: SweepSpec, dofs: int):
    if dofs > spec.max_dofs:
        raise DofGuardError(f"{dofs} DOFs exceed the guard of {spec.max_dofs}")


def _run_point(spec: SweepSpec, k: float) -> SweepRow:
    row = SweepRow(k=k, h=spec.h(k), p=spec.p, rule=spec.rule, seed=spec.seed)
    try:
        if spec.problem == "model1d":
            return _point_1d(spec, k, row)
        return _point_2d(spec, k, row)
    except DofGuardError:
        row.status = "dof-guard"
    except SingularSystemError:
        row.status = "singular"
    except (MeshError, MemoryError, ArithmeticError, np.linalg.LinAlgError, RuntimeError) as exc:
        row.status = "failed:" + type(exc).__name__
    return row


def run_sweep(spec: SweepSpec) -> list[SweepRow]:
    """One row per wavenumber, in the order of ``spec.k_list``."""
    if spec.workers > 1 and len(spec.k_list) > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            futures = [pool.submit(_run_point, spec, k) for k in spec.k_list]
            return [f.result() for f in futures]
    return [_run_point(spec, k) for k in spec.k_list]


def run_bad_data_demo(k_list, exponent: float = 2.0, c: float = 0.5, seed: int = 0,
                      timing: bool = False) -> list[SweepRow]:
    """Model problem with data exp(i k^n x) chi(x) on the h = c k^(-3/2) rule."""
    if exponent <= 1:
        raise ValueError("exponent must exceed 1")
    spec = SweepSpec("model1d", tuple(k_list), rule="k32", c=c, load="bad",
                     exponent=exponent, seed=seed, timing=timing)
    return run_sweep(spec)


def growth_exponent(xs, ys) -> float:
    """Least-squares slope of log y against log x."""
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])
