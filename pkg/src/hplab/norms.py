"""Weighted H^1_k norms, errors against references, and the oscillation ratio."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .fem import DiscreteField, lagrange_basis_1d, dofs_1d, assemble_reference, p1_gradients
from .mesh import Mesh1D, Mesh2D, prolongation
from .quadrature import gauss_interval, triangle_rule

__all__ = [
    "ErrorReport",
    "h1k_norm",
    "h1k_norm_vector",
    "l2_norm_vector",
    "rel_error",
    "cosc_estimate",
    "h2_seminorm",
]


@dataclass(frozen=True)
class ErrorReport:
    k: float
    h: float
    p: int
    abs_err_h1k: float
    rel_err_h1k: float
    abs_err_l2: float
    norm_u_h1k: float
    seminorm_u_h2: float = math.nan
    cosc_hat: float = math.nan

    def as_dict(self) -> dict:
        return asdict(self)


def h1k_norm_vector(mesh: Mesh2D, u: np.ndarray, k: float) -> float:
    """Exact ||v||_{H^1_k} of a P1 function given by full nodal values."""
    K, M = assemble_reference(mesh)
    u, scale = _scaled(u)
    if scale == 0.0:
        return 0.0
    val = np.vdot(u, K @ u) + k * k * np.vdot(u, M @ u)
    return scale * math.sqrt(max(val.real, 0.0))


def l2_norm_vector(mesh: Mesh2D, u: np.ndarray) -> float:
    _, M = assemble_reference(mesh)
    u, scale = _scaled(u)
    if scale == 0.0:
        return 0.0
    return scale * math.sqrt(max(np.vdot(u, M @ u).real, 0.0))


def _scaled(u):
    # factor out a power of two near max|u| so the quadratic forms neither
    # underflow nor overflow; ldexp is exact even for subnormal inputs
    u = np.asarray(u, dtype=complex)
    peak = float(np.max(np.abs(u))) if u.size else 0.0
    if not peak > 0.0:
        return u, 0.0
    _, e = math.frexp(peak)
    v = np.ldexp(u.real, -e) + 1j * np.ldexp(u.imag, -e)
    return v, math.ldexp(1.0, e)


def _triangle_chunks(mesh: Mesh2D, degree: int, chunk_points: int = 400_000):
    bary, w = triangle_rule(degree)
    per = max(1, chunk_points // len(w))
    _, area = p1_gradients(mesh)
    for lo in range(0, mesh.n_triangles, per):
        sl = slice(lo, min(lo + per, mesh.n_triangles))
        p = mesh.vertices[mesh.triangles[sl]]
        xq = np.einsum("qi,mij->mqj", bary, p)
        yield sl, xq, bary, 2.0 * area[sl][:, None] * w[None, :]


def _evaluator_integrals(evaluator, mesh: Mesh2D, k: float, degree: int, h2: bool = False):
    """Return (int |u|^2, int |grad u|^2, int |D^2 u|_F^2) by quadrature."""
    l2 = grad2 = hess2 = 0.0
    order = 2 if h2 else 1
    for _, xq, _, wq in _triangle_chunks(mesh, degree):
        u, g, H = evaluator.evaluate(xq[..., 0], xq[..., 1], order)
        l2 += float(np.sum(wq * np.abs(u) ** 2))
        grad2 += float(np.sum(wq * (np.abs(g[0]) ** 2 + np.abs(g[1]) ** 2)))
        if h2:
            hess2 += float(np.sum(wq * (np.abs(H[0]) ** 2 + 2 * np.abs(H[1]) ** 2
                                        + np.abs(H[2]) ** 2)))
    return l2, grad2, hess2


def _field_1d_integrals(field: DiscreteField | None, exact, k: float, n_points: int):
    """(int |e|^2, int |e'|^2, int |u|^2, int |u'|^2) with e = u - u_h on (0, 1)."""
    mesh = field.mesh
    x = mesh.nodes
    hs = np.diff(x)
    t, w = gauss_interval(n_points)
    xq = x[:-1, None] + hs[:, None] * t[None, :]
    wq = hs[:, None] * w[None, :]
    u = exact.u(xq)
    du = exact.du(xq)
    V, dV = lagrange_basis_1d(field.degree, t)
    coeff = field.nodal[dofs_1d(len(hs), field.degree)]
    uh = coeff @ V
    duh = (coeff @ dV) / hs[:, None]
    e, de = u - uh, du - duh
    return (float(np.sum(wq * np.abs(e) ** 2)), float(np.sum(wq * np.abs(de) ** 2)),
            float(np.sum(wq * np.abs(u) ** 2)), float(np.sum(wq * np.abs(du) ** 2)))


def h1k_norm(obj, mesh, k: float, degree: int = 6) -> float:
    """||u||_{H^1_k} of a DiscreteField, a nodal vector, or an evaluator."""
    if isinstance(obj, DiscreteField):
        if isinstance(obj.mesh, Mesh1D) or isinstance(mesh, Mesh1D):
            raise TypeError("use rel_error for 1-d fields")
        if obj.mesh is not mesh:
            raise ValueError("field lives on a different mesh")
        return h1k_norm_vector(mesh, obj.nodal, k)
    if isinstance(obj, np.ndarray):
        if len(obj) != mesh.n_vertices:
            raise ValueError("nodal vector length does not match the mesh")
        return h1k_norm_vector(mesh, obj, k)
    if isinstance(mesh, Mesh1D):
        x = mesh.nodes
        hs = np.diff(x)
        t, w = gauss_interval(max(degree, 12))
        xq = x[:-1, None] + hs[:, None] * t[None, :]
        wq = hs[:, None] * w[None, :]
        return math.sqrt(float(np.sum(wq * (np.abs(obj.du(xq)) ** 2 + k * k * np.abs(obj.u(xq)) ** 2))))
    l2, g2, _ = _evaluator_integrals(obj, mesh, k, degree)
    return math.sqrt(g2 + k * k * l2)


def h2_seminorm(evaluator, mesh: Mesh2D, degree: int = 6) -> float:
    _, _, H2 = _evaluator_integrals(evaluator, mesh, 1.0, degree, h2=True)
    return math.sqrt(H2)


def rel_error(u_h: DiscreteField, u_ref, k: float, degree: int = 6,
              with_h2: bool = False) -> ErrorReport:
    """Relative H^1_k error of ``u_h`` against an evaluator or a nested finer field."""
    mesh = u_h.mesh
    if isinstance(mesh, Mesh1D):
        e2, de2, u2, du2 = _field_1d_integrals(u_h, u_ref, k, max(degree, 12))
        err = math.sqrt(de2 + k * k * e2)
        norm = math.sqrt(du2 + k * k * u2)
        return ErrorReport(k, mesh.h, u_h.degree, err, err / norm if norm > 0 else math.inf,
                           math.sqrt(e2), norm)
    if isinstance(u_ref, DiscreteField):
        fine = u_ref.mesh
        P = prolongation(mesh, fine)
        diff = u_ref.nodal - P @ u_h.nodal
        err = h1k_norm_vector(fine, diff, k)
        norm = h1k_norm_vector(fine, u_ref.nodal, k)
        return ErrorReport(k, mesh.h, 1, err, err / norm if norm > 0 else math.inf,
                           l2_norm_vector(fine, diff), norm)
    grads, _ = p1_gradients(mesh)
    nodal = u_h.nodal
    e_l2 = e_g = u_l2 = u_g = u_h2 = 0.0
    order = 2 if with_h2 else 1
    for sl, xq, bary, wq in _triangle_chunks(mesh, degree):
        tri = mesh.triangles[sl]
        vals = nodal[tri]
        uh = vals @ bary.T
        guh = np.einsum("mi,mik->mk", vals, grads[sl])
        u, g, H = u_ref.evaluate(xq[..., 0], xq[..., 1], order)
        e = u - uh
        ex = g[0] - guh[:, 0:1]
        ey = g[1] - guh[:, 1:2]
        e_l2 += float(np.sum(wq * np.abs(e) ** 2))
        e_g += float(np.sum(wq * (np.abs(ex) ** 2 + np.abs(ey) ** 2)))
        u_l2 += float(np.sum(wq * np.abs(u) ** 2))
        u_g += float(np.sum(wq * (np.abs(g[0]) ** 2 + np.abs(g[1]) ** 2)))
        if with_h2:
            u_h2 += float(np.sum(wq * (np.abs(H[0]) ** 2 + 2 * np.abs(H[1]) ** 2 + np.abs(H[2]) ** 2)))
    err = math.sqrt(e_g + k * k * e_l2)
    norm = math.sqrt(u_g + k * k * u_l2)
    semi = math.sqrt(u_h2) if with_h2 else math.nan
    cosc = semi / (k * norm) if with_h2 and norm > 0 else math.nan
    return ErrorReport(k, mesh.h, 1, err, err / norm if norm > 0 else math.inf,
                       math.sqrt(e_l2), norm, semi, cosc)


def cosc_estimate(evaluator, mesh: Mesh2D, k: float, degree: int = 6) -> float:
    """|u|_{H^2} / (k ||u||_{H^1_k}) by quadrature over ``mesh``."""
    if not hasattr(evaluator, "evaluate"):
        raise TypeError("evaluator must provide second derivatives")
    l2, g2, H2 = _evaluator_integrals(evaluator, mesh, k, degree, h2=True)
    return math.sqrt(H2) / (k * math.sqrt(g2 + k * k * l2))
