"""Galerkin assembly and solution for the 1-d model and 2-d scattering problems.

Both problems lead to S = K - k^2 M - D, where D = T^H diag(d) T is a
low-rank boundary coupling (the impedance term at x = 1 in 1-d, the DtN
map in 2-d).  The solve keeps S sparse by bordering it with the mode
unknowns w = T u:

    [ K - k^2 M   -T^H diag(d) ] [u]   [F]
    [     T           -I       ] [w] = [0]
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .coefficients import ScatterConfig
from .dtn import DtnOperator, build_dtn, incident_load
from .mesh import GAMMA, Mesh1D, Mesh2D
from .quadrature import gauss_interval, triangle_rule

__all__ = [
    "LoadSpec",
    "DiscreteSystem",
    "DiscreteField",
    "SingularSystemError",
    "assemble_1d",
    "assemble_2d",
    "assemble_reference",
    "solve",
    "astar_system",
    "elliptic_project",
    "interpolate",
    "p1_gradients",
    "lagrange_basis_1d",
    "dofs_1d",
]


class SingularSystemError(RuntimeError):
    """The discrete system could not be factorised (discrete resonance)."""

    def __init__(self, k: float, h: float, detail: str = ""):
        super().__init__(f"singular system at k={k:g}, h={h:.6g}; perturb h and retry. {detail}")
        self.k = k
        self.h = h


@dataclass(frozen=True)
class LoadSpec:
    """Right-hand side of the 1-d model problem.

    kind "one" is f = 1; "gaussian" is exp(-((x - center)/width)^2);
    "bad" is the family with exact solution exp(i k^exponent x) chi(x).
    """

    kind: str = "one"
    center: float = 0.5
    width: float = 0.05
    exponent: float = 2.0

    def __post_init__(self):
        if self.kind not in ("one", "gaussian", "bad"):
            raise ValueError(f"unknown load kind {self.kind!r}")
        if self.kind == "bad" and self.exponent <= 1:
            raise ValueError("bad-data exponent must exceed 1")

    def evaluate(self, k: float, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "one":
            return np.ones_like(x, dtype=complex)
        if self.kind == "gaussian":
            return np.exp(-((x - self.center) / self.width) ** 2).astype(complex)
        from .exact import bad_data_load

        return bad_data_load(k, self.exponent, x)


@dataclass(eq=False)
class DiscreteSystem:
    """Sparse parts of S = K - k^2 M - T^H diag(d) T plus the load.

    All matrices act on the full nodal vector; ``free`` lists the unknowns
    kept after Dirichlet elimination.  ``T`` acts on ``trace_dofs``.
    """

    k: float
    K: sp.csr_matrix
    M: sp.csr_matrix
    T: np.ndarray
    d: np.ndarray
    trace_dofs: np.ndarray
    F: np.ndarray
    free: np.ndarray
    mesh: object
    degree: int = 1
    bc_kind: str = "dirichlet"
    mass_factor: float | None = None
    dtn: DtnOperator | None = None
    _lu: object = field(default=None, repr=False)

    @property
    def n_nodes(self) -> int:
        return self.K.shape[0]

    @property
    def n_dofs(self) -> int:
        return len(self.free)

    @property
    def h(self) -> float:
        return float(self.mesh.h)

    @property
    def k2(self) -> float:
        return self.k ** 2 if self.mass_factor is None else self.mass_factor

    def volume_matrix(self) -> sp.csr_matrix:
        return (self.K - self.k2 * self.M).tocsr()

    def trace_operator(self) -> sp.csr_matrix:
        """T as a sparse matrix on the full nodal vector."""
        m = len(self.d)
        rows = np.repeat(np.arange(m), len(self.trace_dofs))
        cols = np.tile(self.trace_dofs, m)
        return sp.csr_matrix((self.T.ravel(), (rows, cols)), shape=(m, self.n_nodes))

    def apply(self, u: np.ndarray) -> np.ndarray:
        """S u for a full nodal vector."""
        w = self.T @ u[self.trace_dofs]
        out = self.volume_matrix() @ u
        out[self.trace_dofs] -= self.T.conj().T @ (self.d * w)
        return out

    def form(self, u: np.ndarray, v: np.ndarray) -> complex:
        """a(u, v) = v^H S u for full nodal vectors."""
        return complex(np.vdot(v, self.apply(u)))

    def dense(self) -> np.ndarray:
        """Full dense S (small problems only)."""
        S = self.volume_matrix().toarray().astype(complex)
        idx = self.trace_dofs
        S[np.ix_(idx, idx)] -= (self.T.conj().T * self.d) @ self.T
        return S

    def _bordered(self, adjoint: bool):
        A = self.volume_matrix()[self.free][:, self.free]
        Tfull = self.trace_operator()[:, self.free]
        m = len(self.d)
        if adjoint:
            # S^H = A^H - T^H diag(conj d) T
            A = A.conj().T
            dd = np.conj(self.d)
        else:
            dd = self.d
        top = sp.hstack([A, -(Tfull.conj().T @ sp.diags(dd))])
        bottom = sp.hstack([Tfull, -sp.identity(m)])
        return sp.vstack([top, bottom]).tocsc()

    def factor(self, adjoint: bool = False):
        key = "adj" if adjoint else "fwd"
        if self._lu is None:
            self._lu = {}
        if key not in self._lu:
            try:
                self._lu[key] = spla.splu(self._bordered(adjoint), permc_spec="COLAMD")
            except RuntimeError as exc:
                raise SingularSystemError(self.k, self.h, str(exc)) from exc
        return self._lu[key]

    def _restrict_apply(self, u_free, adjoint=False):
        u = np.zeros(self.n_nodes, dtype=complex)
        u[self.free] = u_free
        if adjoint:
            w = self.T @ u[self.trace_dofs]
            out = self.volume_matrix().conj().T @ u
            out[self.trace_dofs] -= self.T.conj().T @ (np.conj(self.d) * w)
        else:
            out = self.apply(u)
        return out[self.free]

    def solve_vector(self, rhs: np.ndarray, adjoint: bool = False, tol: float = 1e-10) -> np.ndarray:
        """Solve S u = rhs (or S^H u = rhs) on the free unknowns.

        ``rhs`` is indexed by all nodes; the returned vector also is, with
        zeros at eliminated nodes.
        """
        lu = self.factor(adjoint)
        b = np.asarray(rhs, dtype=complex)[self.free]
        m = len(self.d)
        x = lu.solve(np.concatenate([b, np.zeros(m, dtype=complex)]))[: len(b)]
        bnorm = np.linalg.norm(b)
        for _ in range(3):
            r = b - self._restrict_apply(x, adjoint)
            if bnorm == 0 or np.linalg.norm(r) <= tol * bnorm:
                break
            x = x + lu.solve(np.concatenate([r, np.zeros(m, dtype=complex)]))[: len(b)]
        if not np.all(np.isfinite(x)):
            raise SingularSystemError(self.k, self.h, "non-finite solution")
        u = np.zeros(self.n_nodes, dtype=complex)
        u[self.free] = x
        return u

    def backward_error(self, u: np.ndarray, rhs: np.ndarray | None = None) -> float:
        """Normwise backward error ||S u - F|| / (||S|| ||u|| + ||F||), 1-norm scale for S."""
        rhs = self.F if rhs is None else rhs
        r = (self.apply(u) - rhs)[self.free]
        A = self.volume_matrix()[self.free][:, self.free]
        norm_s = spla.norm(A, 1) + np.max(np.abs(self.d)) * float(np.sum(np.abs(self.T) ** 2))
        denom = norm_s * np.linalg.norm(u[self.free]) + np.linalg.norm(rhs[self.free])
        return float(np.linalg.norm(r) / denom) if denom > 0 else 0.0

    def residual(self, u: np.ndarray, rhs: np.ndarray | None = None) -> float:
        rhs = self.F if rhs is None else rhs
        r = (self.apply(u) - rhs)[self.free]
        nb = np.linalg.norm(rhs[self.free])
        return float(np.linalg.norm(r) / nb) if nb > 0 else float(np.linalg.norm(r))


@dataclass(eq=False)
class DiscreteField:
    """Nodal coefficients of a finite element function.

    ``coefficients`` holds the free unknowns only; ``nodal`` re-inserts the
    eliminated Dirichlet values (zero).
    """

    mesh: object
    degree: int
    coefficients: np.ndarray
    free: np.ndarray
    n_nodes: int
    residual: float = 0.0

    @property
    def nodal(self) -> np.ndarray:
        u = np.zeros(self.n_nodes, dtype=complex)
        u[self.free] = self.coefficients
        return u

    @classmethod
    def from_nodal(cls, mesh, degree, values, free=None):
        values = np.asarray(values, dtype=complex)
        if free is None:
            free = np.arange(len(values))
        return cls(mesh, degree, values[free], np.asarray(free), len(values))


# ---------------------------------------------------------------- 1-d

def lagrange_basis_1d(p: int, t: np.ndarray):
    """Values and derivatives of the equispaced Lagrange basis on [0, 1]."""
    nodes = np.linspace(0.0, 1.0, p + 1)
    t = np.asarray(t, dtype=float)
    V = np.ones((p + 1,) + t.shape)
    dV = np.zeros((p + 1,) + t.shape)
    for i in range(p + 1):
        others = [nodes[j] for j in range(p + 1) if j != i]
        denom = np.prod([nodes[i] - o for o in others])
        val = np.ones_like(t)
        for o in others:
            val = val * (t - o)
        V[i] = val / denom
        der = np.zeros_like(t)
        for skip in range(p):
            term = np.ones_like(t)
            for j, o in enumerate(others):
                if j != skip:
                    term = term * (t - o)
            der = der + term
        dV[i] = der / denom
    return V, dV


def dofs_1d(n_elem: int, p: int) -> np.ndarray:
    """Global DOF indices of each element, ordered like the local basis."""
    return p * np.arange(n_elem)[:, None] + np.arange(p + 1)[None, :]


def assemble_1d(k: float, mesh: Mesh1D, p: int = 1, data: LoadSpec | None = None,
                load_points: int = 12) -> DiscreteSystem:
    """System for int u'v' - k^2 int u v - ik u(1) v(1) = int f v, u(0) = 0."""
    if p not in (1, 2, 3):
        raise ValueError("1-d elements support p = 1, 2, 3")
    data = LoadSpec() if data is None else data
    x = mesh.nodes
    ne = len(x) - 1
    hs = np.diff(x)
    n = p * ne + 1
    tq, wq = gauss_interval(p + 1)
    V, dV = lagrange_basis_1d(p, tq)
    Mref = (V * wq) @ V.T
    Kref = (dV * wq) @ dV.T
    dofs = dofs_1d(ne, p)
    rows = np.repeat(dofs, p + 1, axis=1).ravel()
    cols = np.tile(dofs, (1, p + 1)).ravel()
    Kvals = (Kref[None] / hs[:, None, None]).ravel()
    Mvals = (Mref[None] * hs[:, None, None]).ravel()
    K = sp.csr_matrix((Kvals, (rows, cols)), shape=(n, n))
    M = sp.csr_matrix((Mvals, (rows, cols)), shape=(n, n))
    tl, wl = gauss_interval(load_points)
    Vl, _ = lagrange_basis_1d(p, tl)
    xq = x[:-1, None] + hs[:, None] * tl[None, :]
    fq = data.evaluate(k, xq)
    Floc = (fq * wl[None, :] * hs[:, None]) @ Vl.T
    F = np.zeros(n, dtype=complex)
    np.add.at(F, dofs, Floc)
    return DiscreteSystem(
        k=float(k), K=K, M=M,
        T=np.ones((1, 1), dtype=complex), d=np.array([1j * k]),
        trace_dofs=np.array([n - 1]), F=F, free=np.arange(1, n),
        mesh=mesh, degree=p, bc_kind="dirichlet",
    )


# ---------------------------------------------------------------- 2-d

def p1_gradients(mesh: Mesh2D):
    """Constant gradients of the three hat functions on every triangle.

    Returns (grads of shape (M, 3, 2), areas of shape (M,)).
    """
    p = mesh.vertices[mesh.triangles]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    g1 = np.column_stack([d2[:, 1], -d2[:, 0]]) / det[:, None]
    g2 = np.column_stack([-d1[:, 1], d1[:, 0]]) / det[:, None]
    grads = np.stack([-g1 - g2, g1, g2], axis=1)
    return grads, 0.5 * det


def _quadrature_points(mesh: Mesh2D, degree: int):
    bary, w = triangle_rule(degree)
    p = mesh.vertices[mesh.triangles]
    xq = np.einsum("qi,mij->mqj", bary, p)
    return xq, bary, w


def _scatter(mesh: Mesh2D, local: np.ndarray) -> sp.csr_matrix:
    t = mesh.triangles
    rows = np.repeat(t, 3, axis=1).ravel()
    cols = np.tile(t, (1, 3)).ravel()
    n = mesh.n_vertices
    return sp.csr_matrix((local.ravel(), (rows, cols)), shape=(n, n))


def _stiffness_mass(mesh: Mesh2D, A=None, n=None, degree: int = 4):
    grads, area = p1_gradients(mesh)
    G = np.einsum("mik,mjk->mij", grads, grads)
    if A is None or A.kind == "constant" or A.amplitude == 0.0:
        alpha = np.full(len(area), 1.0 if A is None else A.background)
    else:
        xq, _, w = _quadrature_points(mesh, degree)
        alpha = 2.0 * (A(xq[..., 0], xq[..., 1]) @ w)
    K = _scatter(mesh, G * (alpha * area)[:, None, None])
    ref = (np.ones((3, 3)) + np.eye(3)) / 12.0
    if n is None or n.kind == "constant" or n.amplitude == 0.0:
        scale = 1.0 if n is None else n.background
        Ml = ref[None] * (scale * area)[:, None, None]
    else:
        xq, bary, w = _quadrature_points(mesh, degree)
        nv = n(xq[..., 0], xq[..., 1])
        Ml = 2.0 * area[:, None, None] * np.einsum("mq,q,qi,qj->mij", nv, w, bary, bary)
    return K, _scatter(mesh, Ml)


def assemble_reference(mesh: Mesh2D):
    """(K_I, M_I): stiffness and mass for A = I, n = 1 (cached on the mesh)."""
    cache = mesh._cache
    if "reference" not in cache:
        cache["reference"] = _stiffness_mass(mesh)
    return cache["reference"]


def _free_nodes(mesh: Mesh2D, bc: str) -> np.ndarray:
    if bc == "dirichlet" and mesh.a > 0:
        fixed = np.zeros(mesh.n_vertices, dtype=bool)
        fixed[mesh.tagged_vertices(GAMMA)] = True
        return np.flatnonzero(~fixed)
    return np.arange(mesh.n_vertices)


def _check_support(cfg: ScatterConfig, mesh: Mesh2D):
    for name, coef in (("A", cfg.A), ("n", cfg.n)):
        if not coef.support_radius < cfg.R - mesh.h:
            raise ValueError(f"support of {name} - 1 must lie inside B(0, R - h)")


def assemble_2d(cfg: ScatterConfig, mesh: Mesh2D, dtn: DtnOperator | None = None,
                quad_degree: int = 4) -> DiscreteSystem:
    """System for the scattering problem of ``cfg`` on ``mesh``."""
    if abs(mesh.R - cfg.R) > 1e-12 * cfg.R or abs(mesh.a - cfg.a) > 1e-12 * max(cfg.R, 1.0):
        raise ValueError("mesh radii do not match the configuration")
    _check_support(cfg, mesh)
    if dtn is None:
        dtn = build_dtn(cfg.k, cfg.R, mesh, cfg.n_modes)
    K, M = _stiffness_mass(mesh, cfg.A, cfg.n, quad_degree)
    F = incident_load(cfg.k, cfg.R, cfg.direction, mesh, dtn)
    return DiscreteSystem(
        k=float(cfg.k), K=K, M=M, T=dtn.trace_map, d=dtn.symbols,
        trace_dofs=dtn.boundary_nodes, F=F, free=_free_nodes(mesh, cfg.bc),
        mesh=mesh, degree=1, bc_kind=cfg.bc, dtn=dtn,
    )


def astar_system(system: DiscreteSystem) -> DiscreteSystem:
    """The coercive companion a*(u, v) = int A grad u . grad v - <DtN u, v>."""
    return DiscreteSystem(
        k=system.k, K=system.K, M=system.M, T=system.T, d=system.d,
        trace_dofs=system.trace_dofs, F=np.zeros_like(system.F), free=system.free,
        mesh=system.mesh, degree=system.degree, bc_kind=system.bc_kind,
        mass_factor=0.0, dtn=system.dtn,
    )


def solve(system: DiscreteSystem, rhs: np.ndarray | None = None) -> DiscreteField:
    """Galerkin solution of S u = F by sparse LU on the bordered system.

    The relative residual ||S u - F|| / ||F|| is stored on the field.  On
    very fine meshes it can sit above 1e-10 purely from rounding (its floor
    grows with cond(S)), so the system is declared singular only when the
    normwise backward error also exceeds 1e-10.
    """
    rhs = system.F if rhs is None else rhs
    u = system.solve_vector(rhs)
    res = system.residual(u, rhs)
    if not res <= 1e-10 and np.linalg.norm(rhs[system.free]) > 0:
        be = system.backward_error(u, rhs)
        if not be <= 1e-10:
            raise SingularSystemError(system.k, system.h, f"residual {res:.3e}, backward error {be:.3e}")
    return DiscreteField(system.mesh, system.degree, u[system.free], system.free,
                         system.n_nodes, residual=res)


def elliptic_project(star_coarse: DiscreteSystem, star_fine: DiscreteSystem,
                     u_fine: DiscreteField, P: sp.spmatrix) -> DiscreteField:
    """Coarse field w with a*(v, w) = a*(v, u) for every coarse v.

    ``P`` maps coarse nodal vectors to the nested fine mesh.  In matrix
    form S*_c^H w = P^T S*_f^H u.
    """
    u = u_fine.nodal
    Sf = star_fine
    adj = Sf.volume_matrix().conj().T @ u
    w = Sf.T @ u[Sf.trace_dofs]
    adj[Sf.trace_dofs] -= Sf.T.conj().T @ (np.conj(Sf.d) * w)
    rhs = P.T @ adj
    wc = star_coarse.solve_vector(rhs, adjoint=True)
    return DiscreteField(star_coarse.mesh, 1, wc[star_coarse.free], star_coarse.free,
                         star_coarse.n_nodes)


def interpolate(mesh: Mesh2D, evaluator, free=None) -> DiscreteField:
    """P1 nodal interpolant of an evaluator exposing ``value(x, y)``."""
    vals = evaluator.value(mesh.vertices[:, 0], mesh.vertices[:, 1])
    return DiscreteField.from_nodal(mesh, 1, vals, free)
