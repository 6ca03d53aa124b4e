"""Dirichlet-to-Neumann map on the truncation circle in Fourier mode space.

With modes e_n = e^{i n theta}/sqrt(2 pi R) and the trace map
T[n, j] = integral of phi_j * conj(e_n) over the boundary polygon, the
discrete coupling is D = T^H diag(d) T where d_n = k H_n'(kR)/H_n(kR).
The angle theta runs linearly in arc length of the polygon.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .mesh import GAMMA_R, Mesh2D
from .specfun import bessel_jy_orders, hankel1_ratio_orders

__all__ = ["DtnOperator", "default_modes", "build_dtn", "incident_load", "hat_moments"]


def default_modes(k: float, R: float) -> int:
    kR = k * R
    return int(math.ceil(kR + 8.0 * kR ** (1.0 / 3.0) + 30.0))


def hat_moments(beta: np.ndarray):
    """Return (g, f) with g = int_0^1 (1-t) e^{-i beta t} dt, f = int_0^1 t e^{-i beta t} dt."""
    beta = np.asarray(beta, dtype=float)
    small = np.abs(beta) < 0.5
    b = np.where(small, 1.0, beta)
    e = np.exp(-1j * b)
    f = e * (1j / b + 1.0 / b ** 2) - 1.0 / b ** 2
    g = (1.0 - e) / (1j * b) - f
    if np.any(small):
        z = -1j * beta[small]
        fs = np.zeros(z.shape, dtype=complex)
        gs = np.zeros(z.shape, dtype=complex)
        term = np.ones(z.shape, dtype=complex)
        for m in range(18):
            fs += term / (m + 2)
            gs += term / ((m + 1) * (m + 2))
            term = term * z / (m + 1)
        f = f.astype(complex)
        g = g.astype(complex)
        f[small] = fs
        g[small] = gs
    return g, f


@dataclass(frozen=True, eq=False)
class DtnOperator:
    """Truncated DtN map; ``trace_map`` columns follow ``boundary_nodes``."""

    k: float
    R: float
    n_modes: int
    modes: np.ndarray
    symbols: np.ndarray
    trace_map: np.ndarray
    boundary_nodes: np.ndarray
    edge_lengths: np.ndarray
    theta0: float

    @property
    def perimeter(self) -> float:
        return float(self.edge_lengths.sum())

    def coefficients(self, trace: np.ndarray) -> np.ndarray:
        """Mode coefficients (T phi)_n of a nodal boundary trace."""
        return self.trace_map @ trace

    def form(self, u_trace: np.ndarray, v_trace: np.ndarray) -> complex:
        """<DtN u, v> = sum_n d_n (T u)_n conj((T v)_n)."""
        return complex(np.sum(self.symbols * self.coefficients(u_trace)
                              * np.conj(self.coefficients(v_trace))))

    def matrix(self) -> np.ndarray:
        """Dense boundary block T^H diag(d) T."""
        T = self.trace_map
        return (T.conj().T * self.symbols) @ T

    def l2_norm_sq(self, trace: np.ndarray) -> float:
        """Exact squared L2 norm of a piecewise-linear trace on the polygon."""
        u0 = trace
        u1 = np.roll(trace, -1)
        dens = np.abs(u0) ** 2 + np.real(u0 * np.conj(u1)) + np.abs(u1) ** 2
        return float(np.sum(self.edge_lengths * dens) / 3.0)


def _boundary_geometry(mesh: Mesh2D, R: float):
    loop = mesh.boundary_loop(GAMMA_R)
    p = mesh.vertices[loop]
    lengths = np.linalg.norm(np.roll(p, -1, axis=0) - p, axis=1)
    theta0 = math.atan2(p[0, 1], p[0, 0])
    return loop, lengths, theta0


def build_dtn(k: float, R: float, mesh: Mesh2D, N: int | None = None) -> DtnOperator:
    """Assemble the mode symbols and the exact per-edge trace integrals."""
    if N is None:
        N = default_modes(k, R)
    if N < math.ceil(k * R):
        raise ValueError("N must be at least ceil(kR)")
    loop, lengths, theta0 = _boundary_geometry(mesh, R)
    L = lengths.sum()
    s = np.concatenate([[0.0], np.cumsum(lengths)[:-1]])
    theta = theta0 + 2.0 * np.pi * s / L
    ratios = hankel1_ratio_orders(N, k * R)
    modes = np.arange(-N, N + 1)
    symbols = k * ratios[np.abs(modes)]
    beta = np.outer(modes, 2.0 * np.pi * lengths / L)
    g, f = hat_moments(beta)
    phase = np.exp(-1j * np.outer(modes, theta)) * lengths / math.sqrt(2.0 * np.pi * R)
    T = phase * g + np.roll(phase * f, 1, axis=1)
    return DtnOperator(k=float(k), R=float(R), n_modes=int(N), modes=modes, symbols=symbols,
                       trace_map=T, boundary_nodes=loop, edge_lengths=lengths,
                       theta0=theta0)


def _inverse_hankel(N: int, x: float) -> np.ndarray:
    """1/H_n(x) for n = 0..N without overflow (underflows to 0 instead)."""
    j, y = bessel_jy_orders(1, x)
    h0 = complex(j[0], y[0])
    h1 = complex(j[1], y[1])
    out = np.empty(N + 1, dtype=complex)
    out[0] = 1.0 / h0
    if N >= 1:
        out[1] = 1.0 / h1
    r = h1 / h0
    for n in range(1, N):
        r = 2.0 * n / x - 1.0 / r
        out[n + 1] = out[n] / r
    return out


def incident_load(k: float, R: float, direction, mesh: Mesh2D,
                  dtn: DtnOperator | None = None) -> np.ndarray:
    """Load vector F_i = int (d_n u^I - DtN u^I) phi_i over Gamma_R.

    Mode-wise the boundary datum is sqrt(2 pi R) i^n e^{-i n theta_a}
    (-2i/(pi R)) / H_n(kR), which follows from the Bessel Wronskian.
    """
    if dtn is None:
        dtn = build_dtn(k, R, mesh)
    theta_a = math.atan2(direction[1], direction[0])
    N = dtn.n_modes
    inv_h = _inverse_hankel(N, k * R)
    n = dtn.modes
    # H_{-n} = (-1)^n H_n
    sign = np.where((n < 0) & (np.abs(n) % 2 == 1), -1.0, 1.0)
    datum = (math.sqrt(2.0 * np.pi * R) * (1j ** (n % 4)) * np.exp(-1j * n * theta_a)
             * (-2j / (np.pi * R)) * inv_h[np.abs(n)] * sign)
    F = np.zeros(mesh.n_vertices, dtype=complex)
    F[dtn.boundary_nodes] = dtn.trace_map.conj().T @ datum
    return F
