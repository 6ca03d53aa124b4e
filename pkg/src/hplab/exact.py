"""Reference solutions: 1-d model problem, plane wave, and disk scattering series.

2-d evaluators share one interface: ``evaluate(x, y, order)`` returns
``(u, grad, hess)`` where ``grad`` stacks (u_x, u_y) and ``hess`` stacks
(u_xx, u_xy, u_yy); entries above ``order`` are None.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dtn import default_modes
from .specfun import bessel_j_orders, bessel_jy_orders

__all__ = [
    "Exact1D",
    "exact_1d",
    "bad_data_chi",
    "bad_data_load",
    "PlaneWave",
    "plane_wave",
    "MieSeries",
    "mie_solution",
]

CHI_CENTER = 0.5
CHI_HALF_WIDTH = 0.3


# ---------------------------------------------------------------- 1-d

def bad_data_chi(x, derivative: int = 0):
    """C^2 bump (1 - s^2)^3 on (0.2, 0.8) and its first two derivatives."""
    x = np.asarray(x, dtype=float)
    s = (x - CHI_CENTER) / CHI_HALF_WIDTH
    inside = np.abs(s) < 1.0
    q = 1.0 - s * s
    if derivative == 0:
        v = q ** 3
    elif derivative == 1:
        v = -6.0 * s * q ** 2 / CHI_HALF_WIDTH
    elif derivative == 2:
        v = (-6.0 * q ** 2 + 24.0 * s * s * q) / CHI_HALF_WIDTH ** 2
    else:
        raise ValueError("derivative must be 0, 1 or 2")
    return np.where(inside, v, 0.0)


def bad_data_load(k: float, exponent: float, x) -> np.ndarray:
    """f = -(u'' + k^2 u) for u = exp(i w x) chi(x), w = k^exponent."""
    w = k ** exponent
    x = np.asarray(x, dtype=float)
    e = np.exp(1j * w * x)
    chi = bad_data_chi(x)
    d1 = bad_data_chi(x, 1)
    d2 = bad_data_chi(x, 2)
    return -e * ((1j * w) ** 2 * chi + 2j * w * d1 + d2 + k * k * chi)


@dataclass(frozen=True)
class Exact1D:
    """Solution of u'' + k^2 u = -f, u(0) = 0, u'(1) = i k u(1)."""

    k: float
    kind: str
    exponent: float = 2.0

    @property
    def B(self) -> complex:
        k = self.k
        return 1j * (1.0 - np.exp(1j * k)) / k ** 2

    def u(self, x):
        x = np.asarray(x, dtype=float)
        k = self.k
        if self.kind == "one":
            return (np.cos(k * x) - 1.0) / k ** 2 + self.B * np.sin(k * x)
        w = k ** self.exponent
        return np.exp(1j * w * x) * bad_data_chi(x)

    def du(self, x):
        x = np.asarray(x, dtype=float)
        k = self.k
        if self.kind == "one":
            return -np.sin(k * x) / k + self.B * k * np.cos(k * x)
        w = k ** self.exponent
        return np.exp(1j * w * x) * (1j * w * bad_data_chi(x) + bad_data_chi(x, 1))

    def load(self, x):
        if self.kind == "one":
            return np.ones_like(np.asarray(x, dtype=float), dtype=complex)
        return bad_data_load(self.k, self.exponent, x)


def exact_1d(k: float, load) -> Exact1D:
    """Evaluator for the 1-d model problem; ``load`` is a LoadSpec or kind name."""
    kind = getattr(load, "kind", load)
    exponent = getattr(load, "exponent", 2.0)
    if kind not in ("one", "bad"):
        raise ValueError("closed forms exist for f = 1 and the bad-data family only")
    return Exact1D(float(k), kind, float(exponent))


# ---------------------------------------------------------------- 2-d

@dataclass(frozen=True)
class PlaneWave:
    k: float
    direction: tuple = (1.0, 0.0)

    def value(self, x, y):
        d = self.direction
        return np.exp(1j * self.k * (d[0] * np.asarray(x) + d[1] * np.asarray(y)))

    def evaluate(self, x, y, order: int = 0):
        k = self.k
        dx, dy = self.direction
        u = self.value(x, y)
        grad = hess = None
        if order >= 1:
            grad = np.stack([1j * k * dx * u, 1j * k * dy * u])
        if order >= 2:
            hess = np.stack([-k * k * dx * dx * u, -k * k * dx * dy * u, -k * k * dy * dy * u])
        return u, grad, hess


def plane_wave(k: float, direction=(1.0, 0.0)) -> PlaneWave:
    if abs(math.hypot(*direction) - 1.0) > 1e-12:
        raise ValueError("direction must be a unit vector")
    return PlaneWave(float(k), tuple(float(c) for c in direction))


@dataclass(frozen=True, eq=False)
class MieSeries:
    """u = u^I + sum_n eps_n c_n H_n(kr) cos(n(theta - theta_a)).

    For the sound-soft disk c_n = -i^n J_n(ka)/H_n(ka); the sound-hard
    variant uses derivatives.  Terms are dropped once |J_n(ka)| (an upper
    bound for |c_n H_n(kr)| on r >= a) falls below 1e-18.
    """

    k: float
    a: float
    R: float
    direction: tuple
    bc: str
    coefficients: np.ndarray
    tail_ok: bool

    @property
    def n_series(self) -> int:
        return len(self.coefficients) - 1

    @property
    def incident(self) -> PlaneWave:
        return PlaneWave(self.k, self.direction)

    def value(self, x, y):
        return self.evaluate(x, y, 0)[0]

    def _scattered_polar(self, r, phi, order):
        """u^S and its polar derivatives up to ``order`` at flat arrays."""
        k = self.k
        x = k * r
        j, y = bessel_jy_orders(1, x)
        h_prev = j[0] + 1j * y[0]
        h_cur = j[1] + 1j * y[1]
        e1 = np.exp(1j * phi)
        e = np.ones_like(e1)
        out = [np.zeros_like(h_prev) for _ in range(6)]
        inv_x = 1.0 / x
        for n, c in enumerate(self.coefficients):
            if n == 0:
                h = h_prev
                dh = -h_cur
            else:
                h = h_cur
                dh = h_prev - n * inv_x * h_cur
            weight = (1.0 if n == 0 else 2.0) * c
            cosn = e.real
            term = weight * h
            out[0] += term * cosn
            if order >= 1:
                sinn = e.imag
                out[1] += weight * k * dh * cosn  # u_r
                out[2] -= n * term * sinn  # u_phi
            if order >= 2:
                d2h = -dh * inv_x - (1.0 - (n * inv_x) ** 2) * h
                out[3] += weight * k * k * d2h * cosn  # u_rr
                out[4] -= n * weight * k * dh * sinn  # u_rphi
                out[5] -= n * n * term * cosn  # u_phiphi
            if n >= 1:
                h_prev, h_cur = h_cur, 2.0 * n * inv_x * h_cur - h_prev
            e = e * e1
        return out

    def scattered(self, x, y, order: int = 0):
        return self._evaluate(x, y, order, include_incident=False)

    def evaluate(self, x, y, order: int = 0, chunk: int = 200_000):
        return self._evaluate(x, y, order, include_incident=True, chunk=chunk)

    def _evaluate(self, x, y, order, include_incident, chunk=200_000):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        shape = np.broadcast(x, y).shape
        xf = np.broadcast_to(x, shape).ravel()
        yf = np.broadcast_to(y, shape).ravel()
        u = np.empty(xf.size, dtype=complex)
        grad = np.empty((2, xf.size), dtype=complex) if order >= 1 else None
        hess = np.empty((3, xf.size), dtype=complex) if order >= 2 else None
        theta_a = math.atan2(self.direction[1], self.direction[0])
        for lo in range(0, xf.size, chunk):
            sl = slice(lo, lo + chunk)
            px, py = xf[sl], yf[sl]
            r = np.hypot(px, py)
            th = np.arctan2(py, px)
            parts = self._scattered_polar(r, th - theta_a, order)
            u[sl] = parts[0]
            c, s = np.cos(th), np.sin(th)
            if order >= 1:
                ur, up = parts[1], parts[2]
                grad[0, sl] = c * ur - s * up / r
                grad[1, sl] = s * ur + c * up / r
            if order >= 2:
                urr, urp, upp = parts[3], parts[4], parts[5]
                lap_t = ur / r + upp / r ** 2
                mix = urp / r - up / r ** 2
                hess[0, sl] = c * c * urr + s * s * lap_t - 2 * s * c * mix
                hess[1, sl] = s * c * (urr - lap_t) + (c * c - s * s) * mix
                hess[2, sl] = s * s * urr + c * c * lap_t + 2 * s * c * mix
        if include_incident:
            ui, gi, hi = self.incident.evaluate(xf, yf, order)
            u += ui
            if order >= 1:
                grad += gi
            if order >= 2:
                hess += hi
        u = u.reshape(shape)
        if grad is not None:
            grad = grad.reshape((2,) + shape)
        if hess is not None:
            hess = hess.reshape((3,) + shape)
        return u, grad, hess

    def boundary_residual(self, n_samples: int = 256) -> float:
        """max |u| on r = a relative to max |u^I| (sound-soft check)."""
        th = 2 * np.pi * np.arange(n_samples) / n_samples
        u = self.value(self.a * np.cos(th), self.a * np.sin(th))
        return float(np.max(np.abs(u)))


def mie_solution(k: float, a: float, R: float, direction=(1.0, 0.0), bc: str = "dirichlet",
                 n_series: int | None = None, cutoff: float = 1e-18) -> MieSeries:
    """Series solution for plane-wave scattering by a disk of radius ``a``."""
    if not (0 < a < R):
        raise ValueError("need 0 < a < R")
    if k * a > 200:
        raise ValueError("ka must not exceed 200")
    if bc not in ("dirichlet", "neumann"):
        raise ValueError("bc must be 'dirichlet' or 'neumann'")
    N = default_modes(k, R) if n_series is None else int(n_series)
    ka = k * a
    jall = bessel_j_orders(N + 1, ka)
    keep = N
    for n in range(int(ka) + 1, N + 1):
        if abs(jall[n]) < cutoff and abs(jall[n + 1]) < cutoff:
            keep = n
            break
    J, Y = bessel_jy_orders(keep + 1, ka)
    H = J + 1j * Y
    n = np.arange(keep + 1)
    if bc == "dirichlet":
        ratio = J[: keep + 1] / H[: keep + 1]
    else:
        dJ = np.empty(keep + 1)
        dH = np.empty(keep + 1, dtype=complex)
        dJ[0], dH[0] = -J[1], -H[1]
        dJ[1:] = J[:keep] - n[1:] / ka * J[1: keep + 1]
        dH[1:] = H[:keep] - n[1:] / ka * H[1: keep + 1]
        ratio = dJ / dH
    coeffs = -(1j ** (n % 4)) * ratio
    # tail check at r = R: |c_N H_N(kR)| against the partial sum size
    Jr, Yr = bessel_jy_orders(keep, k * R)
    last = abs(coeffs[-1] * complex(Jr[keep], Yr[keep]))
    tail_ok = bool(last <= 1e-12 * max(1.0, float(np.sum(np.abs(coeffs * (Jr + 1j * Yr))))))
    return MieSeries(float(k), float(a), float(R), tuple(map(float, direction)), bc, coeffs, tail_ok)
