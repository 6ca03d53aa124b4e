"""Hamiltonian rays for p(x, xi) = alpha(x)|xi|^2 - n(x) and flowout geometry.

The flow is x' = 2 alpha xi, xi' = n_grad - |xi|^2 alpha_grad.  Where both
coefficients are trivial the rays are straight lines traversed at speed
2|xi|, and the integrator jumps along them exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .coefficients import CoefficientField

__all__ = [
    "PhasePoint",
    "ObstacleHit",
    "symbol",
    "flow",
    "is_directly_incoming",
    "directly_incoming_mask",
    "FlowoutGeometry",
    "flowout_geometry",
    "FlowoutReport",
    "shadow_area",
    "shadow_area_gap",
    "verify_flowout_claims",
    "EscapeStats",
    "escape_time",
]

_TRIVIAL = CoefficientField()


class ObstacleHit(ValueError):
    """A trajectory met the obstacle; reflection is not modelled."""


@dataclass(frozen=True)
class PhasePoint:
    x: tuple
    xi: tuple

    def as_arrays(self):
        return np.asarray(self.x, dtype=float), np.asarray(self.xi, dtype=float)


def symbol(x, xi, A: CoefficientField = _TRIVIAL, n: CoefficientField = _TRIVIAL):
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)
    return A(x[0], x[1]) * (xi[0] ** 2 + xi[1] ** 2) - n(x[0], x[1])


def _rhs(state, A, n):
    x0, x1, p0, p1 = state
    alpha = A(x0, x1)
    ax, ay = A.gradient(x0, x1)
    nx, ny = n.gradient(x0, x1)
    q = p0 * p0 + p1 * p1
    return np.array([2 * alpha * p0, 2 * alpha * p1, nx - q * ax, ny - q * ay])


def _rk4(state, dt, A, n):
    k1 = _rhs(state, A, n)
    k2 = _rhs(state + 0.5 * dt * k1, A, n)
    k3 = _rhs(state + 0.5 * dt * k2, A, n)
    k4 = _rhs(state + dt * k3, A, n)
    return state + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def _supports(A, n):
    out = []
    for c in (A, n):
        if c.is_trivial:
            continue
        if c.kind == "constant" or c.background != 1.0:
            return None  # nowhere straight
        out.append((np.asarray(c.center, dtype=float), c.radius))
    return out


def _entry_time(x, v, center, radius):
    """Smallest t >= 0 with |x + t v - center| <= radius, or inf."""
    y = x - center
    a = v @ v
    b = y @ v
    c = y @ y - radius * radius
    if c <= 0:
        return 0.0
    disc = b * b - a * c
    if b >= 0 or disc < 0:
        return math.inf
    return (-b - math.sqrt(disc)) / a


def _segment_hits_disk(x, v, t, radius):
    """Does x + s v, 0 <= s <= t, meet the closed disk |y| <= radius?"""
    if t <= 0:
        return float(x @ x) <= radius * radius
    s = min(max(-(x @ v) / (v @ v), 0.0), t)
    y = x + s * v
    return float(y @ y) <= radius * radius


def flow(p0: PhasePoint, t: float, A: CoefficientField = _TRIVIAL,
         n: CoefficientField = _TRIVIAL, obstacle_radius: float = 0.0,
         tol: float = 1e-8, max_steps: int = 1_000_000) -> PhasePoint:
    """Integrate the Hamiltonian flow for time ``t`` (negative allowed).

    Inside coefficient supports the step is RK4 with step doubling; a step
    is accepted when the two estimates agree to ``tol * 1e-3`` and the
    drift of p from its initial value stays below ``tol``.
    """
    x, xi = p0.as_arrays()
    state = np.concatenate([x, xi]).astype(float)
    p_start = float(symbol(x, xi, A, n))
    direction = 1.0 if t >= 0 else -1.0
    remaining = abs(t)
    supports = _supports(A, n)
    dt = 0.01
    steps = 0
    while remaining > 0:
        pos, mom = state[:2], state[2:]
        if obstacle_radius > 0 and pos @ pos < obstacle_radius ** 2:
            raise ObstacleHit("trajectory entered the obstacle")
        if supports is not None and not any(
                np.sum((pos - c) ** 2) < r * r for c, r in supports):
            v = 2.0 * direction * mom
            t_in = min((_entry_time(pos, v, c, r) for c, r in supports), default=math.inf)
            jump = min(remaining, t_in)
            if jump > 0:
                if obstacle_radius > 0 and _segment_hits_disk(pos, v, jump, obstacle_radius):
                    raise ObstacleHit("trajectory meets the obstacle")
                state = np.concatenate([pos + jump * v, mom])
                remaining -= jump
                # step a hair into the support so the next pass integrates
                if remaining > 0 and t_in <= jump:
                    h = min(remaining, dt)
                    state = _rk4(state, direction * h, A, n)
                    remaining -= h
                continue
        h = min(dt, remaining)
        full = _rk4(state, direction * h, A, n)
        half = _rk4(_rk4(state, direction * h / 2, A, n), direction * h / 2, A, n)
        err = float(np.max(np.abs(full - half)))
        if err > 1e-3 * tol and h > 1e-12:
            dt = h / 2
            continue
        new = half + (half - full) / 15.0
        drift = abs(float(symbol(new[:2], new[2:], A, n)) - p_start)
        if drift > tol and h > 1e-12:
            dt = h / 2
            continue
        state = new
        remaining -= h
        steps += 1
        if steps > max_steps:
            raise RuntimeError("step cap exceeded in flow")
        if err < 1e-5 * tol:
            dt = min(2 * h, 0.05)
    if obstacle_radius > 0 and state[:2] @ state[:2] < obstacle_radius ** 2:
        raise ObstacleHit("trajectory entered the obstacle")
    return PhasePoint(tuple(state[:2]), tuple(state[2:]))


def directly_incoming_mask(x, xi, radius: float, center=(0.0, 0.0)) -> np.ndarray:
    """Vectorised test: backward rays x - 2 t xi (t >= 0) miss the closed disk."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    xi = np.atleast_2d(np.asarray(xi, dtype=float))
    y = x - np.asarray(center, dtype=float)
    d = -2.0 * xi
    dd = np.sum(d * d, axis=-1)
    yd = np.sum(y * d, axis=-1)
    yy = np.sum(y * y, axis=-1)
    inside = yy <= radius * radius
    ahead = yd < 0
    closest = yy - yd * yd / dd
    hit = inside | (ahead & (closest <= radius * radius))
    return ~hit


def is_directly_incoming(p0: PhasePoint, radius: float, t_max: float | None = None,
                         center=(0.0, 0.0)) -> bool:
    """True when the backward ray from ``p0`` never meets the disk.

    For a disk the test is an exact discriminant check over an infinite ray,
    so ``t_max`` is accepted but unused.  Tangency counts as a hit.
    """
    x, xi = p0.as_arrays()
    return bool(directly_incoming_mask(x, xi, radius, center)[0])


@dataclass(frozen=True)
class FlowoutGeometry:
    R_sc: float
    rho: float

    @property
    def rho0(self) -> float:
        return 0.5 * (self.rho + self.R_sc)

    @property
    def t0(self) -> float:
        return (self.rho - self.R_sc) / 8.0

    @property
    def eps(self) -> float:
        R, rho = self.R_sc, self.rho
        return -rho + math.sqrt(R * R + ((rho - R) / 4.0 + math.sqrt(rho * rho - R * R)) ** 2)

    @property
    def L1(self) -> float:
        R, rho = self.R_sc, self.rho
        return math.sqrt((rho + self.eps) ** 2 - R * R) - math.sqrt(rho * rho - R * R)

    @property
    def L2(self) -> float:
        return self.rho - self.rho0

    def length_order(self, rel_margin: float = 1e-12):
        """(L1 < 2 t0 strictly, 2 t0 <= L2).

        A strict inequality is only credited when the gap exceeds a few
        units of rounding; an identity that holds with equality fails.
        """
        two_t0 = 2.0 * self.t0
        strict = two_t0 - self.L1 > rel_margin * two_t0
        weak = two_t0 <= self.L2 * (1.0 + rel_margin)
        return strict, weak


def flowout_geometry(R_sc: float, rho: float) -> FlowoutGeometry:
    if not (rho > R_sc > 0):
        raise ValueError("need rho > R_sc > 0")
    return FlowoutGeometry(float(R_sc), float(rho))


def shadow_area(R_sc: float, rho: float) -> float:
    """Area of {x in B_rho : x - s b in B_Rsc for some s >= 0}, any unit b.

    The set is the scatterer disk plus its forward half-strip of width
    2 R_sc, cut off by the circle of radius rho.
    """
    if not (rho > R_sc > 0):
        raise ValueError("need rho > R_sc > 0")
    return (0.5 * math.pi * R_sc * R_sc + R_sc * math.sqrt(rho * rho - R_sc * R_sc)
            + rho * rho * math.asin(R_sc / rho))


def shadow_area_gap(R_sc: float, rho: float) -> float:
    """delta with |B_rho| - |shadow| = delta |B_rho|; positive for a strict subset."""
    return 1.0 - shadow_area(R_sc, rho) / (math.pi * rho * rho)


@dataclass
class FlowoutReport:
    geometry: FlowoutGeometry
    claim1_pass: int
    claim1_total: int
    claim2_pass: int
    claim2_total: int
    acceptance: float
    claim2_points: np.ndarray = field(repr=False, default=None)

    @property
    def all_pass(self) -> bool:
        return self.claim1_pass == self.claim1_total and self.claim2_pass == self.claim2_total


def _uniform_annulus(rng, n, r_in, r_out):
    r = np.sqrt(rng.uniform(r_in * r_in, r_out * r_out, n))
    th = rng.uniform(0.0, 2 * np.pi, n)
    return np.column_stack([r * np.cos(th), r * np.sin(th)])


def _unit_vectors(rng, n):
    th = rng.uniform(0.0, 2 * np.pi, n)
    return np.column_stack([np.cos(th), np.sin(th)])


def verify_flowout_claims(R_sc: float, rho: float, n_samples: int, seed: int = 0,
                          max_batches: int = 10_000) -> FlowoutReport:
    """Monte-Carlo check of the two flowout claims for a disk scatterer."""
    g = flowout_geometry(R_sc, rho)
    rng = np.random.default_rng(seed)
    # claim 1: forward rays from the annulus rho0 <= |x| <= rho miss the
    # scatterer for 0 <= t <= t0
    x = _uniform_annulus(rng, n_samples, g.rho0, g.rho)
    b = _unit_vectors(rng, n_samples)
    v = 2.0 * b
    s = np.clip(-np.sum(x * v, axis=1) / 4.0, 0.0, g.t0)
    closest = x + s[:, None] * v
    claim1 = int(np.sum(np.sum(closest ** 2, axis=1) > R_sc * R_sc))
    # claim 2: points of the thin annulus whose backward ray meets the
    # scatterer sit, 2 t0 earlier, in the annulus rho0 <= |y| <= rho
    accepted_x, accepted_b = [], []
    drawn = accepted = 0
    batch = max(1000, 4 * n_samples)
    for _ in range(max_batches):
        xs = _uniform_annulus(rng, batch, g.rho, g.rho + g.eps)
        bs = _unit_vectors(rng, batch)
        drawn += batch
        hit = ~directly_incoming_mask(xs, bs / 2.0, R_sc)
        accepted_x.append(xs[hit])
        accepted_b.append(bs[hit])
        accepted += int(hit.sum())
        if accepted >= n_samples:
            break
        if drawn >= 10_000 and accepted / drawn < 1e-4:
            raise ValueError("rejection sampling starved (acceptance below 1e-4)")
    xs = np.concatenate(accepted_x)[:n_samples]
    bs = np.concatenate(accepted_b)[:n_samples]
    acceptance = accepted / drawn
    y = xs - 2.0 * g.t0 * bs
    ry = np.hypot(y[:, 0], y[:, 1])
    ok = (ry <= g.rho) & (ry >= g.rho0)
    return FlowoutReport(g, claim1, n_samples, int(ok.sum()), len(xs), acceptance, y)


@dataclass
class EscapeStats:
    max_time: float
    mean_time: float
    n_samples: int
    n_escaped: int
    n_trapped: int
    n_discarded: int
    times: np.ndarray = field(repr=False)


def _rhs_batch(X, P, A, n):
    alpha = A(X[:, 0], X[:, 1])
    ax, ay = A.gradient(X[:, 0], X[:, 1])
    nx, ny = n.gradient(X[:, 0], X[:, 1])
    q = np.sum(P * P, axis=1)
    dX = 2.0 * alpha[:, None] * P
    dP = np.column_stack([nx - q * ax, ny - q * ay])
    return dX, dP


def escape_time(A: CoefficientField = _TRIVIAL, n: CoefficientField = _TRIVIAL,
                obstacle_radius: float = 0.0, R: float = 2.0, n_samples: int = 10_000,
                seed: int = 0, dt: float = 0.005, max_time: float = 50.0) -> EscapeStats:
    """Escape times from B_R to |x| > R + 1 for rays on the zero cosphere.

    Start points are uniform in B_R outside the obstacle and directions
    uniform; |xi| is scaled so that p(x, xi) = 0.  Rays reaching the
    obstacle are discarded; rays still inside at ``max_time`` are flagged
    as possibly trapped.
    """
    rng = np.random.default_rng(seed)
    X = _uniform_annulus(rng, n_samples, obstacle_radius, R)
    P = _unit_vectors(rng, n_samples)
    P *= np.sqrt(n(X[:, 0], X[:, 1]) / A(X[:, 0], X[:, 1]))[:, None]
    times = np.full(n_samples, np.nan)
    active = np.ones(n_samples, dtype=bool)
    discarded = np.zeros(n_samples, dtype=bool)
    t = 0.0
    limit = (R + 1.0) ** 2
    n_steps = int(math.ceil(max_time / dt))
    for _ in range(n_steps):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        x, p = X[idx], P[idx]
        k1x, k1p = _rhs_batch(x, p, A, n)
        k2x, k2p = _rhs_batch(x + 0.5 * dt * k1x, p + 0.5 * dt * k1p, A, n)
        k3x, k3p = _rhs_batch(x + 0.5 * dt * k2x, p + 0.5 * dt * k2p, A, n)
        k4x, k4p = _rhs_batch(x + dt * k3x, p + dt * k3p, A, n)
        xn = x + dt / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x)
        pn = p + dt / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p)
        t += dt
        X[idx], P[idx] = xn, pn
        r2 = np.sum(xn * xn, axis=1)
        if obstacle_radius > 0:
            hit = r2 < obstacle_radius ** 2
            discarded[idx[hit]] = True
            active[idx[hit]] = False
        out = r2 > limit
        if np.any(out):
            # linear interpolation of the crossing time inside the last step
            r_old = np.sqrt(np.sum(x[out] ** 2, axis=1))
            r_new = np.sqrt(r2[out])
            frac = (R + 1.0 - r_old) / np.maximum(r_new - r_old, 1e-300)
            times[idx[out]] = t - dt + np.clip(frac, 0.0, 1.0) * dt
            active[idx[out]] = False
    escaped = ~np.isnan(times)
    trapped = active & ~discarded
    esc_times = times[escaped]
    return EscapeStats(
        max_time=float(esc_times.max()) if esc_times.size else math.nan,
        mean_time=float(esc_times.mean()) if esc_times.size else math.nan,
        n_samples=n_samples,
        n_escaped=int(escaped.sum()),
        n_trapped=int(trapped.sum()),
        n_discarded=int(discarded.sum()),
        times=times,
    )
