"""Scalar coefficient fields and the scattering configuration."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = ["CoefficientField", "ScatterConfig", "KINDS"]

KINDS = ("constant", "radial-bump", "gaussian-bump")


@dataclass(frozen=True)
class CoefficientField:
    """``background + amplitude * bump(|x - center| / radius)``.

    The diffusion coefficient is taken isotropic, A(x) = alpha(x) I, so one
    scalar field describes either A or n.  Bumps:

    * ``radial-bump``: (1 - s^2)^3, C^2 with compact support.
    * ``gaussian-bump``: exp(1 - 1/(1 - s^2)), C-infinity with compact support.

    Both equal 1 at the centre and vanish for s >= 1.
    """

    kind: str = "constant"
    background: float = 1.0
    amplitude: float = 0.0
    center: tuple = (0.0, 0.0)
    radius: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown coefficient kind {self.kind!r}")
        if self.radius <= 0:
            raise ValueError("bump radius must be positive")
        lo, _ = self.bounds
        if lo <= 0:
            raise ValueError("coefficient must stay positive")

    @property
    def is_trivial(self) -> bool:
        return self.background == 1.0 and (self.kind == "constant" or self.amplitude == 0.0)

    @property
    def bounds(self):
        if self.kind == "constant":
            return self.background, self.background
        vals = (self.background, self.background + self.amplitude)
        return min(vals), max(vals)

    @property
    def support_radius(self) -> float:
        """Radius of a centred disk containing the support of (field - 1)."""
        if self.is_trivial:
            return 0.0
        if self.kind == "constant" or self.background != 1.0:
            return math.inf
        return math.hypot(*self.center) + self.radius

    def _s(self, x, y):
        return np.hypot(np.asarray(x) - self.center[0], np.asarray(y) - self.center[1]) / self.radius

    def _profile(self, s):
        inside = s < 1.0
        q = np.where(inside, 1.0 - s * s, 1.0)
        if self.kind == "radial-bump":
            b = q ** 3
            db_ds = -6.0 * s * q ** 2
        else:
            with np.errstate(over="ignore", divide="ignore"):
                b = np.exp(1.0 - 1.0 / q)
                db_ds = b * (-2.0 * s / (q * q))
        return np.where(inside, b, 0.0), np.where(inside, db_ds, 0.0)

    def __call__(self, x, y):
        x = np.asarray(x, dtype=float)
        if self.kind == "constant" or self.amplitude == 0.0:
            return np.full(np.broadcast(x, y).shape, float(self.background))
        b, _ = self._profile(self._s(x, y))
        return self.background + self.amplitude * b

    def gradient(self, x, y):
        """Return (d/dx, d/dy) of the field."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        shape = np.broadcast(x, y).shape
        if self.kind == "constant" or self.amplitude == 0.0:
            return np.zeros(shape), np.zeros(shape)
        dx = x - self.center[0]
        dy = y - self.center[1]
        r = np.hypot(dx, dy)
        _, db = self._profile(r / self.radius)
        with np.errstate(invalid="ignore", divide="ignore"):
            scale = np.where(r > 0, self.amplitude * db / (self.radius * r), 0.0)
        return scale * dx, scale * dy


@dataclass(frozen=True)
class ScatterConfig:
    """Plane-wave scattering problem in B_R outside a disk of radius ``a``.

    ``a = 0`` means no obstacle.  ``bc`` is the condition on the obstacle
    boundary, "dirichlet" (sound-soft) or "neumann" (sound-hard).
    """

    k: float
    R: float = 2.0
    a: float = 1.0
    direction: tuple = (1.0, 0.0)
    A: CoefficientField = field(default_factory=CoefficientField)
    n: CoefficientField = field(default_factory=CoefficientField)
    bc: str = "dirichlet"
    n_modes: int | None = None

    def __post_init__(self):
        if self.k <= 0:
            raise ValueError("k must be positive")
        if not (0 <= self.a < self.R):
            raise ValueError("need 0 <= a < R")
        if abs(math.hypot(*self.direction) - 1.0) > 1e-12:
            raise ValueError("incidence direction must be a unit vector")
        if self.bc not in ("dirichlet", "neumann"):
            raise ValueError("bc must be 'dirichlet' or 'neumann'")

    @property
    def A_bounds(self):
        return self.A.bounds

    @property
    def n_bounds(self):
        return self.n.bounds
