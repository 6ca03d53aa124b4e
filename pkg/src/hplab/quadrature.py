"""Gauss rules on the unit interval and on the reference triangle."""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi

__all__ = ["gauss_interval", "triangle_rule"]


@lru_cache(maxsize=None)
def gauss_interval(n_points: int):
    """Gauss-Legendre points and weights on [0, 1]."""
    t, w = np.polynomial.legendre.leggauss(n_points)
    return 0.5 * (t + 1.0), 0.5 * w


@lru_cache(maxsize=None)
def triangle_rule(degree: int):
    """Collapsed-coordinate product rule on the unit triangle.

    Returns barycentric coordinates ``(q, 3)`` and weights summing to 1/2.
    The rule integrates polynomials of total degree ``degree`` exactly.
    """
    if degree < 0:
        raise ValueError("degree must be non-negative")
    m = max(1, (degree + 2) // 2)
    # Gauss-Jacobi with weight (1 - t) absorbs the Jacobian of the collapse.
    tu, wu = roots_jacobi(m, 1.0, 0.0)
    u = 0.5 * (tu + 1.0)
    wu = 0.25 * wu
    v, wv = gauss_interval(m)
    U, V = np.meshgrid(u, v, indexing="ij")
    x = U.ravel()
    y = (V * (1.0 - U)).ravel()
    w = np.outer(wu, wv).ravel()
    bary = np.column_stack([1.0 - x - y, x, y])
    return bary, w
