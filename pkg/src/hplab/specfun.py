"""Cylindrical Bessel and Hankel functions of integer order, real argument.

J_n is obtained by downward (Miller) recurrence normalised with
J_0 + 2 sum J_2k = 1.  The same sweep accumulates the Neumann series that
give Y_0 and Y_1, after which Y_n follows by upward recurrence.  Logarithmic
derivatives of H^(1)_n are computed with a ratio recurrence that cannot
overflow.

Every routine accepts a scalar or an array argument ``x``.  Arrays are
evaluated elementwise and vectorised over the sweep.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = [
    "bessel_j",
    "bessel_y",
    "hankel1",
    "bessel_j_orders",
    "bessel_jy_orders",
    "hankel1_orders",
    "hankel1_ratio",
    "hankel1_ratio_orders",
    "bessel_j_prime",
    "bessel_y_prime",
]

_RESCALE = 1e200
_EULER_GAMMA = 0.57721566490153286061


def _as_positive(x):
    arr = np.asarray(x, dtype=float)
    if arr.size == 0:
        return arr
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0.0):
        raise ValueError("Bessel argument must be finite and strictly positive")
    return arr


def _check_order(n):
    if int(n) != n or n < 0:
        raise ValueError(f"order must be a non-negative integer, got {n!r}")
    return int(n)


def miller_start(n_max: int, x_max: float) -> int:
    """Even starting index for the downward sweep.

    The backward recurrence converges once the start lies well inside the
    region where J decays, i.e. beyond both ``n_max`` and the turning point
    ``x``.  The buffer grows with the width of the Airy transition zone.
    """
    base = max(float(n_max), float(x_max))
    start = int(math.ceil(base + 15.0 * max(x_max, 1.0) ** (1.0 / 3.0) + 30.0))
    return start + (start % 2)


def _miller(n_max: int, x: np.ndarray, with_y_sums: bool):
    """Run the downward sweep; return J_0..J_{n_max} and the Y series sums."""
    m = miller_start(n_max, float(np.max(x)) if x.size else 1.0)
    rows = np.zeros((n_max + 1,) + x.shape)
    nxt = np.zeros_like(x)
    cur = np.full_like(x, 1e-30)
    norm = np.zeros_like(x)
    s0 = np.zeros_like(x)  # sum_{k>=1} (-1)^k J_2k / k
    s1 = np.zeros_like(x)  # sum_{k>=1} (-1)^k (2k+1) J_{2k+1} / (k(k+1))
    two_over_x = 2.0 / x
    if m <= n_max:
        rows[m] = cur
    for j in range(m, 0, -1):
        # cur = J_j, nxt = J_{j+1}; produce J_{j-1}
        prev = j * two_over_x * cur - nxt
        nxt, cur = cur, prev
        i = j - 1
        if i % 2 == 0:
            if i > 0:
                norm += 2.0 * cur
                if with_y_sums:
                    kk = i // 2
                    s0 += (-1.0 if kk % 2 else 1.0) * cur / kk
            else:
                norm += cur
        elif with_y_sums and i >= 3:
            kk = (i - 1) // 2
            s1 += (-1.0 if kk % 2 else 1.0) * i * cur / (kk * (kk + 1))
        if i <= n_max:
            rows[i] = cur
        big = np.abs(cur) > _RESCALE
        if np.any(big):
            scale = np.where(big, 1.0 / _RESCALE, 1.0)
            cur *= scale
            nxt *= scale
            norm *= scale
            s0 *= scale
            s1 *= scale
            rows[i:] *= scale
    rows /= norm
    return rows, s0 / norm, s1 / norm


def bessel_j_orders(n_max: int, x) -> np.ndarray:
    """Return J_0(x), ..., J_{n_max}(x) stacked along the first axis."""
    n_max = _check_order(n_max)
    x = _as_positive(x)
    rows, _, _ = _miller(n_max, x, with_y_sums=False)
    return rows


def bessel_jy_orders(n_max: int, x):
    """Return (J, Y) arrays of shape ``(n_max + 1,) + shape(x)``.

    Raises OverflowError when Y_n leaves the representable range.
    """
    n_max = _check_order(n_max)
    x = _as_positive(x)
    jrows, s0, s1 = _miller(max(n_max, 1), x, with_y_sums=True)
    j0, j1 = jrows[0], jrows[1]
    lg = np.log(0.5 * x)
    y0 = (2.0 / np.pi) * ((lg + _EULER_GAMMA) * j0 - 2.0 * s0)
    y1 = (2.0 / np.pi) * (-j0 / x + (lg + _EULER_GAMMA - 1.0) * j1 - s1)
    yrows = np.empty_like(jrows)
    yrows[0] = y0
    yrows[1] = y1
    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(1, max(n_max, 1)):
            yrows[n + 1] = (2.0 * n / x) * yrows[n] - yrows[n - 1]
    if not np.all(np.isfinite(yrows[: n_max + 1])):
        raise OverflowError("Y_n recurrence overflowed; reduce the maximal order")
    return jrows[: n_max + 1], yrows[: n_max + 1]


def hankel1_orders(n_max: int, x) -> np.ndarray:
    """Return H^(1)_0(x), ..., H^(1)_{n_max}(x) as a complex array."""
    j, y = bessel_jy_orders(n_max, x)
    return j + 1j * y


def bessel_j(n: int, x):
    """J_n(x) for integer n >= 0 and x > 0."""
    n = _check_order(n)
    out = bessel_j_orders(n, x)[n]
    return float(out) if np.ndim(out) == 0 else out


def bessel_y(n: int, x):
    """Y_n(x) for integer n >= 0 and x > 0."""
    n = _check_order(n)
    out = bessel_jy_orders(n, x)[1][n]
    return float(out) if np.ndim(out) == 0 else out


def hankel1(n: int, x):
    """H^(1)_n(x) = J_n(x) + i Y_n(x)."""
    n = _check_order(n)
    j, y = bessel_jy_orders(n, x)
    out = j[n] + 1j * y[n]
    return complex(out) if np.ndim(out) == 0 else out


def bessel_j_prime(n: int, x):
    """J_n'(x) using J_n' = J_{n-1} - (n/x) J_n (and J_0' = -J_1)."""
    n = _check_order(n)
    rows = bessel_j_orders(n + 1, x)
    x = np.asarray(x, dtype=float)
    out = -rows[1] if n == 0 else rows[n - 1] - (n / x) * rows[n]
    return float(out) if np.ndim(out) == 0 else out


def bessel_y_prime(n: int, x):
    """Y_n'(x) using the same relation as for J."""
    n = _check_order(n)
    _, rows = bessel_jy_orders(n + 1, x)
    x = np.asarray(x, dtype=float)
    out = -rows[1] if n == 0 else rows[n - 1] - (n / x) * rows[n]
    return float(out) if np.ndim(out) == 0 else out


def hankel1_ratio_orders(n_max: int, x: float) -> np.ndarray:
    """Return H_n'(x)/H_n(x) for n = 0..n_max (scalar x).

    With r_n = H_n/H_{n-1} the recurrence r_{n+1} = 2n/x - 1/r_n is
    stable upward, and H_n'/H_n = 1/r_n - n/x.
    """
    n_max = _check_order(n_max)
    x = float(_as_positive(x))
    j, y = bessel_jy_orders(1, x)
    h0 = complex(j[0], y[0])
    h1 = complex(j[1], y[1])
    out = np.empty(n_max + 1, dtype=complex)
    r = h1 / h0
    out[0] = -r
    for n in range(1, n_max + 1):
        out[n] = 1.0 / r - n / x
        r = 2.0 * n / x - 1.0 / r
    if not np.all(np.isfinite(out)):
        raise OverflowError("Hankel ratio recurrence left the representable range")
    return out


def hankel1_ratio(n: int, kR: float) -> complex:
    """H^(1)_n'(kR)/H^(1)_n(kR); negative orders share the value of |n|."""
    if int(n) != n:
        raise ValueError("order must be an integer")
    return complex(hankel1_ratio_orders(abs(int(n)), kR)[abs(int(n))])
