"""Explicit mesh-threshold and error-bound constants from ingredient constants.

All functions are plain formula evaluations.  The ingredients (solution
operator bound, H^2 regularity constant, interpolation constant and so on)
are inputs; nothing here estimates them.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields, replace
from typing import NamedTuple

__all__ = [
    "IngredientConstants",
    "Theorem1Constants",
    "Theorem2Constants",
    "theorem1_constants",
    "theorem2_constants",
    "star_constants",
    "continuity_constant",
    "lemma8_eta_bounds",
    "lemma13_constant",
    "lemma14_constants",
    "composed_theorem1",
    "load_ingredients",
]


@dataclass(frozen=True)
class IngredientConstants:
    A_min: float = 1.0
    A_max: float = 1.0
    n_min: float = 1.0
    n_max: float = 1.0
    C_DtN1: float = 1.0
    C_DtN2: float = 1.0
    C_sol: float = 1.0
    R: float = 1.0
    k0: float = 1.0
    R0: float = 1.0
    C_osc: float = 1.0
    C_PF: float = 1.0
    C_H2: float = 1.0
    C_int: float = 1.0
    C_MS: float = 1.0
    C_cont: float | None = None
    p: int = 1
    d: int = 2

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if v is None:
                continue
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ValueError(f"{f.name} must be a positive finite number, got {v!r}")
        if self.A_min > self.A_max:
            raise ValueError("A_min must not exceed A_max")
        if self.n_min > self.n_max:
            raise ValueError("n_min must not exceed n_max")
        if self.k0 * self.R0 < 1.0:
            raise ValueError("k0 * R0 must be at least 1")
        if int(self.p) != self.p or self.d not in (2, 3):
            raise ValueError("p must be an integer and d must be 2 or 3")

    def with_(self, **changes) -> "IngredientConstants":
        return replace(self, **changes)

    def as_dict(self) -> dict:
        return asdict(self)


def continuity_constant(c: IngredientConstants) -> float:
    """C_cont: the supplied value, else max(A_max, n_max) + C_DtN1."""
    if c.C_cont is not None:
        return c.C_cont
    return max(c.A_max, c.n_max) + c.C_DtN1


def star_constants(c: IngredientConstants):
    """(C_cont*, C_coer*, C_H2*) of the coercive form a*."""
    cont = c.A_max + c.C_DtN1
    coer = min(c.C_DtN2 / c.C_PF, c.A_min / (1.0 + c.C_PF))
    h2 = c.C_H2 * (1.0 + math.sqrt(2.0) / coer)
    return cont, coer, h2


def _eta_factor(c: IngredientConstants) -> float:
    """Bracket of the p = 1 adjoint-approximability bound: eta <= hk * factor."""
    return (math.sqrt(2.0) * c.C_int * c.C_H2 * c.C_sol * c.R
            * (c.n_max + 1.0 / (c.k0 * c.R0 * c.C_sol) + 2.0))


class Theorem1Constants(NamedTuple):
    C1: float
    C2: float
    C3: float

    def threshold_holds(self, h: float, k: float) -> bool:
        return h * h * k ** 3 <= self.C1

    def bound(self, h: float, k: float) -> float:
        return self.C2 * h * k + self.C3 * h * h * k ** 3


def theorem1_constants(c: IngredientConstants) -> Theorem1Constants:
    """Threshold h^2 k^3 <= C1 and bound C2 hk + C3 h^2 k^3 for p = 1."""
    bracket = c.n_max + 1.0 / (c.k0 * c.R0 * c.C_sol) + 2.0
    coer = min(c.C_DtN2 / c.C_PF, c.A_min / (1.0 + c.C_PF))
    C1 = (1.0 / (4.0 * (c.A_max + c.C_DtN1) * c.n_max * c.C_H2 ** 2 * c.C_int ** 2 * c.C_sol * c.R)
          / bracket / (1.0 + math.sqrt(2.0) / coer))
    C2 = math.sqrt(2.0) * c.C_int * c.C_osc / c.A_min * (max(c.A_max, c.n_max) + c.C_DtN1)
    C3 = (4.0 * math.sqrt(2.0) / math.sqrt(c.A_min) * (c.A_max + c.C_DtN1) * c.C_int ** 2 * c.C_H2
          * c.C_sol * c.R * c.C_osc * math.sqrt(c.n_max + c.A_min) * bracket)
    return Theorem1Constants(C1, C2, C3)


class Theorem2Constants(NamedTuple):
    C1: float
    C2: float
    C3: float
    C_MS: float
    C_sol: float
    R: float

    @staticmethod
    def _poly_term(h, k, p):
        # k (hk)^(p+1) / p^p, arranged so large p underflows instead of overflowing
        return k * (h * k) * (h * k / p) ** p

    def threshold_lhs(self, h: float, k: float, p: int) -> float:
        return (h * k) ** 2 / p + self.C_sol * self.R * self._poly_term(h, k, p)

    def threshold_holds(self, h: float, k: float, p: int) -> bool:
        return self.threshold_lhs(h, k, p) <= self.C1

    def bound(self, h: float, k: float, p: int) -> float:
        return ((self.C2 + self.C3 * self.C_MS / p) * h * k
                + self.C3 * self.C_MS * self.C_sol * self.R * self._poly_term(h, k, p))


def theorem2_constants(c: IngredientConstants) -> Theorem2Constants:
    """Constants of the high-order (A = I, n = 1) threshold and bound."""
    C1 = (1.0 / (2.0 * math.sqrt(2.0) * (1.0 + c.C_DtN1) * c.C_H2 * c.C_MS)
          / (1.0 + math.sqrt(2.0) / min(c.C_DtN2 / c.C_PF, 1.0 / (1.0 + c.C_PF))))
    C2 = math.sqrt(2.0) * continuity_constant(c) * c.C_int * c.C_osc
    C3 = 4.0 * (1.0 + c.C_DtN1) * c.C_int * c.C_osc
    return Theorem2Constants(C1, C2, C3, c.C_MS, c.C_sol, c.R)


def lemma8_eta_bounds(c: IngredientConstants, h: float, k: float, p: int | None = None):
    """(bound_i, bound_ii): the H^2-based and the analytic-splitting bounds on eta."""
    p = c.p if p is None else p
    bound_i = h * k * _eta_factor(c)
    bound_ii = c.C_MS * (h / p + c.C_sol * c.R * (h * k / p) ** p)
    return bound_i, bound_ii


def lemma13_constant(c: IngredientConstants) -> float:
    """Threshold constant for h k^2 eta <= C."""
    cont, _, h2 = star_constants(c)
    return 1.0 / (2.0 * math.sqrt(2.0) * cont * h2 * c.C_int * c.n_max)


def lemma14_constants(c: IngredientConstants):
    """Constants of the bound C hk + C' hk^2 eta on the relative error."""
    cont, _, _ = star_constants(c)
    c2 = math.sqrt(2.0) * continuity_constant(c) * c.C_int * c.C_osc / c.A_min
    c3 = 4.0 * cont * c.C_int * c.C_osc * math.sqrt(c.n_max + c.A_min) / math.sqrt(c.A_min)
    return c2, c3


def composed_theorem1(c: IngredientConstants) -> Theorem1Constants:
    """The p = 1 constants recomposed from the threshold, the error bound and eta."""
    e = _eta_factor(c)
    c2, c3 = lemma14_constants(c.with_(C_cont=None))
    return Theorem1Constants(lemma13_constant(c) / e, c2, c3 * e)


def load_ingredients(text: str) -> IngredientConstants:
    """Parse ``key = value`` lines (``#`` starts a comment)."""
    values = {}
    names = {f.name for f in fields(IngredientConstants)}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in names:
            raise ValueError(f"line {lineno}: unknown ingredient {key!r}")
        values[key] = int(val) if key in ("p", "d") else float(val)
    return IngredientConstants(**values)
