import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hplab.coefficients import CoefficientField
from hplab.rays import (ObstacleHit, PhasePoint, directly_incoming_mask, escape_time, flow,
                        shadow_area, shadow_area_gap,
                        flowout_geometry, is_directly_incoming, symbol, verify_flowout_claims)

finite = st.floats(-3, 3, allow_nan=False)


@settings(max_examples=40)
@given(x0=finite, x1=finite, a=st.floats(0, 2 * math.pi), t=st.floats(-5, 5))
def test_free_flow_is_straight(x0, x1, a, t):
    xi = (math.cos(a), math.sin(a))
    out = flow(PhasePoint((x0, x1), xi), t)
    assert np.allclose(out.x, (x0 + 2 * t * xi[0], x1 + 2 * t * xi[1]), atol=1e-12)
    assert np.allclose(out.xi, xi, atol=0)


def _bump_fields():
    A = CoefficientField("radial-bump", amplitude=0.3, center=(0.5, 0.0), radius=1.0)
    n = CoefficientField("gaussian-bump", amplitude=0.5, center=(-0.3, 0.2), radius=0.8)
    return A, n


def test_symbol_conserved_through_bumps():
    A, n = _bump_fields()
    p0 = PhasePoint((-2.0, 0.1), (1.0, 0.05))
    s0 = symbol(p0.x, p0.xi, A, n)
    for t in (0.3, 1.0, 2.0):
        out = flow(p0, t, A, n)
        assert abs(symbol(out.x, out.xi, A, n) - s0) <= 1e-8


def test_time_reversal():
    A, n = _bump_fields()
    p0 = PhasePoint((-1.0, 0.4), (0.8, -0.3))
    back = flow(flow(p0, 1.5, A, n), -1.5, A, n)
    assert np.allclose(back.x, p0.x, atol=1e-7) and np.allclose(back.xi, p0.xi, atol=1e-7)


def test_flow_hits_obstacle():
    with pytest.raises(ObstacleHit):
        flow(PhasePoint((3.0, 0.0), (-1.0, 0.0)), 2.0, obstacle_radius=1.0)


@pytest.mark.parametrize("xi,expected", [((1.0, 0.0), False), ((-1.0, 0.0), True),
                                         ((0.0, 1.0), True)])
def test_incoming_examples(xi, expected):
    # from x = (2, 0): looking back along +x hits the unit disk
    assert is_directly_incoming(PhasePoint((2.0, 0.0), xi), 1.0) is expected


def test_tangency_counts_as_hit():
    assert not is_directly_incoming(PhasePoint((2.0, 1.0), (1.0, 0.0)), 1.0)
    assert is_directly_incoming(PhasePoint((2.0, 1.0 + 1e-9), (1.0, 0.0)), 1.0)


def test_incoming_mask_matches_flow():
    rng = np.random.default_rng(4)
    x = rng.uniform(-3, 3, (400, 2))
    x = x[np.hypot(x[:, 0], x[:, 1]) > 1.2]
    a = rng.uniform(0, 2 * np.pi, len(x))
    xi = np.column_stack([np.cos(a), np.sin(a)])
    mask = directly_incoming_mask(x, xi, 1.0)
    for xx, vv, m in zip(x[:40], xi[:40], mask[:40]):
        try:
            flow(PhasePoint(tuple(xx), tuple(vv)), -10.0, obstacle_radius=1.0)
            hit = False
        except ObstacleHit:
            hit = True
        assert hit != m


def test_flowout_geometry_values():
    g = flowout_geometry(1.0, 2.0)
    assert g.rho0 == 1.5 and g.t0 == 0.125 and g.L2 == 0.5
    assert g.eps > 0
    with pytest.raises(ValueError):
        flowout_geometry(1.0, 1.0)


def test_eps_positive_and_increasing():
    rhos = np.linspace(1.01, 10.0, 60)
    eps = [flowout_geometry(1.0, r).eps for r in rhos]
    assert eps[0] > 0 and np.all(np.diff(eps) > 0)


def test_lengths_tie():
    # L1 and 2 t0 coincide, so only the weak ordering is credited
    for rho in (1.5, 2.0, 8.0):
        g = flowout_geometry(1.0, rho)
        assert g.L1 == pytest.approx(2 * g.t0, rel=1e-12)
        strict, weak = g.length_order()
        assert weak and not strict


def test_flowout_claims_hold():
    rep = verify_flowout_claims(1.0, 2.0, 100_000, seed=1)
    assert rep.all_pass
    assert 0 < rep.acceptance < 1


def test_flowout_deterministic():
    a = verify_flowout_claims(1.0, 1.5, 2000, seed=7)
    b = verify_flowout_claims(1.0, 1.5, 2000, seed=7)
    assert np.array_equal(a.claim2_points, b.claim2_points)


def test_free_escape_time_bound():
    s = escape_time(n_samples=2000, seed=2)
    assert s.n_trapped == 0 and s.n_escaped == 2000
    assert s.max_time <= (2 * 2.0 + 1) / 2 + 1e-9


def test_weak_bump_not_trapping():
    n = CoefficientField("radial-bump", amplitude=0.2, radius=1.0)
    s = escape_time(n=n, n_samples=1000, max_time=20.0)
    assert s.n_trapped == 0


def test_strong_bump_traps():
    n = CoefficientField("radial-bump", amplitude=20.0, radius=1.0)
    s = escape_time(n=n, n_samples=2000, max_time=20.0, dt=0.002)
    assert s.n_trapped > 0
    assert s.n_trapped + s.n_escaped + s.n_discarded == 2000


def test_obstacle_rays_discarded():
    s = escape_time(obstacle_radius=1.0, n_samples=2000)
    assert s.n_discarded > 0 and s.n_trapped == 0


@pytest.mark.parametrize("rho", [1.01, 1.5, 2.0, 8.0])
def test_shadow_area_matches_monte_carlo(rho):
    rng = np.random.default_rng(5)
    n = 400_000
    r = rho * np.sqrt(rng.uniform(0, 1, n))
    th = rng.uniform(0, 2 * np.pi, n)
    x, y = r * np.cos(th), r * np.sin(th)
    # shadow for b = (1, 0): inside the disk, or behind it in the strip |y| <= 1
    inside = (x * x + y * y <= 1.0) | ((np.abs(y) <= 1.0) & (x >= 0))
    frac = inside.mean()
    assert shadow_area(1.0, rho) / (math.pi * rho * rho) == pytest.approx(frac, abs=4e-3)


def test_shadow_is_strict_subset():
    gaps = [shadow_area_gap(1.0, r) for r in np.linspace(1.001, 20.0, 200)]
    assert min(gaps) > 0
    assert shadow_area(1.0, 1e6) / (math.pi * 1e12) < 1e-5
