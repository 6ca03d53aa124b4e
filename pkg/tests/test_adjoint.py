import numpy as np
import pytest

from hplab.adjoint import EtaEstimate, estimate_eta, refinement_depth, white_noise
from hplab.coefficients import ScatterConfig
from hplab.fem import assemble_2d
from hplab.mesh import mesh_annulus, mesh_refine
from hplab.norms import h1k_norm_vector


@pytest.fixture(scope="module")
def meshes():
    coarse = mesh_annulus(1.0, 2.0, 0.2)
    mid = mesh_refine(coarse, project_boundary=False)
    fine = mesh_refine(mid, project_boundary=False)
    return coarse, mid, fine


@pytest.fixture(scope="module")
def estimate(meshes):
    coarse, _, fine = meshes
    return estimate_eta(ScatterConfig(k=10.0), coarse, fine, 16, seed=3)


def test_preconditions(meshes):
    coarse, mid, fine = meshes
    cfg = ScatterConfig(k=5.0)
    with pytest.raises(ValueError):
        estimate_eta(cfg, coarse, mid, 8)
    with pytest.raises(ValueError):
        estimate_eta(cfg, coarse, fine, 4)
    assert refinement_depth(coarse, fine) == 2
    assert refinement_depth(mid, coarse) == -1


def test_estimate_structure(estimate):
    assert isinstance(estimate, EtaEstimate)
    assert estimate.sample_count == 17  # 16 white-noise samples plus the adapted one
    assert len(estimate.seeds) == 16
    assert estimate.eta_hat == max(s.ratio for s in estimate.samples)
    run = estimate.running_max()
    assert np.all(np.diff(run) >= 0) and run[-1] == estimate.eta_hat


def test_samples_are_auditable(estimate, meshes):
    # every ratio is reproduced from its stored (f, w_h) pair
    coarse, _, fine = meshes
    from hplab.adjoint import _load
    from hplab.fem import p1_gradients
    from hplab.mesh import prolongation

    S = assemble_2d(ScatterConfig(k=10.0), fine)
    P = prolongation(coarse, fine)
    _, area = p1_gradients(fine)
    for s in estimate.samples[:3]:
        z = S.solve_vector(_load(fine, s.f), adjoint=True)
        fn = np.sqrt(np.sum(area * np.abs(s.f) ** 2))
        assert h1k_norm_vector(fine, z - P @ s.w_h, 10.0) / fn == pytest.approx(s.ratio, rel=1e-9)


def test_zero_data_skipped(meshes, monkeypatch):
    coarse, _, fine = meshes
    import hplab.adjoint as adj

    monkeypatch.setattr(adj, "white_noise", lambda mesh, rng: np.zeros(mesh.n_triangles, complex))
    est = adj.estimate_eta(ScatterConfig(k=5.0), coarse, fine, 8, adapted=False)
    assert est.skipped == 8 and est.sample_count == 0 and est.eta_hat == 0.0


def test_white_noise_unit_norm(meshes):
    from hplab.fem import p1_gradients

    _, _, fine = meshes
    f = white_noise(fine, np.random.default_rng(0))
    _, area = p1_gradients(fine)
    assert np.sum(area * np.abs(f) ** 2) == pytest.approx(1.0)


def test_deterministic(meshes):
    coarse, _, fine = meshes
    a = estimate_eta(ScatterConfig(k=5.0), coarse, fine, 8, seed=11)
    b = estimate_eta(ScatterConfig(k=5.0), coarse, fine, 8, seed=11)
    assert a.eta_hat == b.eta_hat and a.seeds == b.seeds


def test_elliptic_projection_variant_not_better_than_best(meshes):
    coarse, _, fine = meshes
    cfg = ScatterConfig(k=6.0)
    best = estimate_eta(cfg, coarse, fine, 8, seed=1, adapted=False)
    ell = estimate_eta(cfg, coarse, fine, 8, seed=1, adapted=False, projection="elliptic")
    for b, e in zip(best.samples, ell.samples):
        assert b.ratio <= e.ratio * (1 + 1e-10)


def test_sample_doubling_saturates(meshes):
    coarse, _, fine = meshes
    cfg = ScatterConfig(k=10.0)
    e16 = estimate_eta(cfg, coarse, fine, 16, seed=5)
    e32 = estimate_eta(cfg, coarse, fine, 32, seed=5)
    assert abs(e32.eta_hat - e16.eta_hat) <= 0.25 * e16.eta_hat
