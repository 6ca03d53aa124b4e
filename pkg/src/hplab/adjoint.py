"""Sampled lower bounds for the adjoint approximability of a coarse P1 space.

For data f the adjoint solution z solves a(v, z) = (v, f) for all v; on
the fine mesh this is S^H z = b with b_i = int f phi_i.  Its distance to the
coarse space, measured in H^1_k and normalised by ||f||_{L^2}, is a lower
bound for the worst case over all data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse.linalg as spla

from .coefficients import ScatterConfig
from .exact import plane_wave
from .fem import assemble_2d, assemble_reference, astar_system, elliptic_project, DiscreteField, p1_gradients
from .mesh import Mesh2D, prolongation
from .norms import h1k_norm_vector

__all__ = ["EtaSample", "EtaEstimate", "estimate_eta", "white_noise", "refinement_depth"]


@dataclass(frozen=True)
class EtaSample:
    seed: int | None
    kind: str
    ratio: float
    f: np.ndarray = field(repr=False)
    w_h: np.ndarray = field(repr=False)


@dataclass
class EtaEstimate:
    k: float
    h: float
    sample_count: int
    eta_hat: float
    seeds: list
    samples: list = field(default_factory=list, repr=False)
    skipped: int = 0

    def running_max(self) -> np.ndarray:
        return np.maximum.accumulate([s.ratio for s in self.samples])


def refinement_depth(coarse: Mesh2D, fine: Mesh2D) -> int:
    depth = 0
    m = fine
    while m is not coarse:
        if m.parent is None:
            return -1
        m = m.parent
        depth += 1
    return depth


def white_noise(mesh: Mesh2D, rng: np.random.Generator) -> np.ndarray:
    """Complex Gaussian value per triangle, scaled to unit L2 norm."""
    _, area = p1_gradients(mesh)
    f = rng.standard_normal(mesh.n_triangles) + 1j * rng.standard_normal(mesh.n_triangles)
    return f / math.sqrt(np.sum(area * np.abs(f) ** 2))


def _load(mesh: Mesh2D, f: np.ndarray) -> np.ndarray:
    _, area = p1_gradients(mesh)
    b = np.zeros(mesh.n_vertices, dtype=complex)
    np.add.at(b, mesh.triangles, (f * area / 3.0)[:, None])
    return b


def _plane_wave_data(mesh: Mesh2D, cfg: ScatterConfig) -> np.ndarray:
    """Incident wave cut off to the annulus next to the obstacle."""
    _, area = p1_gradients(mesh)
    c = mesh.vertices[mesh.triangles].mean(axis=1)
    r = np.hypot(c[:, 0], c[:, 1])
    f = plane_wave(cfg.k, cfg.direction).value(c[:, 0], c[:, 1])
    f = np.where(r <= cfg.a + 0.5 * (cfg.R - cfg.a), f, 0.0)
    return f / math.sqrt(np.sum(area * np.abs(f) ** 2))


def estimate_eta(cfg: ScatterConfig, coarse: Mesh2D, fine: Mesh2D, n_samples: int,
                 seed: int = 0, projection: str = "h1k", adapted: bool = True) -> EtaEstimate:
    """eta_hat = max over samples of ||z - w_h||_{H^1_k} / ||f||_{L^2}.

    ``projection="h1k"`` takes w_h as the H^1_k-orthogonal projection of z,
    the true best approximation.  ``"elliptic"`` uses the a*-projection
    instead.  With ``adapted`` an extra sample uses the incident wave
    restricted to a neighbourhood of the obstacle as data.
    """
    if n_samples < 8:
        raise ValueError("n_samples must be at least 8")
    if refinement_depth(coarse, fine) < 2:
        raise ValueError("fine mesh must be at least two nested refinements of the coarse mesh")
    if projection not in ("h1k", "elliptic"):
        raise ValueError("projection must be 'h1k' or 'elliptic'")
    k = cfg.k
    S_f = assemble_2d(cfg, fine)
    S_c = assemble_2d(cfg, coarse)
    P = prolongation(coarse, fine)
    Kf, Mf = assemble_reference(fine)
    Gf = (Kf + k * k * Mf).tocsr()
    free_c = S_c.free
    if projection == "h1k":
        Kc, Mc = assemble_reference(coarse)
        Gc = (Kc + k * k * Mc).tocsr()[free_c][:, free_c].astype(complex).tocsc()
        proj_lu = spla.splu(Gc)
    else:
        star_c, star_f = astar_system(S_c), astar_system(S_f)
    rng = np.random.default_rng(seed)
    seeds = [int(s) for s in rng.integers(0, 2 ** 31 - 1, size=n_samples)]
    jobs = [(s, "white-noise") for s in seeds]
    if adapted:
        jobs.append((None, "plane-wave"))
    est = EtaEstimate(k=k, h=coarse.h, sample_count=0, eta_hat=0.0, seeds=seeds)
    for s, kind in jobs:
        if kind == "white-noise":
            f = white_noise(fine, np.random.default_rng(s))
        else:
            f = _plane_wave_data(fine, cfg)
        _, area = p1_gradients(fine)
        fnorm = math.sqrt(np.sum(area * np.abs(f) ** 2))
        if fnorm == 0.0:
            est.skipped += 1
            continue
        z = S_f.solve_vector(_load(fine, f), adjoint=True)
        if projection == "h1k":
            wc = np.zeros(coarse.n_vertices, dtype=complex)
            wc[free_c] = proj_lu.solve((P.T @ (Gf @ z))[free_c])
        else:
            zf = DiscreteField.from_nodal(fine, 1, z, S_f.free)
            wc = elliptic_project(star_c, star_f, zf, P).nodal
        ratio = h1k_norm_vector(fine, z - P @ wc, k) / fnorm
        est.samples.append(EtaSample(s, kind, ratio, f, wc))
        est.sample_count += 1
        est.eta_hat = max(est.eta_hat, ratio)
    return est
