"""Acoustic (Christoffel) tensor and bulk plane-wave modes."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import IndefiniteAcousticTensor
from .materials import Material, StiffnessTensor, rotate_stiffness

_REFERENCE_FRAME = (np.array([0.0, 0.0, 1.0]),
                    np.array([1.0, 0.0, 0.0]),
                    np.array([0.0, 1.0, 0.0]))


def acoustic_tensor(c: StiffnessTensor, xi: np.ndarray) -> np.ndarray:
    """Symmetric 3x3 tensor l^{ik} = C^{ijkm} xi_j xi_m."""
    xi = np.asarray(xi, dtype=float)
    return np.einsum("ijkm,j,m->ik", c.entries, xi, xi)


@dataclass(frozen=True)
class ChristoffelModes:
    """Plane-wave speeds and polarizations along a unit direction.

    Speeds are sorted descending; polarizations are the matching orthonormal
    eigenvectors (rows); projectors are the spectral projectors of the
    acoustic tensor, one per eigenvalue cluster, summing to the identity.
    """

    direction: np.ndarray
    speeds: np.ndarray
    polarizations: np.ndarray
    projectors: tuple
    degenerate: bool


def _cluster(vals: np.ndarray, rel_tol: float) -> list[list[int]]:
    scale = max(abs(vals[0]), abs(vals[-1]), 1e-300)
    clusters = [[0]]
    for k in range(1, len(vals)):
        if abs(vals[k] - vals[clusters[-1][0]]) <= rel_tol * scale:
            clusters[-1].append(k)
        else:
            clusters.append([k])
    return clusters


def _orient_degenerate(vecs: np.ndarray) -> np.ndarray:
    """Reproducible basis in a degenerate eigenspace.

    Gram-Schmidt the projections of a fixed reference frame (e3, e1, e2)
    onto the subspace.
    """
    p = vecs.T @ vecs
    basis = []
    for ref in _REFERENCE_FRAME:
        v = p @ ref
        for u in basis:
            v = v - (u @ v) * u
        n = np.linalg.norm(v)
        if n > 1e-8:
            basis.append(v / n)
        if len(basis) == vecs.shape[0]:
            break
    if len(basis) < vecs.shape[0]:  # reference frame nearly inside the complement
        return vecs
    return np.array(basis)


def christoffel_modes(m: Material, xi_hat: np.ndarray,
                      degeneracy_tol: float = 1e-8) -> ChristoffelModes:
    """Eigen-decomposition of l(xi)/rho; speeds are sqrt of the eigenvalues."""
    xi_hat = np.asarray(xi_hat, dtype=float)
    if abs(np.linalg.norm(xi_hat) - 1.0) > 1e-12:
        raise ValueError("direction must be a unit vector")
    ell = acoustic_tensor(m.stiffness, xi_hat) / m.density
    vals, vecs = np.linalg.eigh(ell)   # ascending
    vmax = max(vals[-1], 1e-300)
    if vals[0] < -1e-10 * vmax:
        raise IndefiniteAcousticTensor(
            f"acoustic tensor indefinite along {xi_hat}: eigenvalue {vals[0]:g}")
    vals = np.clip(vals, 0.0, None)

    order = np.argsort(vals)[::-1]
    vals, vecs = vals[order], vecs[:, order].T   # rows are eigenvectors

    clusters = _cluster(vals, degeneracy_tol)
    degenerate = any(len(cl) > 1 for cl in clusters)
    projectors = []
    pols = np.empty((3, 3))
    for cl in clusters:
        sub = vecs[cl]
        if len(cl) > 1:
            sub = _orient_degenerate(sub)
        pols[cl] = sub
        projectors.append(sub.T @ sub)
    return ChristoffelModes(xi_hat, np.sqrt(vals), pols, tuple(projectors), degenerate)


def fibonacci_sphere(n: int) -> np.ndarray:
    """Deterministic quasi-uniform sample of n unit vectors."""
    k = np.arange(n)
    phi = np.pi * (3.0 - np.sqrt(5.0)) * k
    z = 1.0 - 2.0 * (k + 0.5) / n
    r = np.sqrt(1.0 - z * z)
    return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])


def eigen_gap_scan(m: Material, n_directions: int,
                   exclude_axis: np.ndarray | None = None,
                   exclude_angle_deg: float = 0.0):
    """Minimum relative eigenvalue gap of the acoustic tensor over the sphere.

    Directions within exclude_angle_deg of +-exclude_axis are skipped.
    Returns (min_gap, rows) where rows hold per-direction data for reporting.
    """
    if n_directions < 6:
        raise ValueError("need at least 6 directions")
    dirs = fibonacci_sphere(n_directions)
    if exclude_axis is not None and exclude_angle_deg > 0:
        axis = np.asarray(exclude_axis, dtype=float)
        axis = axis / np.linalg.norm(axis)
        cos_lim = np.cos(np.radians(exclude_angle_deg))
        dirs = dirs[np.abs(dirs @ axis) < cos_lim]
    min_gap = np.inf
    rows = []
    for d in dirs:
        ell = acoustic_tensor(m.stiffness, d) / m.density
        vals = np.sort(np.linalg.eigvalsh(ell))[::-1]
        gap = float(np.min(vals[:-1] - vals[1:]) / max(vals[0], 1e-300))
        min_gap = min(min_gap, gap)
        rows.append((d, np.sqrt(np.clip(vals, 0.0, None)), gap))
    return min_gap, rows
