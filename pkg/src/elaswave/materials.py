"""Stiffness tensors and elastic materials.

A stiffness tensor is a real rank-4 tensor C^{ijkm} on 3-space with the
minor and major symmetries C^{ijkm} = C^{jikm} = C^{kmij}.  This module
constructs isotropic, transversely isotropic, and general (triclinic)
tensors, rotates them, decomposes them into rotation-irreducible pieces,
tests strong convexity, and converts to/from 6x6 Voigt storage.  Materials
pair a stiffness tensor with a mass density.
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    AsymmetricStiffness,
    AsymmetricVoigtMatrix,
    MaterialFileError,
    NonPositiveDensity,
    NonUnitAxis,
    NotARotation,
)

# Voigt pair order: 11, 22, 33, 23, 13, 12
_VOIGT_PAIRS = ((0, 0), (1, 1), (2, 2), (1, 2), (0, 2), (0, 1))

_EYE = np.eye(3)


def _symmetrize(c: np.ndarray) -> np.ndarray:
    """Project onto the subspace with minor and major symmetries."""
    c = 0.5 * (c + c.transpose(1, 0, 2, 3))
    c = 0.5 * (c + c.transpose(0, 1, 3, 2))
    c = 0.5 * (c + c.transpose(2, 3, 0, 1))
    return c


@dataclass(frozen=True)
class StiffnessTensor:
    """Rank-4 stiffness tensor with minor and major symmetries.

    Construction symmetrizes the input exactly; inputs whose asymmetry
    exceeds 1e-8 relative are rejected as likely data errors rather than
    rounding noise.
    """

    entries: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.entries, dtype=float)
        if c.shape != (3, 3, 3, 3):
            raise AsymmetricStiffness(
                f"stiffness entries must have shape (3,3,3,3), got {c.shape}")
        sym = _symmetrize(c)
        scale = np.linalg.norm(sym)
        if scale > 0 and np.linalg.norm(c - sym) > 1e-8 * scale:
            raise AsymmetricStiffness(
                "input violates minor/major symmetry beyond 1e-8 relative")
        sym.setflags(write=False)
        object.__setattr__(self, "entries", sym)

    def __getitem__(self, idx):
        return self.entries[idx]

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.entries))

    def apply(self, strain: np.ndarray) -> np.ndarray:
        """Stress C[e] for a symmetric 3x3 strain e."""
        return np.einsum("ijkm,km->ij", self.entries, strain)


@dataclass(frozen=True)
class Material:
    """Stiffness tensor plus mass density.

    Units are metadata only; all numerics are unit-agnostic.
    """

    stiffness: StiffnessTensor
    density: float
    name: str = ""

    def __post_init__(self):
        if not self.density > 0:
            raise NonPositiveDensity(f"density must be positive, got {self.density}")


def isotropic_stiffness(lam: float, mu: float) -> StiffnessTensor:
    c = (lam * np.einsum("ij,km->ijkm", _EYE, _EYE)
         + mu * (np.einsum("ik,jm->ijkm", _EYE, _EYE)
                 + np.einsum("im,jk->ijkm", _EYE, _EYE)))
    return StiffnessTensor(c)


def make_isotropic(lam: float, mu: float, rho: float, name: str = "") -> Material:
    """Isotropic material from Lame parameters and density."""
    return Material(isotropic_stiffness(lam, mu), rho, name)


def transversely_isotropic_stiffness(lam, mu, alpha, beta, gamma,
                                     axis) -> StiffnessTensor:
    j = np.asarray(axis, dtype=float)
    if abs(np.linalg.norm(j) - 1.0) > 1e-12:
        raise NonUnitAxis(f"symmetry axis must be a unit vector, |J| = {np.linalg.norm(j)}")
    jj = np.outer(j, j)
    c = isotropic_stiffness(lam, mu).entries.copy()
    c += alpha * (np.einsum("ij,km->ijkm", _EYE, jj)
                  + np.einsum("km,ij->ijkm", _EYE, jj))
    c += beta * (np.einsum("ik,jm->ijkm", _EYE, jj)
                 + np.einsum("jm,ik->ijkm", _EYE, jj)
                 + np.einsum("im,jk->ijkm", _EYE, jj)
                 + np.einsum("jk,im->ijkm", _EYE, jj))
    c += gamma * np.einsum("ij,km->ijkm", jj, jj)
    return StiffnessTensor(c)


def make_transversely_isotropic(lam, mu, alpha, beta, gamma, axis, rho,
                                name: str = "") -> Material:
    """Transversely isotropic material: five moduli and a unit symmetry axis."""
    return Material(transversely_isotropic_stiffness(lam, mu, alpha, beta, gamma, axis),
                    rho, name)


def rotate_stiffness(c: StiffnessTensor, o: np.ndarray) -> StiffnessTensor:
    """Rotate a stiffness tensor: C'^{ijkm} = O_ia O_jb O_kc O_md C^{abcd}.

    A transversely isotropic tensor with axis J maps to one with axis OJ.
    """
    o = np.asarray(o, dtype=float)
    if np.linalg.norm(o.T @ o - _EYE) > 1e-10 or not np.isclose(np.linalg.det(o), 1.0, atol=1e-8):
        raise NotARotation("O must satisfy O^T O = I and det O = +1")
    rotated = np.einsum("ia,jb,kc,md,abcd->ijkm", o, o, o, o, c.entries)
    return StiffnessTensor(rotated)


@dataclass(frozen=True)
class HarmonicDecomposition:
    """Rotation-irreducible pieces of a stiffness tensor.

    lam, mu are the scalar parts, a and b the two traceless symmetric
    deviators, and h the totally symmetric traceless rank-4 remainder.
    """

    lam: float
    mu: float
    a: np.ndarray
    b: np.ndarray
    h: np.ndarray

    def reassemble(self) -> StiffnessTensor:
        c = isotropic_stiffness(self.lam, self.mu).entries.copy()
        c += (np.einsum("ij,km->ijkm", _EYE, self.a)
              + np.einsum("km,ij->ijkm", _EYE, self.a))
        c += (np.einsum("ik,jm->ijkm", _EYE, self.b)
              + np.einsum("jm,ik->ijkm", _EYE, self.b)
              + np.einsum("im,jk->ijkm", _EYE, self.b)
              + np.einsum("jk,im->ijkm", _EYE, self.b))
        c += self.h
        return StiffnessTensor(c)


def decompose_harmonic(c: StiffnessTensor) -> HarmonicDecomposition:
    """Split C into scalar, deviatoric, and harmonic parts.

    The scalars come from the two full traces, the deviators from a 2x2
    linear system in the two partial traces, and the harmonic part is the
    remainder.
    """
    t = c.entries
    full1 = np.einsum("iikk->", t)   # 9 lam + 6 mu
    full2 = np.einsum("ijij->", t)   # 3 lam + 12 mu
    lam, mu = np.linalg.solve(np.array([[9.0, 6.0], [3.0, 12.0]]),
                              np.array([full1, full2]))
    p = np.einsum("iikm->km", t) - (3 * lam + 2 * mu) * _EYE   # 3A + 4B
    r = np.einsum("ijim->jm", t) - (lam + 4 * mu) * _EYE       # 2A + 5B
    a = (5 * p - 4 * r) / 7.0
    b = (3 * r - 2 * p) / 7.0
    partial = HarmonicDecomposition(lam, mu, a, b, np.zeros((3, 3, 3, 3)))
    h = t - partial.reassemble().entries
    return HarmonicDecomposition(float(lam), float(mu), a, b, h)


def to_mandel(c: StiffnessTensor) -> np.ndarray:
    """6x6 matrix with sqrt(2)/2 scaling so eigenvalues match the tensor form."""
    m = np.empty((6, 6))
    for bi, (i, j) in enumerate(_VOIGT_PAIRS):
        for bj, (k, l) in enumerate(_VOIGT_PAIRS):
            f = (np.sqrt(2.0) if bi >= 3 else 1.0) * (np.sqrt(2.0) if bj >= 3 else 1.0)
            m[bi, bj] = f * c.entries[i, j, k, l]
    return m


def check_strong_convexity(c: StiffnessTensor) -> tuple[bool, float]:
    """Positive definiteness of e -> (Ce|e) on symmetric 2-tensors.

    Returns (is_convex, minimum eigenvalue) from the Mandel-scaled 6x6
    spectrum, which coincides with the tensor-form spectrum.
    """
    eigs = np.linalg.eigvalsh(to_mandel(c))
    return bool(eigs[0] > 0), float(eigs[0])


def to_voigt(c: StiffnessTensor) -> np.ndarray:
    """6x6 engineering (unscaled) Voigt matrix; pair order 11,22,33,23,13,12."""
    m = np.empty((6, 6))
    for bi, (i, j) in enumerate(_VOIGT_PAIRS):
        for bj, (k, l) in enumerate(_VOIGT_PAIRS):
            m[bi, bj] = c.entries[i, j, k, l]
    return m


def from_voigt(m: np.ndarray) -> StiffnessTensor:
    """Stiffness tensor from an engineering Voigt matrix (must be symmetric)."""
    m = np.asarray(m, dtype=float)
    if m.shape != (6, 6):
        raise AsymmetricVoigtMatrix(f"Voigt matrix must be 6x6, got {m.shape}")
    scale = np.linalg.norm(m)
    if scale > 0 and np.linalg.norm(m - m.T) > 1e-12 * scale:
        raise AsymmetricVoigtMatrix("Voigt matrix is not symmetric")
    c = np.zeros((3, 3, 3, 3))
    for bi, (i, j) in enumerate(_VOIGT_PAIRS):
        for bj, (k, l) in enumerate(_VOIGT_PAIRS):
            v = m[bi, bj]
            for ii, jj in ((i, j), (j, i)):
                for kk, ll in ((k, l), (l, k)):
                    c[ii, jj, kk, ll] = v
    return StiffnessTensor(c)


def nondimensionalize(m: Material, modulus_ref: float | None = None,
                      density_ref: float | None = None) -> Material:
    """Scale stiffness and density by reference values to condition eigenproblems.

    Defaults: the largest stiffness entry and the density itself.
    """
    cref = modulus_ref if modulus_ref is not None else float(np.abs(m.stiffness.entries).max())
    rref = density_ref if density_ref is not None else m.density
    return Material(StiffnessTensor(m.stiffness.entries / cref), m.density / rref, m.name)


# --- material files ---------------------------------------------------------

def material_from_dict(d: dict) -> Material:
    """Build a material from the JSON schema used by the CLI.

    Raises MaterialFileError on schema problems; emits a warning (only) when
    the stiffness is not strongly convex.
    """
    if not isinstance(d, dict):
        raise MaterialFileError("material document must be a JSON object")
    try:
        name = str(d.get("name", ""))
        density = float(d["density"])
        spec = d["stiffness"]
        kind = spec["type"]
    except (KeyError, TypeError, ValueError) as exc:
        raise MaterialFileError(f"missing or malformed material field: {exc}") from exc

    if kind == "isotropic":
        try:
            mat = make_isotropic(float(spec["lambda"]), float(spec["mu"]), density, name)
        except KeyError as exc:
            raise MaterialFileError(f"isotropic stiffness needs {exc}") from exc
    elif kind == "transversely_isotropic":
        try:
            mat = make_transversely_isotropic(
                float(spec["lambda"]), float(spec["mu"]), float(spec["alpha"]),
                float(spec["beta"]), float(spec["gamma"]),
                np.asarray(spec["axis"], dtype=float), density, name)
        except KeyError as exc:
            raise MaterialFileError(f"transversely isotropic stiffness needs {exc}") from exc
    elif kind == "voigt":
        if spec.get("convention", "engineering") != "engineering":
            raise MaterialFileError("only the engineering Voigt convention is supported")
        mat = Material(from_voigt(np.asarray(spec["matrix"], dtype=float)), density, name)
    else:
        raise MaterialFileError(f"unknown stiffness type {kind!r}")

    convex, min_eig = check_strong_convexity(mat.stiffness)
    if not convex:
        warnings.warn(
            f"material {name!r} is not strongly convex (min eigenvalue {min_eig:g})",
            stacklevel=2)
    return mat


def load_material(path: str) -> Material:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise MaterialFileError(f"cannot read material file {path}: {exc}") from exc
    return material_from_dict(doc)
