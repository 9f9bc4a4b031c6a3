"""Boundary symbol polynomial, its linearization, and spectral factorization.

For a boundary frame (nu, eta, tau) the displacement symbol along the
interior normal is the self-adjoint quadratic matrix polynomial

    A(s) = A0 s^2 + (A1 + A1*) s + A2,

with A0 = nu.C.nu positive definite, A1^{ik} = nu_j C^{ijkm} eta_m, and
A2 = l(eta) - rho tau^2.  Its 6x6 linearization carries displacement and
traction traces; invariant subspaces of the linearization give right/left
roots Q, Q# with A(s) = (s - Q#) A0 (s - Q), split by outgoing/incoming
spectra.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .acoustic import acoustic_tensor
from .errors import (
    ContourTooClose,
    DefectiveEigenvalue,
    DegenerateA0,
    GlancingSpectrum,
    IllConditionedJ,
    NotAnEigenvalue,
    QuadratureNotConverged,
    SigmaCardinality,
)
from .materials import Material


@dataclass(frozen=True)
class BoundaryFrame:
    """Unit interior conormal nu, tangential covector eta, frequency tau."""

    nu: np.ndarray
    eta: np.ndarray
    tau: float

    def __post_init__(self):
        nu = np.asarray(self.nu, dtype=float)
        eta = np.asarray(self.eta, dtype=float)
        if abs(np.linalg.norm(nu) - 1.0) > 1e-12:
            raise ValueError("conormal must be a unit vector")
        if abs(nu @ eta) > 1e-12 * max(np.linalg.norm(eta), 1.0):
            raise ValueError("eta must be tangential (orthogonal to nu)")
        if self.tau == 0:
            raise ValueError("tau must be nonzero")
        nu.setflags(write=False)
        eta.setflags(write=False)
        object.__setattr__(self, "nu", nu)
        object.__setattr__(self, "eta", eta)

    def flipped(self) -> "BoundaryFrame":
        """Frame of the opposite side of an interface (conormal negated)."""
        return BoundaryFrame(-self.nu, self.eta, self.tau)


@dataclass(frozen=True)
class QuadraticMatrixPolynomial:
    """Coefficients of A(s) = A0 s^2 + (A1 + A1*) s + A2, A0 > 0, A2 = A2*."""

    a0: np.ndarray
    a1: np.ndarray
    a2: np.ndarray
    frame: BoundaryFrame | None = None
    rho: float | None = None

    def __post_init__(self):
        a0 = np.asarray(self.a0, dtype=complex)
        a1 = np.asarray(self.a1, dtype=complex)
        a2 = np.asarray(self.a2, dtype=complex)
        scale = self.coefficient_scale(a0, a1, a2)
        if np.linalg.norm(a0 - a0.conj().T) > 1e-12 * scale:
            raise ValueError("A0 must be Hermitian")
        if np.linalg.norm(a2 - a2.conj().T) > 1e-12 * scale:
            raise ValueError("A2 must be Hermitian")
        if np.linalg.eigvalsh(a0)[0] <= 0:
            raise DegenerateA0("A0 must be positive definite")
        for a in (a0, a1, a2):
            a.setflags(write=False)
        object.__setattr__(self, "a0", a0)
        object.__setattr__(self, "a1", a1)
        object.__setattr__(self, "a2", a2)

    @staticmethod
    def coefficient_scale(a0, a1, a2) -> float:
        return max(np.linalg.norm(a0), np.linalg.norm(a1), np.linalg.norm(a2), 1e-300)

    @property
    def scale(self) -> float:
        return self.coefficient_scale(self.a0, self.a1, self.a2)

    @property
    def a1_sym(self) -> np.ndarray:
        return self.a1 + self.a1.conj().T

    def __call__(self, s: complex) -> np.ndarray:
        return self.a0 * s * s + self.a1_sym * s + self.a2

    def derivative(self, s: complex) -> np.ndarray:
        return 2.0 * s * self.a0 + self.a1_sym

    def with_a2(self, a2: np.ndarray) -> "QuadraticMatrixPolynomial":
        return QuadraticMatrixPolynomial(self.a0, self.a1, a2, self.frame, self.rho)


def boundary_polynomial(m: Material, frame: BoundaryFrame) -> QuadraticMatrixPolynomial:
    """Displacement symbol coefficients at a boundary frame."""
    c = m.stiffness.entries
    a0 = np.einsum("j,ijkm,m->ik", frame.nu, c, frame.nu)
    a1 = np.einsum("j,ijkm,m->ik", frame.nu, c, frame.eta)
    a2 = acoustic_tensor(m.stiffness, frame.eta) - m.density * frame.tau ** 2 * np.eye(3)
    if np.linalg.eigvalsh(0.5 * (a0 + a0.T))[0] <= 0:
        raise DegenerateA0("material is not convex along the conormal")
    return QuadraticMatrixPolynomial(a0, a1, a2, frame=frame, rho=m.density)


@dataclass(frozen=True)
class StrohMatrix:
    """6x6 linearization of A(s); K S is Hermitian for K the block swap."""

    matrix: np.ndarray

    @property
    def block_swap(self) -> np.ndarray:
        k = np.zeros((6, 6))
        k[:3, 3:] = np.eye(3)
        k[3:, :3] = np.eye(3)
        return k


def stroh(a: QuadraticMatrixPolynomial) -> StrohMatrix:
    """Linearize: A(s)^{-1} = J1 (s - S)^{-1} J2*."""
    a0inv = np.linalg.inv(a.a0)
    a1h = a.a1.conj().T
    s = np.block([
        [-a0inv @ a.a1, a0inv],
        [-a.a2 + a1h @ a0inv @ a.a1, -a1h @ a0inv],
    ])
    return StrohMatrix(s)


@dataclass(frozen=True)
class EigenvalueGroup:
    """One point of the spectrum with multiplicities and, if real, its sign type."""

    value: complex
    alg_mult: int
    geo_mult: int
    is_real: bool
    sign_type: str | None        # 'positive' | 'negative' | None
    glancing: bool
    kernel: np.ndarray           # 3 x geo_mult orthonormal kernel basis of A(value)


@dataclass(frozen=True)
class SpectrumClassification:
    groups: tuple
    stroh_norm: float

    @property
    def glancing(self) -> bool:
        return any(g.glancing for g in self.groups)

    @property
    def real_groups(self) -> tuple:
        return tuple(g for g in self.groups if g.is_real)

    @property
    def has_real(self) -> bool:
        return any(g.is_real for g in self.groups)

    @property
    def dim_evanescent(self) -> int:
        """Number of non-real eigenvalues in the upper half plane (with mult.)."""
        return sum(g.alg_mult for g in self.groups
                   if not g.is_real and g.value.imag > 0)


def _cluster_eigenvalues(vals: np.ndarray, tol: float) -> list[np.ndarray]:
    order = np.lexsort((vals.imag, vals.real))
    vals = vals[order]
    clusters: list[list[complex]] = [[vals[0]]]
    for v in vals[1:]:
        if abs(v - np.mean(clusters[-1])) <= tol:
            clusters[-1].append(v)
        else:
            clusters.append([v])
    return [np.array(c) for c in clusters]


def kernel_basis(a: QuadraticMatrixPolynomial, s: complex,
                 rel_tol: float = 1e-6) -> np.ndarray:
    """Orthonormal basis (3 x k) of ker A(s) from an SVD cutoff."""
    mat = a(s)
    u, sv, vh = np.linalg.svd(mat)
    cutoff = rel_tol * max(sv[0], a.scale * 1e-12)
    k = int(np.sum(sv <= cutoff))
    if k == 0:
        return np.zeros((3, 0), dtype=complex)
    return vh[3 - k:].conj().T


def classify_spectrum(a: QuadraticMatrixPolynomial,
                      grouping_tol: float = 1e-8,
                      glancing_tol: float = 1e-6) -> SpectrumClassification:
    """Eigenvalues of the linearization, grouped, with sign types for real ones.

    A real eigenvalue is glancing when the derivative form on its kernel is
    indefinite or too small, or when the eigenvalue is defective.
    """
    s6 = stroh(a).matrix
    norm = float(np.linalg.norm(s6))
    vals = np.linalg.eigvals(s6)
    tol_real = grouping_tol * (1.0 + norm)
    groups = []
    for cluster in _cluster_eigenvalues(vals, max(tol_real, 1e3 * np.finfo(float).eps * norm)):
        mean = complex(np.mean(cluster))
        is_real = abs(mean.imag) <= tol_real
        value = complex(mean.real) if is_real else mean
        kern = kernel_basis(a, value)
        geo = kern.shape[1]
        alg = len(cluster)
        sign_type = None
        glancing = False
        if is_real:
            if geo < alg:
                glancing = True   # defective real eigenvalue
            if geo > 0:
                da = a.derivative(value.real)
                form = kern.conj().T @ da @ kern
                form = 0.5 * (form + form.conj().T)
                eigs = np.linalg.eigvalsh(form)
                thresh = glancing_tol * max(np.linalg.norm(da), 1e-300)
                if eigs[0] > thresh:
                    sign_type = "positive"
                elif eigs[-1] < -thresh:
                    sign_type = "negative"
                else:
                    glancing = True
        groups.append(EigenvalueGroup(value, alg, geo, is_real, sign_type,
                                      glancing, kern))
    return SpectrumClassification(tuple(groups), norm)


def _sigma_values(classification: SpectrumClassification, direction: str,
                  tau: float) -> list[complex]:
    """Target spectrum half: upper half plane plus matching-type real points.

    Outgoing real eigenvalues satisfy -tau (A'(s)v|v) > 0 on the kernel, so
    they are of positive type when tau < 0 and negative type when tau > 0.
    """
    if direction not in ("outgoing", "incoming"):
        raise ValueError(f"direction must be outgoing or incoming, got {direction!r}")
    want = "positive" if (tau < 0) == (direction == "outgoing") else "negative"
    sigma = []
    for g in classification.groups:
        if not g.is_real and g.value.imag > 0:
            sigma.extend([g.value] * g.alg_mult)
        elif g.is_real and g.sign_type == want:
            sigma.extend([g.value] * g.alg_mult)
    return sigma


@dataclass(frozen=True)
class SpectralFactorization:
    """Right/left roots of A(s) = (s - Q#) A0 (s - Q) with spec(Q) = sigma."""

    q: np.ndarray
    q_sharp: np.ndarray
    sigma: tuple
    direction: str
    tau: float
    poly: QuadraticMatrixPolynomial
    classification: SpectrumClassification = field(repr=False, default=None)

    @property
    def solvency_residual(self) -> float:
        a = self.poly
        res = a.a0 @ self.q @ self.q + a.a1_sym @ self.q + a.a2
        return float(np.linalg.norm(res) / a.scale)


def factorize(a: QuadraticMatrixPolynomial, direction: str = "outgoing",
              tau: float | None = None,
              classification: SpectrumClassification | None = None,
              grouping_tol: float = 1e-8,
              glancing_tol: float = 1e-6,
              max_j_condition: float = 1e10) -> SpectralFactorization:
    """Spectral factorization via an ordered Schur form of the linearization.

    The invariant subspace for the selected half of the spectrum is computed
    with eigenvalue reordering (robust to the double shear eigenvalue); the
    right root is read off its displacement block.
    """
    if tau is None:
        if a.frame is None:
            raise ValueError("tau is required when the polynomial carries no frame")
        tau = a.frame.tau
    if classification is None:
        classification = classify_spectrum(a, grouping_tol, glancing_tol)
    if classification.glancing:
        raise GlancingSpectrum("spectrum has a glancing real eigenvalue")

    sigma = _sigma_values(classification, direction, tau)
    if len(sigma) != 3:
        raise SigmaCardinality(
            f"selected spectrum has cardinality {len(sigma)}, expected 3")

    targets = np.array(sorted(set(sigma), key=lambda z: (z.real, z.imag)))
    match_tol = max(grouping_tol * (1.0 + classification.stroh_norm), 1e-12)

    def select(z):
        return bool(np.min(np.abs(z - targets)) <= 10 * match_tol)

    s6 = stroh(a).matrix
    t, zvec, sdim = scipy.linalg.schur(s6, output="complex", sort=select)
    if sdim != 3:
        raise SigmaCardinality(
            f"ordered Schur selected a {sdim}-dimensional subspace, expected 3")
    x = zvec[:, :3]
    x1 = x[:3, :]
    if np.linalg.cond(x1) > max_j_condition:
        raise IllConditionedJ("displacement block of the invariant subspace is "
                              "too ill-conditioned")
    q = x1 @ t[:3, :3] @ np.linalg.inv(x1)
    q_sharp = -(a.a0 @ q + a.a1_sym) @ np.linalg.inv(a.a0)

    fact = SpectralFactorization(q, q_sharp, tuple(sigma), direction, float(tau),
                                 a, classification)
    _validate_factorization(fact)
    return fact


def _validate_factorization(f: SpectralFactorization) -> None:
    if f.solvency_residual > 1e-10:
        raise ArithmeticError(
            f"solvency residual {f.solvency_residual:g} exceeds 1e-10")
    eq = np.linalg.eigvals(f.q)
    es = np.linalg.eigvals(f.q_sharp)
    scale = max(np.max(np.abs(eq)), np.max(np.abs(es)), 1e-300)
    gap = np.min(np.abs(eq[:, None] - es[None, :]))
    if gap <= 1e-6 * scale:
        raise GlancingSpectrum(
            f"right/left root spectra nearly intersect (gap {gap:g})")


def factorization_residual(f: SpectralFactorization, s_values) -> float:
    """Max relative residual of A(s) - (s - Q#) A0 (s - Q) over given s."""
    a = f.poly
    worst = 0.0
    eye = np.eye(3)
    for s in s_values:
        lhs = a(s)
        rhs = (s * eye - f.q_sharp) @ a.a0 @ (s * eye - f.q)
        worst = max(worst, np.linalg.norm(lhs - rhs) / (a.scale * max(1.0, abs(s) ** 2)))
    return float(worst)


# --- contour-integral oracles ----------------------------------------------

def _circle_moments(a: QuadraticMatrixPolynomial, center: complex, radius: float,
                    n_nodes: int):
    """Trapezoidal (1/2 pi i) contour integrals of A^{-1} and s A^{-1}."""
    theta = 2.0 * np.pi * np.arange(n_nodes) / n_nodes
    c0 = np.zeros((3, 3), dtype=complex)
    c1 = np.zeros((3, 3), dtype=complex)
    for th in theta:
        z = center + radius * np.exp(1j * th)
        w = radius * np.exp(1j * th) / n_nodes   # includes the 1/(2 pi i) factor
        inv = np.linalg.inv(a(z))
        c0 += w * inv
        c1 += w * z * inv
    return c0, c1


def contour_root_check(a: QuadraticMatrixPolynomial, q: np.ndarray,
                       center: complex, radius: float,
                       n_nodes: int = 256, tol: float = 1e-10,
                       max_nodes: int = 1 << 16):
    """Residual of Q . (contour integral of A^{-1}) - (contour integral of s A^{-1}).

    The circle must enclose part of spec(Q) only, with clearance > radius/10
    from every eigenvalue of A.  Node counts double until two successive
    quadratures agree to tol.  Returns (relative_residual, info).
    """
    spec_a = np.linalg.eigvals(stroh(a).matrix)
    dist_to_circle = np.abs(np.abs(spec_a - center) - radius)
    if np.min(dist_to_circle) <= radius / 10.0:
        raise ContourTooClose("an eigenvalue lies within radius/10 of the contour")
    spec_q = np.linalg.eigvals(q)
    spec_sharp = [z for z in spec_a
                  if np.min(np.abs(z - spec_q)) > 1e-6 * max(1.0, np.max(np.abs(spec_a)))]
    if any(abs(z - center) < radius for z in spec_sharp):
        raise ContourTooClose("circle encloses left-root spectrum")

    prev = None
    nodes = n_nodes
    while True:
        c0, c1 = _circle_moments(a, center, radius, nodes)
        if prev is not None and np.linalg.norm(c0 - prev[0]) + np.linalg.norm(c1 - prev[1]) < tol:
            break
        if nodes >= max_nodes:
            raise QuadratureNotConverged("contour quadrature did not converge")
        prev = (c0, c1)
        nodes *= 2

    scale = np.linalg.norm(c1)
    enclosed_rank = int(np.sum(np.abs(spec_q - center) < radius))
    if enclosed_rank == 0 or scale < 1e-12:
        return 0.0, {"nodes": nodes, "enclosed_rank": enclosed_rank, "empty": True}
    residual = float(np.linalg.norm(q @ c0 - c1) / scale)
    return residual, {"nodes": nodes, "enclosed_rank": enclosed_rank, "empty": False}


def residue(a: QuadraticMatrixPolynomial, s: float,
            radius: float | None = None, n_nodes: int = 256,
            classification: SpectrumClassification | None = None) -> np.ndarray:
    """Residue of A(z)^{-1} at a semisimple real eigenvalue, by contour quadrature.

    The result is Hermitian, supported on ker A(s), and semidefinite with the
    sign of the eigenvalue's type.
    """
    if classification is None:
        classification = classify_spectrum(a)
    tol = 1e-8 * (1.0 + classification.stroh_norm)
    group = None
    for g in classification.groups:
        if g.is_real and abs(g.value.real - s) <= max(tol, 1e-8 * (1 + abs(s))):
            group = g
            break
    if group is None:
        raise NotAnEigenvalue(f"{s} is not a real eigenvalue")
    if group.geo_mult < group.alg_mult:
        raise DefectiveEigenvalue(f"real eigenvalue {s} is defective")
    if radius is None:
        others = [g.value for g in classification.groups if g is not group]
        nearest = min((abs(z - group.value) for z in others), default=1.0)
        radius = 0.45 * nearest
    theta = 2.0 * np.pi * np.arange(n_nodes) / n_nodes
    r = np.zeros((3, 3), dtype=complex)
    for th in theta:
        z = group.value.real + radius * np.exp(1j * th)
        r += (radius * np.exp(1j * th) / n_nodes) * np.linalg.inv(a(z))
    return 0.5 * (r + r.conj().T)
