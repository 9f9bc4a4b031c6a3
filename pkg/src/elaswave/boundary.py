"""Region classification, closed-form isotropic impedance, surface waves.

The boundary cotangent space splits into hyperbolic, mixed, and elliptic
regions according to the dimension of the evanescent subspace E_c of the
outgoing right root.  In the elliptic region the impedance is Hermitian
and its smallest eigenvalue decreases strictly in tau, which makes the
Rayleigh (and Stoneley) frequencies robust bisection targets.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    GlancingLimit,
    GlancingSpectrum,
    NoSurfaceWave,
)
from .factorization import (
    BoundaryFrame,
    boundary_polynomial,
    classify_spectrum,
    factorize,
)
from .impedance import Impedance, ModeProjectors, impedance_from_factorization, mode_projectors
from .materials import Material, decompose_harmonic

_LABELS = ("hyperbolic", "mixed", "elliptic", "glancing")


@dataclass(frozen=True)
class RegionClass:
    """Region label with the evanescent dimensions behind it.

    For interfaces dim_intersection is dim(E_c+ and E_c-), measured by
    principal angles between the two evanescent subspaces.
    """

    label: str
    dim_ec: tuple
    dim_intersection: int | None = None

    @property
    def is_glancing(self) -> bool:
        return self.label == "glancing"


def _side_dim_ec(m: Material, frame: BoundaryFrame):
    a = boundary_polynomial(m, frame)
    cls = classify_spectrum(a)
    if cls.glancing:
        return None, None
    return cls.dim_evanescent, a


def _ec_basis(a) -> np.ndarray:
    f = factorize(a, "outgoing")
    return mode_projectors(f).ec_basis()


def classify(materials, frame: BoundaryFrame,
             angle_tol: float = 1e-8) -> RegionClass:
    """Region of a boundary (one material) or interface (two materials).

    Boundary: hyperbolic iff E_c = 0, elliptic iff E_c = E.  Interface:
    hyperbolic iff E_c+ and E_c- intersect trivially, elliptic iff both
    evanescent subspaces are full.
    """
    if isinstance(materials, Material):
        dim, _ = _side_dim_ec(materials, frame)
        if dim is None:
            return RegionClass("glancing", (None,))
        label = {0: "hyperbolic", 3: "elliptic"}.get(dim, "mixed")
        return RegionClass(label, (dim,))

    mp, mm = materials
    dim_p, a_p = _side_dim_ec(mp, frame)
    dim_m, a_m = _side_dim_ec(mm, frame.flipped())
    if dim_p is None or dim_m is None:
        return RegionClass("glancing", (dim_p, dim_m))
    if dim_p == 0 or dim_m == 0:
        inter = 0
    elif dim_p == 3 and dim_m == 3:
        inter = 3
    else:
        bp, bm = _ec_basis(a_p), _ec_basis(a_m)
        cos_angles = np.linalg.svd(bp.conj().T @ bm, compute_uv=False)
        inter = int(np.sum(cos_angles > 1.0 - angle_tol))
    if inter == 0:
        label = "hyperbolic"
    elif dim_p == 3 and dim_m == 3:
        label = "elliptic"
    else:
        label = "mixed"
    return RegionClass(label, (dim_p, dim_m), inter)


def _iso_moduli(m: Material, tol: float = 1e-8):
    h = decompose_harmonic(m.stiffness)
    aniso = (np.linalg.norm(h.a) + np.linalg.norm(h.b) + np.linalg.norm(h.h))
    if aniso > tol * max(m.stiffness.norm, 1e-300):
        raise ValueError("material is not isotropic")
    return h.lam, h.mu


def _outgoing_root(c2: float, rho: float, eta2: float, tau: float,
                   glancing_tol: float = 1e-10) -> complex:
    """Outgoing root of c2(s^2 + eta^2) = rho tau^2 for one wave family."""
    disc = rho * tau * tau / c2 - eta2
    scale = max(abs(rho * tau * tau / c2), eta2, 1.0)
    if abs(disc) <= glancing_tol * scale:
        raise GlancingSpectrum("closed-form root at the glancing transition")
    if disc > 0:
        return float(np.copysign(np.sqrt(disc), -tau))
    return 1j * float(np.sqrt(-disc))


def iso_impedance_closed_form(m: Material, frame: BoundaryFrame) -> Impedance:
    """Outgoing impedance of an isotropic material in SH-SV-P closed form.

    The matrix is assembled from its action on the decoupled SH vector and
    the two coupled SV/P columns, then expressed in the standard basis.
    """
    lam, mu = _iso_moduli(m)
    rho, tau = m.density, frame.tau
    nu, eta = frame.nu, frame.eta
    eta2 = float(eta @ eta)
    s_s = _outgoing_root(mu, rho, eta2, tau)
    s_p = _outgoing_root(lam + 2.0 * mu, rho, eta2, tau)

    if eta2 == 0.0:
        nn = np.outer(nu, nu)
        z = -1j * (mu * s_s * (np.eye(3) - nn) + (lam + 2.0 * mu) * s_p * nn)
        return Impedance(z, "outgoing", frame)

    s_tilde = -eta2 / s_s
    zeta = np.cross(nu, eta) / np.sqrt(eta2)
    basis = np.column_stack([
        zeta.astype(complex),
        eta + s_tilde * nu,
        eta + s_p * nu,
    ])
    images = np.column_stack([
        mu * s_s * zeta,
        mu * (s_s + s_tilde) * eta - 2.0 * mu * eta2 * nu,
        2.0 * mu * s_p * eta + (rho * tau * tau - 2.0 * mu * eta2) * nu,
    ])
    z = -1j * images @ np.linalg.inv(basis)
    return Impedance(z, "outgoing", frame)


def tau_limit(m: Material, nu: np.ndarray, eta_hat: np.ndarray,
              rel_tol: float = 1e-10) -> float:
    """Largest tau with a fully evanescent spectrum, by bisection.

    For isotropic media this is c_s |eta|; in general it is the limiting
    velocity of the slowest family along (nu, eta_hat).
    """
    eta_hat = np.asarray(eta_hat, dtype=float)
    if abs(np.linalg.norm(eta_hat) - 1.0) > 1e-10:
        raise ValueError("eta_hat must be a unit vector")

    def elliptic(t: float) -> bool:
        a = boundary_polynomial(m, BoundaryFrame(nu, eta_hat, -t))
        cls = classify_spectrum(a)
        return (not cls.has_real) and cls.dim_evanescent == 3

    hi = 1.0
    for _ in range(200):
        if not elliptic(hi):
            break
        hi *= 2.0
    else:
        raise ValueError("no non-elliptic tau found")
    lo = hi / 2.0 if elliptic(hi / 2.0) else 0.0
    while lo == 0.0:
        cand = hi / 2.0
        if elliptic(cand):
            lo = cand
            break
        hi = cand
        if hi < 1e-12:
            raise ValueError("could not bracket the elliptic limit")
    while hi - lo > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if elliptic(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class RayleighResult:
    """Surface-wave frequency along a unit tangential covector."""

    tau_r: float
    slowness: float              # |eta| / tau_r
    polarization: np.ndarray     # null vector of z (or z+ + z-) at tau_r
    tau_eta: float
    bracket: tuple
    det_residual: float          # |det z| / ||z||^3 at the root


def _lambda_min(zmat: np.ndarray):
    h = 0.5 * (zmat + zmat.conj().T)
    vals, vecs = np.linalg.eigh(h)
    return float(vals[0]), vecs[:, 0]


def _surface_wave_bisect(zfun, tau_eta: float, rel_tol: float,
                         edge_offset: float) -> RayleighResult:
    t_lo = 1e-3 * tau_eta
    t_hi = (1.0 - edge_offset) * tau_eta
    try:
        f_lo, _ = _lambda_min(zfun(t_lo))
        f_hi, _ = _lambda_min(zfun(t_hi))
    except GlancingSpectrum as exc:
        raise GlancingLimit(f"cannot evaluate near tau_eta: {exc}") from exc
    if f_lo <= 0:
        raise GlancingLimit("impedance not positive definite at the low endpoint")
    if f_hi > 0:
        raise NoSurfaceWave("smallest impedance eigenvalue stays positive "
                            "on the elliptic interval")
    lo, hi = t_lo, t_hi
    while hi - lo > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        fm, _ = _lambda_min(zfun(mid))
        if fm > 0:
            lo = mid
        else:
            hi = mid
    tau_r = 0.5 * (lo + hi)
    zr = zfun(tau_r)
    _, vec = _lambda_min(zr)
    det_res = float(abs(np.linalg.det(zr)) / max(np.linalg.norm(zr) ** 3, 1e-300))
    return RayleighResult(tau_r, 1.0 / tau_r, vec, tau_eta, (t_lo, t_hi), det_res)


def rayleigh_speed(m: Material, nu: np.ndarray, eta_hat: np.ndarray,
                   rel_tol: float = 1e-10,
                   edge_offset: float = 1e-6) -> RayleighResult:
    """Free-surface (Rayleigh) frequency: the zero of lambda_min(z).

    lambda_min decreases strictly in tau on the elliptic interval, so the
    sign change, when present, has a unique root.
    """
    tau_eta = tau_limit(m, nu, eta_hat)

    def zfun(t: float) -> np.ndarray:
        frame = BoundaryFrame(nu, eta_hat, -t)
        a = boundary_polynomial(m, frame)
        return impedance_from_factorization(a, factorize(a, "outgoing")).z

    return _surface_wave_bisect(zfun, tau_eta, rel_tol, edge_offset)


def stoneley_speed(m_plus: Material, m_minus: Material, nu: np.ndarray,
                   eta_hat: np.ndarray, rel_tol: float = 1e-10,
                   edge_offset: float = 1e-6) -> RayleighResult:
    """Interface (Stoneley) frequency: the zero of lambda_min(z+ + z-)."""
    tau_eta = min(tau_limit(m_plus, nu, eta_hat),
                  tau_limit(m_minus, nu, eta_hat))

    def zfun(t: float) -> np.ndarray:
        frame = BoundaryFrame(nu, eta_hat, -t)
        zp = impedance_from_factorization(
            boundary_polynomial(m_plus, frame),
            factorize(boundary_polynomial(m_plus, frame), "outgoing")).z
        fl = frame.flipped()
        zm = impedance_from_factorization(
            boundary_polynomial(m_minus, fl),
            factorize(boundary_polynomial(m_minus, fl), "outgoing")).z
        return zp + zm

    return _surface_wave_bisect(zfun, tau_eta, rel_tol, edge_offset)


def ellipticity_margin(materials, frames) -> tuple[float, list]:
    """Minimum sigma_min(z)/||z|| over non-elliptic, non-glancing frames.

    For material pairs z is replaced by z+ + z-.  Returns the margin and
    per-frame rows (frame, label, normalized sigma_min).
    """
    rows = []
    margin = np.inf
    for frame in frames:
        region = classify(materials, frame)
        if region.label not in ("hyperbolic", "mixed"):
            continue
        if isinstance(materials, Material):
            a = boundary_polynomial(materials, frame)
            z = impedance_from_factorization(a, factorize(a, "outgoing")).z
        else:
            mp, mm = materials
            ap = boundary_polynomial(mp, frame)
            am = boundary_polynomial(mm, frame.flipped())
            z = (impedance_from_factorization(ap, factorize(ap, "outgoing")).z
                 + impedance_from_factorization(am, factorize(am, "outgoing")).z)
        sv = np.linalg.svd(z, compute_uv=False)
        val = float(sv[-1] / max(sv[0], 1e-300))
        margin = min(margin, val)
        rows.append((frame, region.label, val))
    return margin, rows
