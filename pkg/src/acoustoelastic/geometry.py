"""Materials, planar corner sectors and the exponential (CGO) solution families."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Materials:
    lam: float = 2.0
    mu: float = 1.0
    rho_e: float = 1.0
    rho_b: float = 1.0
    kappa: float = 1.0
    dim: int = 2

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError("mu must be positive")
        if not 2 * self.lam + self.dim * self.mu > 0:
            raise ValueError("need 2*lam + dim*mu > 0")
        for name in ("rho_e", "rho_b", "kappa"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    def kp(self, omega: float) -> float:
        return omega * math.sqrt(self.rho_e / (2 * self.mu + self.lam))

    def ks(self, omega: float) -> float:
        return omega * math.sqrt(self.rho_e / self.mu)

    def ka(self, omega: float) -> float:
        return omega * math.sqrt(self.rho_b / self.kappa)


@dataclass(frozen=True)
class SectorGeometry:
    """Truncated corner {x = r(cos t, sin t): theta_m <= t <= theta_M, r < h}."""

    theta_m: float
    theta_M: float
    h: float = 1.0

    def __post_init__(self):
        if not (-math.pi < self.theta_m < self.theta_M < math.pi):
            raise ValueError("need -pi < theta_m < theta_M < pi")
        if not self.theta_M - self.theta_m < math.pi:
            raise ValueError("sector must be strictly convex (opening < pi)")
        if not self.h > 0:
            raise ValueError("h must be positive")

    @property
    def opening(self) -> float:
        return self.theta_M - self.theta_m

    @property
    def tau_M(self):
        return np.array([math.cos(self.theta_M), math.sin(self.theta_M)])

    @property
    def tau_m(self):
        return np.array([math.cos(self.theta_m), math.sin(self.theta_m)])

    @property
    def nu_M(self):
        return np.array([-math.sin(self.theta_M), math.cos(self.theta_M)])

    @property
    def nu_m(self):
        return np.array([math.sin(self.theta_m), -math.cos(self.theta_m)])

    def contains(self, x) -> np.ndarray:
        x = np.atleast_2d(x)
        r = np.hypot(x[:, 0], x[:, 1])
        t = np.arctan2(x[:, 1], x[:, 0])
        return (r <= self.h) & (t >= self.theta_m) & (t <= self.theta_M)


def admissible_direction(sector: SectorGeometry) -> tuple[float, float]:
    """Direction angle opposite the sector bisector and its decay constant."""
    if sector.opening >= math.pi:
        raise ValueError("sector is not strictly convex")
    phi = 0.5 * (sector.theta_m + sector.theta_M) + math.pi
    delta = math.cos(0.5 * sector.opening)
    return phi, delta


@dataclass(frozen=True)
class CgoPair:
    s: float
    phi: float
    delta: float = float("nan")
    d: np.ndarray = field(init=False, repr=False, compare=False)
    d_perp: np.ndarray = field(init=False, repr=False, compare=False)
    rho: np.ndarray = field(init=False, repr=False, compare=False)
    p: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.s > 0:
            raise ValueError("s must be positive")
        d = np.array([math.cos(self.phi), math.sin(self.phi)])
        dp = np.array([-math.sin(self.phi), math.cos(self.phi)])
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "d_perp", dp)
        object.__setattr__(self, "rho", self.s * (d + 1j * dp))
        object.__setattr__(self, "p", dp - 1j * d)

    @classmethod
    def for_sector(cls, sector: SectorGeometry, s: float) -> "CgoPair":
        phi, delta = admissible_direction(sector)
        return cls(s, phi, delta)


def cgo_scalar(pair: CgoPair, x):
    """e^{rho.x}; ``x`` has trailing dimension 2."""
    x = np.asarray(x, dtype=float)
    return np.exp(x @ pair.rho)


def cgo_vector(pair: CgoPair, x):
    return np.multiply.outer(cgo_scalar(pair, x), pair.p)


def cgo_gradient_scalar(pair: CgoPair, x):
    return np.multiply.outer(cgo_scalar(pair, x), pair.rho)


def cgo_traction(pair: CgoPair, nu, x, mat: Materials):
    """Traction of p e^{rho.x} on a line with unit normal nu."""
    nu = np.asarray(nu, dtype=float)
    if abs(np.linalg.norm(nu) - 1.0) > 1e-10:
        raise ValueError("normal must have unit length")
    rho, p = pair.rho, pair.p
    vec = mat.mu * ((rho @ nu) * p + (p @ nu) * rho)
    return np.multiply.outer(cgo_scalar(pair, x), vec)


def cgo_traction_field(pair: CgoPair, normals, x, mat: Materials):
    """Traction with a pointwise normal field (rows of ``normals``)."""
    rho, p = pair.rho, pair.p
    v0 = cgo_scalar(pair, x)
    rn = normals @ rho
    pn = normals @ p
    return mat.mu * v0[:, None] * (rn[:, None] * p[None, :] + pn[:, None] * rho[None, :])


def dot_table(pair: CgoPair, sector: SectorGeometry) -> dict:
    """The six dot products on the sector edges and the four quotients."""
    rho, p = pair.rho, pair.p
    rnM = rho @ sector.nu_M
    rnm = rho @ sector.nu_m
    return {
        "rho_nu_M": rnM,
        "rho_nu_m": rnm,
        "rho_tau_M": rho @ sector.tau_M,
        "rho_tau_m": rho @ sector.tau_m,
        "p_nu_M": p @ sector.nu_M,
        "p_nu_m": p @ sector.nu_m,
        "q_pM_rM2": (p @ sector.nu_M) / rnM**2,
        "q_rm_rM": rnm / rnM,
        "q_pm_rM": (p @ sector.nu_m) / rnM,
        "q_pM_rM": (p @ sector.nu_M) / rnM,
    }


def dot_table_closed(pair: CgoPair, sector: SectorGeometry) -> dict:
    """Closed forms of :func:`dot_table` in terms of s, phi and the edge angles."""
    s, phi = pair.s, pair.phi
    tM, tm = sector.theta_M, sector.theta_m
    eM = np.exp(1j * (tM - phi))
    em = np.exp(1j * (tm - phi))
    return {
        "rho_nu_M": 1j * s * eM,
        "rho_nu_m": -1j * s * em,
        "rho_tau_M": s * eM,
        "rho_tau_m": s * em,
        "p_nu_M": eM,
        "p_nu_m": -em,
        "q_pM_rM2": -np.exp(1j * (phi - tM)) / s**2,
        "q_rm_rM": -np.exp(1j * (tm - tM)),
        "q_pm_rM": -np.exp(1j * (tm - tM)) / (1j * s),
        "q_pM_rM": 1 / (1j * s),
    }
