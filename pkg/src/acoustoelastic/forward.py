"""Scattering of elastic plane waves by an acoustic inclusion.

The elastic background fills the exterior of the inclusion; inside it the
acoustic pressure satisfies a Helmholtz equation.  On the interface

    u.nu - (rho_b omega^2)^{-1} dv/dnu = 0,    T_nu u + v nu = 0.

Two backends share the far-field machinery: a separation-of-variables series
for a centered disk, and P2 finite elements for polygons with an exact
mode-by-mode elastic Dirichlet-to-Neumann closure on a circle |x| = R.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spl

from . import meshing
from .fem import P2Space
from .geometry import Materials
from .numerics import bessel_derivs

# ---------------------------------------------------------------------------
# scene description


@dataclass(frozen=True)
class IncidentWave:
    omega: float
    angle: float = 0.0
    alpha_p: complex = 1.0
    alpha_s: complex = 0.0
    kind: str = "compressional"

    def __post_init__(self):
        if self.kind not in ("compressional", "shear", "combination"):
            raise ValueError(f"unknown incident kind {self.kind!r}")
        if abs(self.alpha_p) + abs(self.alpha_s) == 0:
            raise ValueError("incident wave must have a nonzero amplitude")
        if not self.omega > 0:
            raise ValueError("omega must be positive")

    @classmethod
    def compressional(cls, omega, angle=0.0, amplitude=1.0):
        return cls(omega, angle, amplitude, 0.0, "compressional")

    @classmethod
    def shear(cls, omega, angle=0.0, amplitude=1.0):
        return cls(omega, angle, 0.0, amplitude, "shear")

    @property
    def d(self):
        return np.array([math.cos(self.angle), math.sin(self.angle)])

    @property
    def d_perp(self):
        return np.array([-math.sin(self.angle), math.cos(self.angle)])

    @property
    def scale(self) -> float:
        return float(abs(self.alpha_p) + abs(self.alpha_s))

    def displacement(self, x, mat: Materials):
        x = np.atleast_2d(x)
        kp, ks = mat.kp(self.omega), mat.ks(self.omega)
        ep = np.exp(1j * kp * (x @ self.d))
        es = np.exp(1j * ks * (x @ self.d))
        return (self.alpha_p * ep)[:, None] * self.d + (self.alpha_s * es)[:, None] * self.d_perp

    def gradient(self, x, mat: Materials):
        """Jacobian with entries [..., a, b] = d u_a / d x_b."""
        x = np.atleast_2d(x)
        kp, ks = mat.kp(self.omega), mat.ks(self.omega)
        ep = np.exp(1j * kp * (x @ self.d))
        es = np.exp(1j * ks * (x @ self.d))
        Gp = 1j * kp * np.outer(self.d, self.d)
        Gs = 1j * ks * np.outer(self.d_perp, self.d)
        return (self.alpha_p * ep)[:, None, None] * Gp + (self.alpha_s * es)[:, None, None] * Gs

    def mode_amplitudes(self, n, mat: Materials):
        """Amplitudes of the regular potentials (J_n) generating the wave."""
        kp, ks = mat.kp(self.omega), mat.ks(self.omega)
        ph = (1j) ** np.asarray(n) * np.exp(-1j * np.asarray(n) * self.angle)
        return self.alpha_p / (1j * kp) * ph, 1j * self.alpha_s / ks * ph


@dataclass(frozen=True)
class Disk:
    center: tuple = (0.0, 0.0)
    radius: float = 1.0

    @property
    def diameter(self):
        return 2 * self.radius


@dataclass(frozen=True)
class Polygon:
    vertices: tuple

    def __post_init__(self):
        v = np.asarray(self.vertices, float)
        if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
            raise ValueError("polygon needs at least three 2D vertices")
        if meshing._signed_area(v) <= 0:
            raise ValueError("polygon vertices must be counterclockwise")
        if not _is_simple(v):
            raise ValueError("polygon is not simple")

    @property
    def array(self):
        return np.asarray(self.vertices, float)

    @property
    def convex(self) -> bool:
        v = self.array
        a = np.roll(v, -1, axis=0) - v
        b = np.roll(v, -2, axis=0) - np.roll(v, -1, axis=0)
        return bool(np.all(a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0] > 0))

    @property
    def diameter(self):
        v = self.array
        return float(np.max(np.linalg.norm(v[:, None] - v[None], axis=2)))

    @property
    def area(self):
        return float(meshing._signed_area(self.array))


def _is_simple(v):
    n = len(v)

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    for i in range(n):
        p1, p2 = v[i], v[(i + 1) % n]
        for j in range(i + 2, n):
            if i == 0 and j == n - 1:
                continue
            q1, q2 = v[j], v[(j + 1) % n]
            if (cross(p1, p2, q1) * cross(p1, p2, q2) < 0) and (cross(q1, q2, p1) * cross(q1, q2, p2) < 0):
                return False
    return True


@dataclass(frozen=True)
class ScatterScene:
    inclusion: object
    mat: Materials
    incident: IncidentWave

    def with_incident(self, incident: IncidentWave) -> "ScatterScene":
        return ScatterScene(self.inclusion, self.mat, incident)


# ---------------------------------------------------------------------------
# cylindrical modes


def mode_columns(kind: str, n, r, kp, ks, mat: Materials):
    """Polar displacement gradient data of single potential modes.

    Returns arrays of shape (..., 2) for the two potentials (phi, psi) with
    phi = Z_n(kp r) e^{in t}, psi = Z_n(ks r) e^{in t}; each entry holds
    (u_r, u_t, d_r u_r, d_r u_t), the factor e^{in t} omitted.
    """
    n = np.asarray(n, dtype=float)
    r = np.asarray(r, dtype=float)
    Zp, Zp1, Zp2 = bessel_derivs(kind, n, kp * r)
    Zs, Zs1, Zs2 = bessel_derivs(kind, n, ks * r)
    f, f1, f2 = Zp, kp * Zp1, kp * kp * Zp2
    g, g1, g2 = Zs, ks * Zs1, ks * ks * Zs2
    inn = 1j * n
    ur = np.stack([f1, inn * g / r], axis=-1)
    ut = np.stack([inn * f / r, -g1], axis=-1)
    drur = np.stack([f2, inn * (g1 / r - g / r**2)], axis=-1)
    drut = np.stack([inn * (f1 / r - f / r**2), -g2], axis=-1)
    return ur, ut, drur, drut


def polar_gradient(n, r, ur, ut, drur, drut):
    """Polar components of grad u for a mode e^{in t}: [[rr, rt], [tr, tt]]."""
    inn = 1j * np.asarray(n)
    return np.stack([np.stack([drur, (inn * ur - ut) / r], -1),
                     np.stack([drut, (inn * ut + ur) / r], -1)], -2)


def mode_traction(n, r, kp, ks, mat: Materials, kind: str):
    """(u_r, u_t) and (sigma_rr, sigma_rt) per unit potential amplitude, each (..., 2, 2)."""
    ur, ut, drur, drut = mode_columns(kind, n, r, kp, ks, mat)
    inn = 1j * np.asarray(n, dtype=float)[..., None]
    rr = np.asarray(r, dtype=float)[..., None] if np.ndim(r) else r
    g_rt = (inn * ur - ut) / rr
    g_tt = (inn * ut + ur) / rr
    div = drur + g_tt
    s_rr = mat.lam * div + 2 * mat.mu * drur
    s_rt = mat.mu * (g_rt + drut)
    U = np.stack([ur, ut], axis=-2)
    S = np.stack([s_rr, s_rt], axis=-2)
    return U, S


def dtn_matrices(n, radius, kp, ks, mat: Materials):
    """Per-mode 2x2 map from polar displacement to polar traction (radiating)."""
    U, S = mode_traction(n, radius, kp, ks, mat, "H")
    return S @ np.linalg.inv(U), U


def _rot(theta):
    c, s = np.cos(theta), np.sin(theta)
    return np.stack([np.stack([c, s], -1), np.stack([-s, c], -1)], -2)  # cartesian -> polar


def evaluate_modes(x, ns, amp_p, amp_s, kp, ks, mat: Materials, kind: str, grad=False):
    """Sum of potential modes at Cartesian points: displacement and Jacobian."""
    x = np.atleast_2d(x)
    r = np.hypot(x[:, 0], x[:, 1])
    t = np.arctan2(x[:, 1], x[:, 0])
    ns = np.asarray(ns, dtype=float)
    R = r[:, None]
    ur, ut, drur, drut = mode_columns(kind, ns[None, :], R, kp, ks, mat)
    e = np.exp(1j * ns[None, :] * t[:, None])
    amp = np.stack([amp_p, amp_s], axis=-1)[None]  # (1, M, 2)
    u_r = np.sum(e * np.sum(ur * amp, -1), axis=1)
    u_t = np.sum(e * np.sum(ut * amp, -1), axis=1)
    c, s = np.cos(t), np.sin(t)
    u = np.column_stack([c * u_r - s * u_t, s * u_r + c * u_t])
    if not grad:
        return u
    inn = 1j * ns[None, :]
    pg = np.zeros((len(r), 2, 2), dtype=complex)
    pg[:, 0, 0] = np.sum(e * np.sum(drur * amp, -1), axis=1)
    pg[:, 0, 1] = (np.sum(e * inn * np.sum(ur * amp, -1), axis=1) - u_t) / r
    pg[:, 1, 0] = np.sum(e * np.sum(drut * amp, -1), axis=1)
    pg[:, 1, 1] = (np.sum(e * inn * np.sum(ut * amp, -1), axis=1) + u_r) / r
    Q = np.stack([np.stack([c, -s], -1), np.stack([s, c], -1)], -2)  # columns r-hat, t-hat
    G = Q @ pg @ np.transpose(Q, (0, 2, 1))
    return u, G


def far_field_from_coefficients(ns, a, b, kp, ks, n_dir: int):
    theta = 2 * math.pi * np.arange(n_dir) / n_dir
    ns = np.asarray(ns, dtype=float)
    ph = (-1j) ** ns[None, :] * np.exp(1j * ns[None, :] * theta[:, None])
    up = math.sqrt(2 * kp / math.pi) * np.exp(1j * math.pi / 4) * (ph @ a)
    us = -math.sqrt(2 * ks / math.pi) * np.exp(1j * math.pi / 4) * (ph @ b)
    return theta, up, us


@dataclass
class FarFieldPattern:
    theta: np.ndarray
    u_p: np.ndarray
    u_s: np.ndarray

    @property
    def directions(self):
        return np.column_stack([np.cos(self.theta), np.sin(self.theta)])

    def combined(self):
        """u_t = u_p xhat + u_s xhat_perp as an (n_dir, 2) array."""
        xh = self.directions
        xp = np.column_stack([-xh[:, 1], xh[:, 0]])
        return self.u_p[:, None] * xh + self.u_s[:, None] * xp

    def l2_norm(self) -> float:
        w = 2 * math.pi / len(self.theta)
        return float(math.sqrt(w * np.sum(np.abs(self.u_p) ** 2 + np.abs(self.u_s) ** 2)))

    def distance(self, other: "FarFieldPattern") -> float:
        w = 2 * math.pi / len(self.theta)
        return float(math.sqrt(w * np.sum(np.abs(self.u_p - other.u_p) ** 2 + np.abs(self.u_s - other.u_s) ** 2)))

    def to_csv(self, path):
        rows = np.column_stack([self.theta, self.u_p.real, self.u_p.imag, self.u_s.real, self.u_s.imag])
        np.savetxt(path, rows, delimiter=",", header="theta,re_up,im_up,re_us,im_us", comments="", fmt="%.17g")


@dataclass
class SolutionFields:
    scene: ScatterScene
    v: Callable
    u_scattered: Callable
    grad_u_scattered: Callable
    ns: np.ndarray
    coef_p: np.ndarray
    coef_s: np.ndarray
    residual: dict = field(default_factory=dict)

    def u_incident(self, x):
        return self.scene.incident.displacement(x, self.scene.mat)

    def u_total(self, x):
        return self.u_incident(x) + self.u_scattered(x)

    def grad_u_total(self, x):
        return self.scene.incident.gradient(x, self.scene.mat) + self.grad_u_scattered(x)


def far_field(fields: SolutionFields, n_dir: int = 128) -> FarFieldPattern:
    mat, om = fields.scene.mat, fields.scene.incident.omega
    th, up, us = far_field_from_coefficients(fields.ns, fields.coef_p, fields.coef_s, mat.kp(om), mat.ks(om), n_dir)
    return FarFieldPattern(th, up, us)


def far_field_from_samples(u_scattered: Callable, radius: float, mat: Materials, omega: float,
                           n_modes: int, n_dir: int = 128, n_samples: int | None = None) -> FarFieldPattern:
    """Far field from scattered-field samples on a circle (FFT + mode inversion)."""
    m = n_samples or 4 * (2 * n_modes + 1)
    t = 2 * math.pi * np.arange(m) / m
    x = radius * np.column_stack([np.cos(t), np.sin(t)])
    u = u_scattered(x)
    pol = np.einsum("pab,pb->pa", _rot(t), u)
    coef = np.fft.fft(pol, axis=0) / m
    ns = np.arange(-n_modes, n_modes + 1)
    uhat = coef[ns % m]  # (M, 2)
    kp, ks = mat.kp(omega), mat.ks(omega)
    U, _ = mode_traction(ns, radius, kp, ks, mat, "H")
    ab = np.linalg.solve(U, uhat[..., None])[..., 0]
    th, up, us = far_field_from_coefficients(ns, ab[:, 0], ab[:, 1], kp, ks, n_dir)
    return FarFieldPattern(th, up, us)


# ---------------------------------------------------------------------------
# disk backend


def solve_disk(scene: ScatterScene, n_trunc: int | None = None) -> SolutionFields:
    disk = scene.inclusion
    if not isinstance(disk, Disk):
        raise TypeError("solve_disk needs a Disk inclusion")
    mat, inc = scene.mat, scene.incident
    om = inc.omega
    kp, ks, ka = mat.kp(om), mat.ks(om), mat.ka(om)
    a = disk.radius
    c0 = np.asarray(disk.center, float)
    if n_trunc is None:
        n_trunc = int(math.ceil(ks * a)) + 16
    if n_trunc < ks * a + 10:
        raise ValueError("truncation too small for this frequency")
    ns = np.arange(-n_trunc, n_trunc + 1)
    # shift the incident phase to the disk center
    shift = np.exp(1j * kp * (c0 @ inc.d)), np.exp(1j * ks * (c0 @ inc.d))
    Ai, Bi = inc.mode_amplitudes(ns, mat)
    Ai, Bi = Ai * shift[0], Bi * shift[1]
    UH, SH = mode_traction(ns, a, kp, ks, mat, "H")
    UJ, SJ = mode_traction(ns, a, kp, ks, mat, "J")
    Jv, Jv1, _ = bessel_derivs("J", ns, ka * a)
    M = np.zeros((len(ns), 3, 3), dtype=complex)
    M[:, 0, :2] = UH[:, 0]
    M[:, 0, 2] = -ka * Jv1 / (mat.rho_b * om**2)
    M[:, 1, :2] = SH[:, 0]
    M[:, 1, 2] = Jv
    M[:, 2, :2] = SH[:, 1]
    inc_amp = np.stack([Ai, Bi], -1)[..., None]
    rhs = -np.concatenate([(UJ[:, 0:1] @ inc_amp), (SJ @ inc_amp)], axis=1)[..., 0]
    Mn = M / np.maximum(np.linalg.norm(M, axis=1, keepdims=True), 1e-300)
    Mn = Mn / np.maximum(np.linalg.norm(Mn, axis=2, keepdims=True), 1e-300)
    bad = np.flatnonzero(np.linalg.cond(Mn) > 1e13)
    if len(bad):
        raise np.linalg.LinAlgError(f"singular mode system for n = {ns[bad].tolist()}")
    sol = np.linalg.solve(M, rhs[..., None])[..., 0]
    ap, bs, cv = sol[:, 0], sol[:, 1], sol[:, 2]

    def v(x):
        x = np.atleast_2d(x) - c0
        r = np.hypot(x[:, 0], x[:, 1])
        t = np.arctan2(x[:, 1], x[:, 0])
        J = bessel_derivs("J", ns[None, :], ka * r[:, None])[0]
        val = np.sum(cv[None] * J * np.exp(1j * ns[None] * t[:, None]), axis=1)
        return np.where(r <= a * (1 + 1e-12), val, np.nan)

    def v_grad(x):
        x = np.atleast_2d(x) - c0
        r = np.hypot(x[:, 0], x[:, 1])
        t = np.arctan2(x[:, 1], x[:, 0])
        J, J1, _ = bessel_derivs("J", ns[None, :], ka * r[:, None])
        e = np.exp(1j * ns[None] * t[:, None])
        vr = np.sum(cv * ka * J1 * e, axis=1)
        vt = np.sum(cv * 1j * ns * J * e, axis=1) / np.where(r > 0, r, 1.0)
        return np.column_stack([np.cos(t) * vr - np.sin(t) * vt, np.sin(t) * vr + np.cos(t) * vt])

    def us(x):
        x = np.atleast_2d(x) - c0
        out = evaluate_modes(x, ns, ap, bs, kp, ks, mat, "H")
        return np.where((np.hypot(x[:, 0], x[:, 1]) >= a * (1 - 1e-12))[:, None], out, np.nan)

    def gus(x):
        x = np.atleast_2d(x) - c0
        _, G = evaluate_modes(x, ns, ap, bs, kp, ks, mat, "H", grad=True)
        return np.where((np.hypot(x[:, 0], x[:, 1]) >= a * (1 - 1e-12))[:, None, None], G, np.nan)

    # far-field coefficients relative to the origin: translate by the center
    far_ns, coef_p, coef_s = ns, ap, bs
    if np.any(c0 != 0):
        far_ns, coef_p, coef_s = _translate_far(ns, ap, bs, c0, kp, ks)
    fields = SolutionFields(scene, v, us, gus, far_ns, coef_p, coef_s)
    fields.v_grad = v_grad
    fields.residual = disk_residuals(fields, a, c0, 4 * n_trunc)
    return fields


def _translate_far(ns, ap, bs, c0, kp, ks):
    # Far field of a source centered at c0 picks up the factor e^{-ik xhat.c0};
    # re-expand that product on a fine angular grid.
    m = 8 * len(ns)
    th = 2 * math.pi * np.arange(m) / m
    ph = (-1j) ** ns[None, :] * np.exp(1j * ns[None, :] * th[:, None])
    xh = np.column_stack([np.cos(th), np.sin(th)])
    fp = (ph @ ap) * np.exp(-1j * kp * (xh @ c0))
    fs = (ph @ bs) * np.exp(-1j * ks * (xh @ c0))
    big = np.arange(-len(ns), len(ns) + 1)
    back = np.exp(-1j * big[None, :] * th[:, None]) / m
    cp = (fp @ back) / (-1j) ** big
    cs = (fs @ back) / (-1j) ** big
    return big, cp, cs


def disk_residuals(fields: SolutionFields, a, c0, n_points):
    """Transmission defects on the circle from the analytic evaluators."""
    scene = fields.scene
    mat, om = scene.mat, scene.incident.omega
    t = 2 * math.pi * (np.arange(n_points) + 0.5) / n_points
    nu = np.column_stack([np.cos(t), np.sin(t)])
    x = c0 + a * nu
    u = fields.u_total(x)
    G = fields.grad_u_total(x)
    v = fields.v(x)
    gv = fields.v_grad(x)
    div = G[:, 0, 0] + G[:, 1, 1]
    eps = 0.5 * (G + np.transpose(G, (0, 2, 1)))
    trac = mat.lam * div[:, None] * nu + 2 * mat.mu * np.einsum("pab,pb->pa", eps, nu)
    r1 = np.sum(u * nu, 1) - np.sum(gv * nu, 1) / (mat.rho_b * om**2)
    r2 = trac + v[:, None] * nu
    s1 = np.max(np.abs(np.sum(u * nu, 1))) + 1e-300
    s2 = np.max(np.abs(trac)) + 1e-300
    return {"normal": float(np.max(np.abs(r1)) / s1), "traction": float(np.max(np.linalg.norm(r2, axis=1)) / s2)}


# ---------------------------------------------------------------------------
# polygon backend


class PolygonSolver:
    """P2 discretization of the scattering problem; one factorization, many incidences."""

    def __init__(self, polygon: Polygon, mat: Materials, omega: float, h: float | None = None,
                 radius: float | None = None, levels: int = 4, n_dtn: int | None = None):
        self.polygon, self.mat, self.omega = polygon, mat, omega
        kp, ks = mat.kp(omega), mat.ks(omega)
        self.kp, self.ks = kp, ks
        verts = polygon.array
        rmax = float(np.max(np.linalg.norm(verts, axis=1)))
        self.radius = radius if radius is not None else 1.5 * rmax + 0.25 * polygon.diameter
        if h is None:
            h = min(2 * math.pi / ks / 12, polygon.diameter / 8)
        self.h = h
        if n_dtn is None:
            n_dtn = int(math.ceil(ks * self.radius)) + 16
        if n_dtn < ks * self.radius:
            raise ValueError("DtN order below k_s R")
        self.ns = np.arange(-n_dtn, n_dtn + 1)
        try:
            self.mesh = meshing.scattering_mesh(verts, self.radius, h, levels=levels)
        except (RuntimeError, ValueError) as exc:
            raise RuntimeError(f"mesh generation failed: {exc}") from exc
        self.space = V = P2Space.build(self.mesh)
        ext = np.flatnonzero(self.mesh.regions == 0)
        inc = np.flatnonzero(self.mesh.regions == 1)
        self.ext, self.inc = ext, inc
        n = V.n_nodes
        self.u_nodes = np.unique(V.elements[ext])
        self.v_nodes = np.unique(V.elements[inc])
        Ke = V.elastic_stiffness(mat.lam, mat.mu, ext)
        Me = V.vector_mass(ext)
        Ka = V.scalar_stiffness(inc)
        Ma = V.scalar_mass(inc)
        C = V.coupling(meshing.INTERFACE)
        self._dtn_setup()
        udofs = np.stack([2 * self.u_nodes, 2 * self.u_nodes + 1], 1).ravel()
        self.udofs = udofs
        Auu = (Ke - omega**2 * mat.rho_e * Me)[udofs][:, udofs].astype(complex)
        bpos = np.searchsorted(udofs, self.bdofs)
        D = self.D
        Auu = Auu - sp.csr_matrix((D.ravel(), (np.repeat(bpos, len(bpos)), np.tile(bpos, len(bpos)))),
                                          shape=Auu.shape)
        Cuv = C[udofs][:, self.v_nodes]
        Avv = (Ka / (mat.rho_b * omega**2) - Ma / mat.kappa)[self.v_nodes][:, self.v_nodes]
        A = sp.bmat([[Auu, -Cuv], [-Cuv.T, Avv]], format="csc")
        self.A = A
        self.lu = spl.splu(A, permc_spec="MMD_AT_PLUS_A")
        self.n_u = len(udofs)

    def _dtn_setup(self):
        V, mesh, mat = self.space, self.mesh, self.mat
        R = self.radius
        sn, pts, w, _, L = V.segment_geometry(meshing.OUTER)
        # angle parameterization along each curved segment
        th = np.unwrap(np.arctan2(pts[..., 1], pts[..., 0]), axis=1)
        X = V.nodes[sn]
        from .fem import edge_shape
        _, dL = edge_shape(_edge_nodes())
        tang = np.einsum("sia,qi->sqa", X, dL)
        dth = (pts[..., 0] * tang[..., 1] - pts[..., 1] * tang[..., 0]) / np.sum(pts**2, -1)
        wq = _edge_weights()[None, :] * dth  # d(theta)
        bnodes = np.unique(sn)
        self.bnodes = bnodes
        self.bdofs = np.stack([2 * bnodes, 2 * bnodes + 1], 1).ravel()
        loc = np.searchsorted(bnodes, sn)
        ns = self.ns
        rot = _rot(th)  # (S, Q, 2, 2)
        e = np.exp(-1j * ns[:, None, None] * th[None])  # (M, S, Q)
        # P[n, j, a, c] = (1/2pi) int N_j Rot_ac e^{-in t} dt
        P = np.zeros((len(ns), len(bnodes), 2, 2), dtype=complex)
        contrib = np.einsum("msq,sq,qi,sqac->msiac", e, wq, L, rot) / (2 * math.pi)
        for i in range(3):
            np.add.at(P, (slice(None), loc[:, i]), contrib[:, :, i])
        self.P = P.reshape(len(ns), len(bnodes), 2, 2)
        Lam, U = dtn_matrices(ns, R, self.kp, self.ks, mat)
        self.Lam, self.Umode = Lam, U
        Pm = self.P.transpose(0, 2, 1, 3).reshape(len(ns), 2, -1)  # (M, a, dofs)
        Q = np.conj(Pm)
        self.D = 2 * math.pi * R * np.einsum("maj,mab,mbk->jk", Q, Lam, Pm)
        self._Pm = Pm

    def rhs(self, inc: IncidentWave):
        mat, R, ns = self.mat, self.radius, self.ns
        Ai, Bi = inc.mode_amplitudes(ns, mat)
        UJ, SJ = mode_traction(ns, R, self.kp, self.ks, mat, "J")
        amp = np.stack([Ai, Bi], -1)[..., None]
        uhat = (UJ @ amp)[..., 0]
        that = (SJ @ amp)[..., 0]
        g = that - (self.Lam @ uhat[..., None])[..., 0]
        fb = 2 * math.pi * R * np.einsum("maj,ma->j", np.conj(self._Pm), g)
        f = np.zeros(self.A.shape[0], dtype=complex)
        f[np.searchsorted(self.udofs, self.bdofs)] = fb
        return f, uhat

    def solve(self, inc: IncidentWave) -> SolutionFields:
        if abs(inc.omega - self.omega) > 1e-14 * self.omega:
            raise ValueError("incident frequency differs from the assembled one")
        f, uhat_inc = self.rhs(inc)
        x = self.lu.solve(f)
        resid = np.linalg.norm(self.A @ x - f) / max(np.linalg.norm(f), 1e-300)
        V = self.space
        U = np.zeros(2 * V.n_nodes, dtype=complex)
        U[self.udofs] = x[: self.n_u]
        Vv = np.zeros(V.n_nodes, dtype=complex)
        Vv[self.v_nodes] = x[self.n_u:]
        ub = U[self.bdofs]
        uhat = np.einsum("maj,j->ma", self._Pm, ub) - uhat_inc
        ab = np.linalg.solve(self.Umode, uhat[..., None])[..., 0]
        scene = ScatterScene(self.polygon, self.mat, inc)
        loc_u = V.locator(self.ext)
        loc_v = V.locator(self.inc)
        R, ns, mat, kp, ks = self.radius, self.ns, self.mat, self.kp, self.ks
        poly = self.polygon.array

        def u_scat(x):
            x = np.atleast_2d(x)
            r = np.hypot(x[:, 0], x[:, 1])
            out = loc_u.evaluate(U, x, 2) - inc.displacement(x, mat)
            far = r >= R
            if np.any(far):
                out[far] = evaluate_modes(x[far], ns, ab[:, 0], ab[:, 1], kp, ks, mat, "H")
            return out

        def grad_scat(x):
            x = np.atleast_2d(x)
            r = np.hypot(x[:, 0], x[:, 1])
            _, G = loc_u.evaluate(U, x, 2, grad=True)
            G = G - inc.gradient(x, mat)
            far = r >= R
            if np.any(far):
                G[far] = evaluate_modes(x[far], ns, ab[:, 0], ab[:, 1], kp, ks, mat, "H", grad=True)[1]
            return G

        def v(x):
            x = np.atleast_2d(x)
            val = loc_v.evaluate(Vv, x, 1)[:, 0]
            return np.where(meshing.points_in_polygon(x, poly), val, np.nan)

        fields = SolutionFields(scene, v, u_scat, grad_scat, ns, ab[:, 0], ab[:, 1])
        fields.dofs = (U, Vv)
        fields.residual = {"linear_system": float(resid), "condition_estimate": self.condition_estimate(),
                           **self.interface_defects(U, Vv)}
        return fields

    def condition_estimate(self) -> float:
        """1-norm condition estimate of the assembled system (cached)."""
        if getattr(self, "_cond", None) is None:
            A = self.A
            inv = spl.LinearOperator(A.shape, matvec=self.lu.solve, rmatvec=lambda y: self.lu.solve(y, trans="H"),
                                     dtype=complex)
            self._cond = float(spl.onenormest(A) * spl.onenormest(inv))
        return self._cond

    def interface_defects(self, U, Vv):
        """Relative transmission defects at interface quadrature points (one-sided gradients)."""
        V, mat, om = self.space, self.mat, self.omega
        sn, pts, w, nrm, _ = V.segment_geometry(meshing.INTERFACE)
        x = pts.reshape(-1, 2)
        nu = nrm.reshape(-1, 2)
        eps = 1e-9 * self.h
        uo, Gu = V.locator(self.ext).evaluate(U, x + eps * nu, 2, grad=True)
        vi, gv = V.locator(self.inc).evaluate(Vv, x - eps * nu, 1, grad=True)
        div = Gu[:, 0, 0] + Gu[:, 1, 1]
        epsu = 0.5 * (Gu + np.transpose(Gu, (0, 2, 1)))
        trac = mat.lam * div[:, None] * nu + 2 * mat.mu * np.einsum("pab,pb->pa", epsu, nu)
        r1 = np.sum(uo * nu, 1) - np.einsum("pa,pa->p", gv[:, 0], nu) / (mat.rho_b * om**2)
        r2 = trac + vi * nu
        wq = w.reshape(-1)
        ok = np.isfinite(r1) & np.all(np.isfinite(r2), axis=1)
        n1 = math.sqrt(np.sum(wq[ok] * np.abs(r1[ok]) ** 2) / max(np.sum(wq[ok] * np.abs(np.sum(uo[ok] * nu[ok], 1)) ** 2), 1e-300))
        n2 = math.sqrt(np.sum(wq[ok] * np.sum(np.abs(r2[ok]) ** 2, 1)) / max(np.sum(wq[ok] * np.sum(np.abs(trac[ok]) ** 2, 1)), 1e-300))
        return {"normal": n1, "traction": n2}


def _edge_nodes():
    from .fem import _EDGE_Q
    return _EDGE_Q.nodes


def _edge_weights():
    from .fem import _EDGE_Q
    return _EDGE_Q.weights


def solve_polygon(scene: ScatterScene, h_mesh: float | None = None, radius: float | None = None,
                  **kw) -> SolutionFields:
    if not isinstance(scene.inclusion, Polygon):
        raise TypeError("solve_polygon needs a Polygon inclusion")
    solver = PolygonSolver(scene.inclusion, scene.mat, scene.incident.omega, h_mesh, radius, **kw)
    return solver.solve(scene.incident)


def solve(scene: ScatterScene, **kw) -> SolutionFields:
    if isinstance(scene.inclusion, Disk):
        return solve_disk(scene, **kw)
    return solve_polygon(scene, **kw)


# ---------------------------------------------------------------------------
# experiments


def _directions(n):
    return [2 * math.pi * k / n for k in range(n)]


def visibility_experiment(polygons: dict, mat: Materials, omega_for: Callable, angles: Sequence[float],
                          kind: str = "compressional", threshold: float = 1e-6, n_dir: int = 128,
                          solver_kw: dict | None = None) -> list[dict]:
    """Far-field norms for every (scene, incident direction) pair.

    ``omega_for(polygon)`` returns the frequency used for that polygon.
    """
    rows = []
    for name, poly in polygons.items():
        om = omega_for(poly)
        solver = PolygonSolver(poly, mat, om, **(solver_kw or {}))
        for ang in angles:
            inc = (IncidentWave.compressional if kind == "compressional" else IncidentWave.shear)(om, ang)
            ff = far_field(solver.solve(inc), n_dir)
            eps = ff.l2_norm()
            rows.append({"scene": name, "omega": om, "angle": ang, "kind": kind, "norm": eps,
                         "threshold": threshold * inc.scale, "visible": eps > threshold * inc.scale})
    return rows


def identifiability_experiment(poly_a: Polygon, poly_b: Polygon, mat: Materials, omega: float,
                               angles: Sequence[float], n_dir: int = 128, solver_kw: dict | None = None) -> dict:
    if len(set(np.round(np.mod(angles, 2 * math.pi), 12))) != len(angles):
        raise ValueError("incident directions must be pairwise distinct")
    sa = PolygonSolver(poly_a, mat, omega, **(solver_kw or {}))
    sb = PolygonSolver(poly_b, mat, omega, **(solver_kw or {}))
    per = []
    for ang in angles:
        inc = IncidentWave.compressional(omega, ang)
        fa, fb = far_field(sa.solve(inc), n_dir), far_field(sb.solve(inc), n_dir)
        scale = max(fa.l2_norm(), fb.l2_norm(), 1e-300)
        per.append(fa.distance(fb) / scale)
    return {"mismatch": float(max(per)), "per_direction": per}


def admissibility_check(fields: SolutionFields, points, tol: float = 1e-8) -> dict:
    G = fields.grad_u_total(points)
    ok = np.all(np.isfinite(G), axis=(1, 2))
    G = G[ok]
    strain = 0.5 * (G + np.transpose(G, (0, 2, 1)))
    defect = strain - G[:, 0, 0][:, None, None] * np.eye(2)
    a = np.linalg.norm(defect, axis=(1, 2))
    b = np.linalg.norm(G, axis=(1, 2))
    scale = max(float(np.max(b)) if len(b) else 0.0, 1e-300)
    return {"min_strain_defect": float(a.min()) if len(a) else 0.0,
            "min_grad_norm": float(b.min()) if len(b) else 0.0,
            "admissible_a": bool(len(a) and a.min() > tol * scale),
            "admissible_b": bool(len(b) and b.min() > tol * scale),
            "n_samples": int(ok.sum())}


def gram_independence(fields_list: Sequence[SolutionFields], points, weights=None) -> dict:
    angles = [f.scene.incident.angle for f in fields_list]
    if len(set(np.round(np.mod(angles, 2 * math.pi), 12))) != len(angles):
        raise ValueError("incident directions must be pairwise distinct")
    cols = [f.u_total(points).reshape(-1) for f in fields_list]
    F = np.column_stack(cols)
    w = np.ones(len(points)) if weights is None else np.asarray(weights)
    W = np.repeat(w, 2)
    G = F.conj().T @ (W[:, None] * F)
    ev = np.linalg.eigvalsh(G)
    return {"lambda_min": float(ev[0]), "trace": float(np.trace(G).real), "ratio": float(ev[0] / np.trace(G).real)}


def decomposition_defect(fields: SolutionFields, radius: float, n: int = 32, step: float = 2e-5) -> float:
    """Relative defect of u^s = -(1/kp^2) grad div u^s + (1/ks^2) curl curl u^s on a circle.

    The double derivatives come from central differences of the Jacobian
    evaluator, so the result carries an O(step^2) truncation error.
    """
    mat, om = fields.scene.mat, fields.scene.incident.omega
    kp, ks = mat.kp(om), mat.ks(om)
    t = 2 * math.pi * np.arange(n) / n
    x = radius * np.column_stack([np.cos(t), np.sin(t)])
    u = fields.u_scattered(x)
    H = np.zeros((n, 2, 2, 2), dtype=complex)  # d_c d_b u_a
    for c in range(2):
        e = np.zeros(2)
        e[c] = step
        H[..., c] = (fields.grad_u_scattered(x + e) - fields.grad_u_scattered(x - e)) / (2 * step)
    grad_div = H[:, 0, 0, :] + H[:, 1, 1, :]
    up = -grad_div / kp**2
    # curl curl u = grad div u - lap u
    lap = H[:, :, 0, 0] + H[:, :, 1, 1]
    us = (grad_div - lap) / ks**2
    return float(np.max(np.abs(up + us - u)) / np.max(np.abs(u)))


def energy_flux(fields: SolutionFields, radius: float, n: int = 256) -> dict:
    """Net time-averaged flux Im int conj(u).T_r u of the total field and its scattered part."""
    mat = fields.scene.mat
    t = 2 * math.pi * np.arange(n) / n
    nu = np.column_stack([np.cos(t), np.sin(t)])
    x = radius * nu

    def flux(u, G):
        div = G[:, 0, 0] + G[:, 1, 1]
        eps = 0.5 * (G + np.transpose(G, (0, 2, 1)))
        tr = mat.lam * div[:, None] * nu + 2 * mat.mu * np.einsum("pab,pb->pa", eps, nu)
        return float(np.imag(np.sum(np.conj(u) * tr)) * 2 * math.pi * radius / n)

    total = flux(fields.u_total(x), fields.grad_u_total(x))
    scat = flux(fields.u_scattered(x), fields.grad_u_scattered(x))
    return {"total": total, "scattered": scat, "relative": abs(total) / max(abs(scat), 1e-300)}


# ---------------------------------------------------------------------------
# scene files


def parse_scene(text: str) -> ScatterScene:
    """Parse the key-value scene format (see README for the grammar)."""
    mat_kw, inc_kw, incl = {}, {}, {"vertex": []}
    allowed_mat = {"lam", "mu", "rho_e", "rho_b", "kappa"}
    allowed_inc = {"kind", "angle", "alpha_p", "alpha_s", "omega"}
    allowed_incl = {"type", "center", "radius", "vertex", "sides", "rotation"}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value'")
        key, val = (s.strip() for s in line.split("=", 1))
        group, _, name = key.partition(".")
        try:
            if group == "material" and name in allowed_mat:
                mat_kw[name] = float(val)
            elif group == "incident" and name in allowed_inc:
                inc_kw[name] = val if name == "kind" else (complex(val.replace(" ", "")) if name.startswith("alpha") else float(val))
            elif group == "inclusion" and name in allowed_incl:
                if name == "vertex":
                    incl["vertex"].append(tuple(float(t) for t in val.replace(",", " ").split()))
                elif name == "center":
                    incl["center"] = tuple(float(t) for t in val.replace(",", " ").split())
                elif name in ("radius", "rotation"):
                    incl[name] = float(val)
                elif name == "sides":
                    incl["sides"] = int(val)
                else:
                    incl["type"] = val
            else:
                raise ValueError(f"unknown key {key!r}")
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
    mat = Materials(**mat_kw)
    kind = inc_kw.pop("kind", "compressional")
    if kind == "shear" and "alpha_s" not in inc_kw:
        inc_kw.setdefault("alpha_p", 0.0)
        inc_kw["alpha_s"] = 1.0
    if "omega" not in inc_kw:
        raise ValueError("incident.omega is required")
    inc = IncidentWave(kind=kind, **inc_kw)
    typ = incl.get("type", "polygon" if incl["vertex"] else "disk")
    if typ == "disk":
        inclusion = Disk(incl.get("center", (0.0, 0.0)), incl.get("radius", 1.0))
    elif typ == "polygon":
        inclusion = Polygon(tuple(incl["vertex"]))
    elif typ == "regular_polygon":
        c = np.asarray(incl.get("center", (0.0, 0.0)))
        base = regular_polygon(incl.get("sides", 0), incl.get("radius", 1.0), incl.get("rotation", 0.0))
        inclusion = Polygon(tuple(map(tuple, base.array + c)))
    else:
        raise ValueError(f"unknown inclusion type {typ!r}")
    return ScatterScene(inclusion, mat, inc)


def format_scene(scene: ScatterScene) -> str:
    m, inc = scene.mat, scene.incident
    lines = [f"material.{k} = {getattr(m, k)!r}" for k in ("lam", "mu", "rho_e", "rho_b", "kappa")]
    lines += [f"incident.kind = {inc.kind}", f"incident.omega = {inc.omega!r}", f"incident.angle = {inc.angle!r}",
              f"incident.alpha_p = {complex(inc.alpha_p)!r}".replace("(", "").replace(")", ""),
              f"incident.alpha_s = {complex(inc.alpha_s)!r}".replace("(", "").replace(")", "")]
    if isinstance(scene.inclusion, Disk):
        c = scene.inclusion.center
        lines += ["inclusion.type = disk", f"inclusion.center = {c[0]!r} {c[1]!r}", f"inclusion.radius = {scene.inclusion.radius!r}"]
    else:
        lines.append("inclusion.type = polygon")
        lines += [f"inclusion.vertex = {x!r} {y!r}" for x, y in scene.inclusion.vertices]
    return "\n".join(lines) + "\n"


def equal_area_square(area: float, center=(0.0, 0.0), rotation: float = 0.0) -> Polygon:
    s = math.sqrt(area)
    base = np.array([[-0.5, -0.5], [0.5, -0.5], [0.5, 0.5], [-0.5, 0.5]]) * s
    c, sn = math.cos(rotation), math.sin(rotation)
    v = base @ np.array([[c, sn], [-sn, c]]) + np.asarray(center)
    return Polygon(tuple(map(tuple, v)))


def regular_polygon(n: int, radius: float = 1.0, rotation: float = 0.0) -> Polygon:
    return Polygon(tuple(map(tuple, meshing.regular_polygon(n, radius, rotation))))
