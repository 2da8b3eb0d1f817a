"""Corner integral identity, its large-s limit and pointwise corner diagnostics."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Callable, Sequence

import numpy as np

from .asymptotics import (DEFAULT_S_GRID, _check_phi, arc_terms, boundary_terms, sector_integral)
from .geometry import CgoPair, Materials, SectorGeometry, cgo_scalar


@dataclass
class IdentityBreakdown:
    s: float
    I1_plus: complex
    I1_minus: complex
    I2_plus: complex
    I2_minus: complex
    I3_plus: complex
    I3_minus: complex
    I4: complex
    I5: complex
    I_arc1: complex
    I_arc2: complex
    total: complex

    def i3_defect(self) -> float:
        """max |I3 - i s I2| over both edges."""
        return max(abs(self.I3_plus - 1j * self.s * self.I2_plus), abs(self.I3_minus - 1j * self.s * self.I2_minus))

    def to_json(self) -> dict:
        return {k: ([v.real, v.imag] if isinstance(v, complex) else v) for k, v in asdict(self).items()}


def _grad_fd(f: Callable, ncomp: int, step: float = 1e-6) -> Callable:
    """Pointwise central-difference Jacobian of a vectorized evaluator."""

    def g(x):
        x = np.atleast_2d(x)
        cols = []
        for k in range(2):
            e = np.zeros(2)
            e[k] = step
            d = (np.asarray(f(x + e)) - np.asarray(f(x - e))) / (2 * step)
            cols.append(d.reshape(len(x), ncomp))
        out = np.stack(cols, axis=-1)
        return out[:, 0, :] if ncomp == 1 else out

    return g


def _finite(f: Callable, name: str) -> Callable:
    def g(x):
        val = np.asarray(f(x))
        if not np.all(np.isfinite(val)):
            raise ValueError(f"{name} is not defined on the closed sector")
        return val

    return g


def assemble_identity(v_field: Callable, u_field: Callable, sector: SectorGeometry, pair: CgoPair,
                      mat: Materials, omega: float, grad_v: Callable | None = None,
                      grad_u: Callable | None = None, n0: int = 16) -> IdentityBreakdown:
    """All terms of the corner integral identity and its left-hand side.

    Gradients are needed on the arc |x| = h only; central differences are used
    when they are not supplied.  ``n0`` is the starting order of the adaptive
    quadratures.
    """
    _check_phi(sector, pair.phi)
    if not omega > 0:
        raise ValueError("omega must be positive")
    v = _finite(v_field, "v_field")
    u = _finite(u_field, "u_field")
    gv = grad_v or _grad_fd(v, 1)
    gu = grad_u or _grad_fd(u, 2)
    b = boundary_terms(u, sector, pair, n0)
    I4 = complex(sector_integral(lambda x: v(x) * cgo_scalar(pair, x), sector, n0=n0)) / mat.kappa
    I5 = complex(sector_integral(lambda x: mat.rho_e * (u(x) @ pair.p) * cgo_scalar(pair, x), sector, n0=n0))
    IL1, IL2 = arc_terms(pair, sector, mat, v, gv, u, gu, n0)
    s, phi, tM, tm = pair.s, pair.phi, sector.theta_M, sector.theta_m
    rb = mat.rho_b
    rnM = 1j * s * np.exp(1j * (tM - phi))
    total = (-np.exp(1j * (phi - tM)) * omega**2 * rb / s**2
             * (b["I1_plus"] + b["I1_minus"] - IL1 / (omega**2 * rb) + I4)
             + 2 * mat.mu * (b["I2_plus"] - np.exp(1j * (tm - tM)) * b["I2_minus"])
             + IL2 / rnM - omega**2 * I5 / rnM)
    return IdentityBreakdown(s, b["I1_plus"], b["I1_minus"], b["I2_plus"], b["I2_minus"], b["I3_plus"],
                             b["I3_minus"], I4, I5, complex(IL1), complex(IL2), complex(total))


def bracket_direction(sector: SectorGeometry, phi: float) -> np.ndarray:
    """Complex vector e^{2i(phi-tM)} tau_M - e^{i(2 phi - tm - tM)} tau_m."""
    tM, tm = sector.theta_M, sector.theta_m
    return np.exp(2j * (phi - tM)) * sector.tau_M - np.exp(1j * (2 * phi - tm - tM)) * sector.tau_m


@dataclass
class LimitExtraction:
    direct: complex
    s_grid: np.ndarray
    scaled: np.ndarray

    @property
    def limit_estimate(self) -> complex:
        return complex(self.scaled[-1])

    def relative_gap(self) -> float:
        return abs(self.limit_estimate - self.direct) / max(abs(self.direct), 1e-300)


def limit_extraction(u_field: Callable, grad_u0, sector: SectorGeometry, mat: Materials,
                     s_grid: Sequence[float] = DEFAULT_S_GRID, phi: float | None = None) -> LimitExtraction:
    """2 mu p^T grad u(0) (bracket direction) directly and as lim s^2 (edge terms)."""
    from .geometry import admissible_direction

    if phi is None:
        phi, _ = admissible_direction(sector)
    delta = _check_phi(sector, phi)
    G = np.asarray(grad_u0)
    pair0 = CgoPair(1.0, phi, delta)
    direct = complex(2 * mat.mu * pair0.p @ G @ bracket_direction(sector, phi))
    s_grid = np.asarray(s_grid, float)
    scaled = []
    for s in s_grid:
        pair = CgoPair(s, phi, delta)
        b = boundary_terms(u_field, sector, pair)
        val = 2 * mat.mu * (b["I2_plus"] - np.exp(1j * (sector.theta_m - sector.theta_M)) * b["I2_minus"])
        scaled.append(s * s * val)
    return LimitExtraction(direct, s_grid, np.array(scaled))


def quadratic_form_test(A, sector: SectorGeometry, phi: float | None = None, tol: float = 1e-12):
    """lhs = p^T A (bracket direction) and whether it vanishes to ``tol``."""
    from .geometry import admissible_direction

    if not sector.opening < math.pi:
        raise ValueError("sector must be strictly convex")
    if phi is None:
        phi, _ = admissible_direction(sector)
    A = np.asarray(A, dtype=float)
    if A.shape != (2, 2):
        raise ValueError("A must be 2x2")
    p = CgoPair(1.0, phi).p
    lhs = complex(p @ A @ bracket_direction(sector, phi))
    return lhs, bool(abs(lhs) < tol)


def is_conformal(A, tol: float = 1e-12) -> bool:
    """a11 == a22 and a12 + a21 == 0."""
    A = np.asarray(A, dtype=float)
    return bool(abs(A[0, 0] - A[1, 1]) < tol and abs(A[0, 1] + A[1, 0]) < tol)


# ---------------------------------------------------------------------------
# pointwise diagnostics


@dataclass
class CornerDiagnostics:
    grad_u: np.ndarray
    strain: np.ndarray
    v_corner: float
    scalar_defect: float
    bc_defect: float
    n_samples: int = 0
    probe_radius: float = float("nan")

    def to_json(self) -> dict:
        def re(a):
            return np.real(a).tolist()

        return {"grad_u": re(self.grad_u), "strain": re(self.strain), "v_corner": float(np.real(self.v_corner)),
                "scalar_defect": self.scalar_defect, "bc_defect": self.bc_defect}

    def dumps(self) -> str:
        return json.dumps(self.to_json())


def diagnostics_from_values(grad_u, v_corner, mat: Materials, **kw) -> CornerDiagnostics:
    G = np.asarray(grad_u)
    strain = 0.5 * (G + G.T)
    scalar = float(np.linalg.norm(strain - G[0, 0] * np.eye(2)))
    bc = float(abs(v_corner + 2 * (mat.lam + mat.mu) * G[0, 0]))
    return CornerDiagnostics(G, strain, v_corner, scalar, bc, **kw)


def corner_diagnostics(v_field: Callable, u_field: Callable, corner, mat: Materials, probe_radius: float,
                       n_r: int = 6, n_theta: int = 64, normalize: bool = True) -> CornerDiagnostics:
    """Corner gradient and value by least squares over samples with |x - corner| in [p/2, p].

    Points where an evaluator returns NaN (outside the domain) are dropped.
    With ``normalize`` the fields are rotated by a constant phase so the larger
    of the fitted quantities is real; the defects do not depend on it.
    """
    c = np.asarray(corner, float)
    r = np.linspace(0.5 * probe_radius, probe_radius, n_r)
    t = 2 * math.pi * (np.arange(n_theta) + 0.5) / n_theta
    R, T = np.meshgrid(r, t, indexing="ij")
    d = np.column_stack([(R * np.cos(T)).ravel(), (R * np.sin(T)).ravel()])
    x = c + d
    u = np.asarray(u_field(x)).reshape(len(x), 2)
    v = np.asarray(v_field(x)).reshape(len(x))
    ok = np.all(np.isfinite(u), axis=1) & np.isfinite(v)
    if ok.sum() < 6:
        raise ValueError("fewer than 6 valid sample points around the corner")
    X = np.column_stack([np.ones(ok.sum()), d[ok]])
    cu, *_ = np.linalg.lstsq(X, u[ok], rcond=None)
    cv, *_ = np.linalg.lstsq(X, v[ok], rcond=None)
    G = cu[1:].T  # G[a, b] = d u_a / d x_b
    v0 = cv[0]
    if normalize:
        ref = G.reshape(-1)[np.argmax(np.abs(G))]
        if abs(v0) > np.max(np.abs(G)):
            ref = v0
        if abs(ref) > 0:
            ph = abs(ref) / ref
            G, v0 = G * ph, v0 * ph
    return diagnostics_from_values(G, v0, mat, n_samples=int(ok.sum()), probe_radius=probe_radius)


def exact_pair(mat: Materials, rotation: float = 0.0):
    """Exact transmission pair on the quarter plane rotated by ``rotation``.

    Requires equal compressional and acoustic wavenumbers at every frequency,
    i.e. rho_b / kappa == rho_e / (lam + 2 mu).  With psi = cos(a y1) cos(a y2)
    in rotated coordinates y and a = k / sqrt 2, the pair u = grad psi,
    v = (lam + mu) k^2 psi satisfies both equations and both interface
    conditions on the two bounding rays.  Returns the sector and a factory
    omega -> (v, grad v, u, grad u).
    """
    if not math.isclose(mat.rho_b / mat.kappa, mat.rho_e / (mat.lam + 2 * mat.mu), rel_tol=1e-12):
        raise ValueError("need rho_b / kappa == rho_e / (lam + 2 mu)")
    sector = SectorGeometry(rotation, rotation + math.pi / 2)
    c, s_ = math.cos(rotation), math.sin(rotation)
    Q = np.array([[c, -s_], [s_, c]])  # columns: rotated axes

    def fields(omega):
        k = mat.kp(omega)
        a = k / math.sqrt(2)
        amp = (mat.lam + mat.mu) * k * k

        def psi_parts(x):
            y = np.atleast_2d(x) @ Q
            return np.cos(a * y[:, 0]), np.sin(a * y[:, 0]), np.cos(a * y[:, 1]), np.sin(a * y[:, 1])

        def v(x):
            c1, _, c2, _ = psi_parts(x)
            return amp * c1 * c2

        def grad_y(x):
            c1, s1, c2, s2 = psi_parts(x)
            return np.column_stack([-a * s1 * c2, -a * c1 * s2])

        def grad_v(x):
            return amp * grad_y(x) @ Q.T

        def u(x):
            return grad_y(x) @ Q.T

        def grad_u(x):
            c1, s1, c2, s2 = psi_parts(x)
            H = np.empty((len(c1), 2, 2))
            H[:, 0, 0] = -a * a * c1 * c2
            H[:, 1, 1] = -a * a * c1 * c2
            H[:, 0, 1] = H[:, 1, 0] = a * a * s1 * s2
            return Q @ H @ Q.T

        return v, grad_v, u, grad_u

    return sector, fields
