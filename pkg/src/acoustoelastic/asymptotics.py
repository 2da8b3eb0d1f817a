"""Quadrature checks of the exponential-solution integral asymptotics on a corner.

Every check integrates by Gauss rules (orders doubled until successive values
agree) and compares with a leading-order closed form or a one-sided bound.
Radial integrals use the substitution r = h t^2, which keeps the integrands
smooth for fractional powers of r.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .geometry import CgoPair, Materials, SectorGeometry, cgo_scalar, cgo_traction_field
from .numerics import adaptive, gamma, gauss_legendre

DEFAULT_S_GRID = (10.0, 14.0, 20.0, 28.0, 40.0, 57.0, 80.0)
NOISE_FLOOR = 1e-14
# one-sided bounds can be attained up to e^{-s h delta}; allow quadrature rounding
BOUND_RTOL = 1e-12


@dataclass
class AsymptoticReport:
    """Quadrature values next to closed forms (or bounds) over a parameter grid.

    For bound-type checks ``closed_forms`` holds the bound and ``abs_errors``
    the decaying quantity itself.
    """

    name: str
    s_grid: np.ndarray
    quad_values: np.ndarray
    closed_forms: np.ndarray
    abs_errors: np.ndarray
    fitted_decay_rate: float
    expected_rate: float
    sharp_rate: float = float("nan")
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        self.s_grid = np.asarray(self.s_grid, dtype=float)
        self.quad_values = np.asarray(self.quad_values)
        self.closed_forms = np.asarray(self.closed_forms)
        self.abs_errors = np.asarray(self.abs_errors, dtype=float)
        n = len(self.s_grid)
        if not (len(self.quad_values) == len(self.closed_forms) == len(self.abs_errors) == n):
            raise ValueError("report arrays must have equal length")
        if np.any(np.diff(self.s_grid) <= 0):
            raise ValueError("s_grid must be strictly increasing")

    def rate_at_least(self, tol: float = 0.2) -> bool:
        """Fitted rate is no slower than the expected (bound) rate, up to ``tol``."""
        return bool(self.fitted_decay_rate >= (1 - tol) * self.expected_rate)

    def rate_within(self, rate: float, tol: float = 0.2) -> bool:
        return bool(abs(self.fitted_decay_rate - rate) <= tol * rate)

    def bound_holds(self, rtol: float = BOUND_RTOL) -> bool:
        return bool(np.all(np.abs(self.quad_values) <= np.real(self.closed_forms) * (1 + rtol)))

    def moment_bound_holds(self, rtol: float = BOUND_RTOL) -> bool:
        """extras['moments'] <= extras['moment_bounds'] (moment-type reports only)."""
        m, b = self.extras["moments"], self.extras["moment_bounds"]
        return bool(np.all(np.asarray(m) <= np.asarray(b) * (1 + rtol)))

    def rows(self):
        for s, q, c, e in zip(self.s_grid, self.quad_values, self.closed_forms, self.abs_errors):
            q, c = complex(q), complex(c)
            yield [s, q.real, q.imag, c.real, c.imag, e]

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["s", "re_quad", "im_quad", "re_closed", "im_closed", "abs_err"])
            for r in self.rows():
                w.writerow([repr(float(x)) for x in r])

    def to_json(self) -> dict:
        return {"name": self.name, "s_grid": self.s_grid.tolist(),
                "quad": [[complex(q).real, complex(q).imag] for q in self.quad_values],
                "closed": [[complex(c).real, complex(c).imag] for c in self.closed_forms],
                "abs_errors": self.abs_errors.tolist(), "fitted_decay_rate": self.fitted_decay_rate,
                "expected_rate": self.expected_rate, "sharp_rate": self.sharp_rate,
                "extras": {k: v for k, v in self.extras.items() if isinstance(v, (int, float, str, bool))}}

    def dump_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=2)


def fit_decay_rate(x, err, floor: float = NOISE_FLOOR) -> float:
    """Least-squares slope of -log(err) against x over points above the floor."""
    x = np.asarray(x, float)
    err = np.asarray(err, float)
    keep = err > floor
    if keep.sum() < 2:
        return float("nan")
    slope = np.polyfit(x[keep], np.log(err[keep]), 1)[0]
    return float(-slope)


def fit_power(x, y, floor: float = NOISE_FLOOR) -> float:
    """Least-squares slope of log|y| against log x."""
    x = np.asarray(x, float)
    y = np.abs(np.asarray(y))
    keep = y > floor
    if keep.sum() < 2:
        return float("nan")
    return float(np.polyfit(np.log(x[keep]), np.log(y[keep]), 1)[0])


def sector_delta(sector: SectorGeometry, phi: float) -> float:
    """min over the sector of -d.tau; positive iff phi is admissible."""
    return float(-max(math.cos(sector.theta_M - phi), math.cos(sector.theta_m - phi)))


def _check_phi(sector, phi):
    delta = sector_delta(sector, phi)
    if delta <= 0:
        raise ValueError("direction is not admissible for this sector")
    return delta


def _check_grid(s_grid):
    s = np.asarray(s_grid, float)
    if np.any(s <= 0) or np.any(np.diff(s) <= 0):
        raise ValueError("s_grid must be positive and strictly increasing")
    return s


# ---------------------------------------------------------------------------
# quadrature drivers


def radial_integral(f: Callable, h: float, tol: float = 1e-12, n0: int = 16) -> complex:
    """int_0^h f(r) dr with r = h t^2 and adaptive Gauss order."""

    def at(n):
        g = gauss_legendre(n, 0.0, 1.0)
        r = h * g.nodes**2
        return np.sum(g.weights * 2 * h * g.nodes * f(r))

    return adaptive(at, n0=n0, tol=tol)[0]


def sector_integral(f: Callable, sector: SectorGeometry, tol: float = 1e-12, n0: int = 16) -> complex:
    """int over the truncated sector of f(x) dx; ``f`` maps (P, 2) points to values."""

    def at(n):
        gt = gauss_legendre(n, 0.0, 1.0)
        ga = gauss_legendre(n, sector.theta_m, sector.theta_M)
        r = sector.h * gt.nodes**2
        w_r = gt.weights * 2 * sector.h * gt.nodes * r
        R, T = np.meshgrid(r, ga.nodes, indexing="ij")
        x = np.stack([R * np.cos(T), R * np.sin(T)], axis=-1).reshape(-1, 2)
        vals = np.asarray(f(x)).reshape(n, n, *np.shape(f(x))[1:])
        W = np.outer(w_r, ga.weights)
        return np.tensordot(W, vals, axes=([0, 1], [0, 1]))

    return adaptive(at, n0=n0, tol=tol)[0]


def arc_integral(f: Callable, sector: SectorGeometry, tol: float = 1e-12, n0: int = 16):
    """int over the arc |x| = h of f(x, nu) ds."""

    def at(n):
        g = gauss_legendre(n, sector.theta_m, sector.theta_M)
        nu = np.column_stack([np.cos(g.nodes), np.sin(g.nodes)])
        vals = np.asarray(f(sector.h * nu, nu))
        return np.tensordot(sector.h * g.weights, vals, axes=(0, 0))

    return _adaptive_any(at, n0, tol)


def _adaptive_any(at, n0, tol, n_max=4096):
    n = n0
    prev = at(n)
    while n < n_max:
        n *= 2
        cur = at(n)
        if np.max(np.abs(cur - prev)) <= tol * max(np.max(np.abs(cur)), 1e-300):
            return cur
        prev = cur
    return prev


def edge_integral(f: Callable, tau, h: float, tol: float = 1e-12, n0: int = 16):
    """int_0^h f(r tau) dr along the ray with direction tau."""
    tau = np.asarray(tau, float)

    def at(n):
        g = gauss_legendre(n, 0.0, h)
        vals = np.asarray(f(np.outer(g.nodes, tau)))
        return np.tensordot(g.weights, vals, axes=(0, 0))

    return _adaptive_any(at, n0, tol)


def tail_integral(f: Callable, h: float, decay: float, tol: float = 1e-12, n0: int = 16):
    """int_h^inf f(r) dr for |f| <= C e^{-decay r}, truncated where e^{-decay (r-h)} < e^{-60}."""
    L = 60.0 / decay

    def at(n):
        g = gauss_legendre(n, h, h + L)
        return np.tensordot(g.weights, np.asarray(f(g.nodes)), axes=(0, 0))

    return _adaptive_any(at, n0, tol)


# ---------------------------------------------------------------------------
# closed forms


def sector_moment_closed(s, phi, sector: SectorGeometry) -> complex:
    """Leading term of int_{S_h} e^{rho.x} dx."""
    return 1j * np.exp(2j * phi) / (2 * s**2) * (np.exp(-2j * sector.theta_M) - np.exp(-2j * sector.theta_m))


def edge_moment_closed(alpha, s, phi, theta) -> complex:
    """Gamma(alpha+1) / (-rho.tau)^(alpha+1) with rho.tau = s e^{i(theta-phi)}."""
    return gamma(alpha + 1) / (-s * np.exp(1j * (theta - phi))) ** (alpha + 1)


# ---------------------------------------------------------------------------
# checks


def laplace_tail_check(alpha: float, h: float, a_grid: Sequence[complex]) -> AsymptoticReport:
    """int_0^h r^alpha e^{-a r} dr against Gamma(alpha+1)/a^(alpha+1)."""
    if not 0 < h < math.e:
        raise ValueError("need 0 < h < e")
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    a = np.asarray(a_grid, dtype=complex)
    if np.any(a.real < 2 * alpha / math.e) or np.any(a.real <= 0):
        raise ValueError("need Re(a) >= 2 alpha / e and Re(a) > 0")
    if np.any(np.diff(a.real) <= 0):
        raise ValueError("Re(a) must grow along the grid")
    quad = np.array([radial_integral(lambda r, ak=ak: r**alpha * np.exp(-ak * r), h) for ak in a])
    closed = gamma(alpha + 1) / a ** (alpha + 1)
    err = np.abs(quad - closed)
    tail = np.array([tail_integral(lambda r, ak=ak: r**alpha * np.exp(-ak * r), h, ak.real) for ak in a])
    return AsymptoticReport("laplace_tail", a.real, quad, closed, err, fit_decay_rate(a.real, err),
                            expected_rate=h / 2, sharp_rate=h,
                            extras={"alpha": alpha, "h": h, "tail": tail,
                                    "tail_rate": fit_decay_rate(a.real, np.abs(tail), 0.0)})


def v0_sector_moment_check(sector: SectorGeometry, phi: float, alpha: float = 0.0,
                           s_grid: Sequence[float] = DEFAULT_S_GRID, vector: bool = False) -> AsymptoticReport:
    """Sector integral of v0 (or u0 = p v0) against its leading form; moment bound in extras.

    extras['moments'] are int |v0||x|^alpha (times sqrt 2 for u0) and
    extras['moment_bounds'] the corresponding Gamma-function bounds.
    """
    delta = _check_phi(sector, phi)
    s_grid = _check_grid(s_grid)
    quad, closed, moments, bounds, tails = [], [], [], [], []
    fac = math.sqrt(2) if vector else 1.0
    ga = gauss_legendre(64, sector.theta_m, sector.theta_M)
    for s in s_grid:
        pair = CgoPair(s, phi, delta)
        q = sector_integral(lambda x: cgo_scalar(pair, x), sector)
        c_th = s * np.exp(1j * (ga.nodes - phi))
        tails.append(abs(tail_integral(lambda r: (r[:, None] * np.exp(np.outer(r, c_th))) @ ga.weights,
                                       sector.h, s * delta)))
        c = sector_moment_closed(s, phi, sector)
        if vector:
            q, c = q * pair.p, c * pair.p
        quad.append(q)
        closed.append(c)
        mom = sector_integral(lambda x: np.abs(cgo_scalar(pair, x)) * np.hypot(x[:, 0], x[:, 1]) ** alpha, sector)
        moments.append(fac * mom.real)
        bounds.append(fac * sector.opening * gamma(alpha + 2) / (delta * s) ** (alpha + 2))
    quad, closed = np.array(quad), np.array(closed)
    err = np.linalg.norm(np.atleast_2d((quad - closed).T).T.reshape(len(s_grid), -1), axis=1)
    name = "u0_sector_moment" if vector else "v0_sector_moment"
    return AsymptoticReport(name, s_grid, quad if not vector else quad[:, 0], closed if not vector else closed[:, 0],
                            err, fit_decay_rate(s_grid, err), expected_rate=delta * sector.h / 2,
                            sharp_rate=delta * sector.h,
                            extras={"delta": delta, "alpha": alpha, "moments": np.array(moments),
                                    "moment_bounds": np.array(bounds), "vector_quad": quad, "vector_closed": closed,
                                    "tail": fac * np.array(tails),
                                    "tail_rate": fit_decay_rate(s_grid, np.array(tails), 0.0)})


def boundary_moment_check(sector: SectorGeometry, phi: float, alpha: float = 0.0,
                          s_grid: Sequence[float] = DEFAULT_S_GRID, side: str = "plus") -> AsymptoticReport:
    """Edge integral int_0^h r^alpha e^{r rho.tau} dr on one bounding ray."""
    delta = _check_phi(sector, phi)
    s_grid = _check_grid(s_grid)
    if side not in ("plus", "minus"):
        raise ValueError("side must be 'plus' or 'minus'")
    theta = sector.theta_M if side == "plus" else sector.theta_m
    quad, closed, absm, bnd, tails = [], [], [], [], []
    for s in s_grid:
        c = s * np.exp(1j * (theta - phi))
        quad.append(radial_integral(lambda r: r**alpha * np.exp(r * c), sector.h))
        tails.append(abs(tail_integral(lambda r: r**alpha * np.exp(r * c), sector.h, -c.real)))
        closed.append(edge_moment_closed(alpha, s, phi, theta))
        absm.append(radial_integral(lambda r: r**alpha * np.abs(np.exp(r * c)), sector.h).real)
        bnd.append(gamma(alpha + 1) / (delta * s) ** (alpha + 1))
    quad, closed = np.array(quad), np.array(closed)
    err = np.abs(quad - closed)
    return AsymptoticReport(f"boundary_moment_{side}", s_grid, quad, closed, err, fit_decay_rate(s_grid, err),
                            expected_rate=delta * sector.h / 2, sharp_rate=delta * sector.h,
                            extras={"delta": delta, "alpha": alpha, "moments": np.array(absm),
                                    "moment_bounds": np.array(bnd), "tail": np.array(tails),
                                    "tail_rate": fit_decay_rate(s_grid, np.array(tails), 0.0)})


def arc_norm_check(sector: SectorGeometry, phi: float, s_grid: Sequence[float] = DEFAULT_S_GRID,
                   mat: Materials | None = None) -> dict[str, AsymptoticReport]:
    """Norms of v0, grad v0, u0 and T u0 on the arc |x| = h against their bounds."""
    mat = mat or Materials()
    delta = _check_phi(sector, phi)
    s_grid = _check_grid(s_grid)
    h, op = sector.h, sector.opening
    names = ("v0_l2", "v0_h1", "grad_v0_l2", "u0_h1", "traction_u0_l2")
    vals = {k: [] for k in names}
    bnds = {k: [] for k in names}
    for s in s_grid:
        pair = CgoPair(s, phi, delta)

        def sq(x, nu):
            v0 = cgo_scalar(pair, x)
            a2 = np.abs(v0) ** 2
            t = cgo_traction_field(pair, nu, x, mat)
            return np.column_stack([a2, 2 * s * s * a2, 2 * a2, 4 * s * s * a2, np.sum(np.abs(t) ** 2, axis=1)])

        l2, g2, u2, gu2, t2 = np.sqrt(np.real(arc_integral(sq, sector)))
        vals["v0_l2"].append(l2)
        vals["v0_h1"].append(math.hypot(l2, g2))
        vals["grad_v0_l2"].append(g2)
        vals["u0_h1"].append(math.hypot(u2, gu2))
        vals["traction_u0_l2"].append(t2)
        base = math.sqrt(h * op) * math.exp(-s * h * delta)
        bnds["v0_l2"].append(base)
        bnds["v0_h1"].append(math.sqrt(1 + 8 * s * s) * base)
        bnds["grad_v0_l2"].append(2 * s * math.sqrt(2) * base)
        bnds["u0_h1"].append(2 * math.sqrt(1 + 32 * s * s) * base)
        bnds["traction_u0_l2"].append(8 * mat.mu * (1 + s * s) * base)
    out = {}
    for k in names:
        v = np.array(vals[k])
        out[k] = AsymptoticReport(k, s_grid, v, np.array(bnds[k]), v, fit_decay_rate(s_grid, v),
                                  expected_rate=h * delta, sharp_rate=h * delta, extras={"delta": delta})
    return out


def h1_norm_sector(f: Callable, grad: Callable, sector: SectorGeometry) -> float:
    """H^1 norm over the truncated sector of a scalar or vector field."""

    def dens(x):
        val = np.asarray(f(x)).reshape(len(x), -1)
        g = np.asarray(grad(x)).reshape(len(x), -1)
        return np.sum(np.abs(val) ** 2, axis=1) + np.sum(np.abs(g) ** 2, axis=1)

    return math.sqrt(sector_integral(dens, sector).real)


def arc_terms(pair: CgoPair, sector: SectorGeometry, mat: Materials, v: Callable, grad_v: Callable,
              u: Callable, grad_u: Callable, n0: int = 16) -> tuple[complex, complex]:
    """I_arc1 = int (v dv0/dnu - v0 dv/dnu), I_arc2 = int (u.T u0 - u0.T u) on |x| = h."""

    def dens(x, nu):
        v0 = cgo_scalar(pair, x)
        dv0 = v0 * (nu @ pair.rho)
        gv = np.asarray(grad_v(x))
        t1 = v(x) * dv0 - v0 * np.sum(gv * nu, axis=1)
        uu = np.asarray(u(x))
        G = np.asarray(grad_u(x))
        div = G[:, 0, 0] + G[:, 1, 1]
        eps = 0.5 * (G + np.transpose(G, (0, 2, 1)))
        tu = mat.lam * div[:, None] * nu + 2 * mat.mu * np.einsum("pab,pb->pa", eps, nu)
        tu0 = cgo_traction_field(pair, nu, x, mat)
        u0 = v0[:, None] * pair.p
        t2 = np.sum(uu * tu0, axis=1) - np.sum(u0 * tu, axis=1)
        return np.column_stack([t1, t2])

    r = arc_integral(dens, sector, n0=n0)
    return complex(r[0]), complex(r[1])


def arc_integral_check(sector: SectorGeometry, phi: float, mat: Materials, v: Callable, grad_v: Callable,
                       u: Callable, grad_u: Callable,
                       s_grid: Sequence[float] = DEFAULT_S_GRID) -> dict[str, AsymptoticReport]:
    """|I_arc1|, |I_arc2| against the H^1-weighted exponential bounds."""
    delta = _check_phi(sector, phi)
    s_grid = _check_grid(s_grid)
    h, op = sector.h, sector.opening
    nv = h1_norm_sector(v, grad_v, sector)
    nu_ = h1_norm_sector(u, grad_u, sector)
    a1, a2, b1, b2 = [], [], [], []
    for s in s_grid:
        pair = CgoPair(s, phi, delta)
        i1, i2 = arc_terms(pair, sector, mat, v, grad_v, u, grad_u)
        a1.append(abs(i1))
        a2.append(abs(i2))
        base = math.sqrt(h * op) * math.exp(-s * h * delta)
        b1.append((math.sqrt(1 + 8 * s * s) + 2 * math.sqrt(2) * s) * base * nv)
        b2.append(2 * (math.sqrt(1 + 32 * s * s) + 4 * mat.mu * (1 + s * s)) * base * nu_)
    out = {}
    for k, vals, bnd in (("arc_term_1", a1, b1), ("arc_term_2", a2, b2)):
        vals = np.array(vals)
        out[k] = AsymptoticReport(k, s_grid, vals, np.array(bnd), vals, fit_decay_rate(s_grid, vals),
                                  expected_rate=h * delta, sharp_rate=h * delta,
                                  extras={"delta": delta, "h1_v": nv, "h1_u": nu_})
    return out


@dataclass
class InteriorTerms:
    I4: complex
    I5: complex
    lead4: complex
    lead5: complex


def interior_term_check(v_field: Callable, u_field: Callable, sector: SectorGeometry, pair: CgoPair,
                        mat: Materials, omega: float | None = None) -> InteriorTerms:
    """I4 = int v v0 / kappa and I5 = int rho_e (u.p) v0 with their leading forms.

    ``omega`` only enters the identity that combines these terms and is
    accepted for signature symmetry.
    """
    _check_phi(sector, pair.phi)
    zero = np.zeros((1, 2))

    def f4(x):
        val = np.asarray(v_field(x))
        if not np.all(np.isfinite(val)):
            raise ValueError("v_field returned non-finite values")
        return val * cgo_scalar(pair, x) / mat.kappa

    def f5(x):
        val = np.asarray(u_field(x))
        if not np.all(np.isfinite(val)):
            raise ValueError("u_field returned non-finite values")
        return mat.rho_e * (val @ pair.p) * cgo_scalar(pair, x)

    I4 = complex(sector_integral(f4, sector))
    I5 = complex(sector_integral(f5, sector))
    base = sector_moment_closed(pair.s, pair.phi, sector)
    lead4 = complex(np.asarray(v_field(zero))[0] / mat.kappa * base)
    lead5 = complex(mat.rho_e * (np.asarray(u_field(zero))[0] @ pair.p) * base)
    return InteriorTerms(I4, I5, lead4, lead5)


def interior_term_report(v_field: Callable, u_field: Callable, sector: SectorGeometry, phi: float,
                         mat: Materials, s_grid: Sequence[float] = DEFAULT_S_GRID) -> dict[str, AsymptoticReport]:
    """Remainders s^2 (I - lead) of both interior terms; extras carry the log-log slope."""
    delta = _check_phi(sector, phi)
    s_grid = _check_grid(s_grid)
    rows = [interior_term_check(v_field, u_field, sector, CgoPair(s, phi, delta), mat) for s in s_grid]
    out = {}
    for k in ("4", "5"):
        q = np.array([getattr(r, "I" + k) for r in rows])
        c = np.array([getattr(r, "lead" + k) for r in rows])
        rem = np.abs(q - c) * s_grid**2
        out["I" + k] = AsymptoticReport("interior_I" + k, s_grid, q, c, np.abs(q - c), float("nan"), float("nan"),
                                        extras={"scaled_remainder": rem, "power": fit_power(s_grid, rem)})
    return out


@dataclass
class BoundaryTerms:
    I1_plus: complex
    I1_minus: complex
    I2_plus: complex
    I2_minus: complex
    lead: dict


def boundary_terms(u_field: Callable, sector: SectorGeometry, pair: CgoPair, n0: int = 16) -> dict:
    """I1 (u.nu weight) and I2 (u.p weight) on both edges, plus I3 (u.rho weight)."""
    out = {}
    for side, tau, nu in (("plus", sector.tau_M, sector.nu_M), ("minus", sector.tau_m, sector.nu_m)):
        def f(x):
            return np.asarray(u_field(x)) * cgo_scalar(pair, x)[:, None]

        w = edge_integral(f, tau, sector.h, n0=n0)
        out["I1_" + side] = complex(w @ nu)
        out["I2_" + side] = complex(w @ pair.p)
        out["I3_" + side] = complex(w @ pair.rho)
    return out


def boundary_leading(u0, grad_u0, sector: SectorGeometry, pair: CgoPair) -> dict:
    """Two-term expansions of the edge integrals from u(0) and grad u(0)."""
    s, phi = pair.s, pair.phi
    u0 = np.asarray(u0)
    G = np.asarray(grad_u0)
    out = {}
    for side, th, tau, nu in (("plus", sector.theta_M, sector.tau_M, sector.nu_M),
                              ("minus", sector.theta_m, sector.tau_m, sector.nu_m)):
        e1 = np.exp(1j * (phi - th)) / s
        e2 = np.exp(2j * (phi - th)) / s**2
        out["I1_" + side] = -(u0 @ nu) * e1 + (nu @ G @ tau) * e2
        out["I2_" + side] = -(u0 @ pair.p) * e1 + (pair.p @ G @ tau) * e2
    return out


def boundary_term_check(u_field: Callable, grad_u0, sector: SectorGeometry, pair: CgoPair) -> BoundaryTerms:
    _check_phi(sector, pair.phi)
    q = boundary_terms(u_field, sector, pair)
    lead = boundary_leading(np.asarray(u_field(np.zeros((1, 2))))[0], grad_u0, sector, pair)
    return BoundaryTerms(q["I1_plus"], q["I1_minus"], q["I2_plus"], q["I2_minus"], lead)


def boundary_term_report(u_field: Callable, grad_u0, sector: SectorGeometry, phi: float,
                         s_grid: Sequence[float] = DEFAULT_S_GRID) -> dict[str, AsymptoticReport]:
    """Remainders of the two-term expansions; extras['power'] is the log-log slope."""
    delta = _check_phi(sector, phi)
    s_grid = _check_grid(s_grid)
    u0 = np.asarray(u_field(np.zeros((1, 2))))[0]
    quads = [boundary_terms(u_field, sector, CgoPair(s, phi, delta)) for s in s_grid]
    leads = [boundary_leading(u0, grad_u0, sector, CgoPair(s, phi, delta)) for s in s_grid]
    out = {}
    for k in ("I1_plus", "I1_minus", "I2_plus", "I2_minus"):
        q = np.array([d[k] for d in quads])
        c = np.array([d[k] for d in leads])
        err = np.abs(q - c)
        out[k] = AsymptoticReport("boundary_" + k, s_grid, q, c, err, float("nan"), float("nan"),
                                  extras={"power": fit_power(s_grid, err)})
    return out
