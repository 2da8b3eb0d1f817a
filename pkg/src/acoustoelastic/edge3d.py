"""Reduction of 3D edge-corner fields to the cross-section plane.

R(g)(x') = int psi(x3) g(x', x3) dx3 with psi a normalized smooth bump.  The
reduced fields satisfy planar Lame / Helmholtz equations with source terms
collecting the x3-derivatives, which are integrated by parts onto psi.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from .geometry import Materials
from .numerics import fd_gradient, fd_hessian, gauss_legendre

DEFAULT_N_QUAD = 160


def _raw_bump(t):
    t = np.asarray(t, float)
    out = np.zeros_like(t)
    m = np.abs(t) < 1
    out[m] = np.exp(-1.0 / (1.0 - t[m] ** 2))
    return out


def _bump_mass(n: int = 400) -> float:
    rule = gauss_legendre(n, -1.0, 1.0)
    return float(rule.weights @ _raw_bump(rule.nodes))


_BUMP_MASS = _bump_mass()


@dataclass(frozen=True)
class BumpProfile:
    """exp(-1/(1-t^2)), t = (x3 - center) / half_width, scaled to unit integral."""

    center: float = 0.0
    half_width: float = 0.5

    def __post_init__(self):
        if not self.half_width > 0:
            raise ValueError("half_width must be positive")

    @property
    def support(self) -> tuple[float, float]:
        return self.center - self.half_width, self.center + self.half_width

    def _t(self, x3):
        return (np.asarray(x3, float) - self.center) / self.half_width

    def __call__(self, x3):
        return _raw_bump(self._t(x3)) / (_BUMP_MASS * self.half_width)

    def derivative(self, x3, order: int = 1):
        t = self._t(x3)
        base = _raw_bump(t) / (_BUMP_MASS * self.half_width)
        if order == 0:
            return base
        inside = np.abs(t) < 1
        q = np.where(inside, 1 - t * t, 1.0)
        g1 = -2 * t / q**2
        if order == 1:
            return np.where(inside, g1 * base, 0.0) / self.half_width
        if order == 2:
            g2 = -2 * (1 + 3 * t * t) / q**3
            return np.where(inside, (g2 + g1 * g1) * base, 0.0) / self.half_width**2
        raise ValueError("order must be 0, 1 or 2")


@dataclass
class Field3:
    """Scalar (ncomp=1) or vector (ncomp=3) field on S_h x (-half_height, half_height).

    ``fn`` maps points of shape (N, 3) to (N,) or (N, 3).
    """

    fn: Callable
    ncomp: int = 1
    half_height: float = 1.0

    def __call__(self, x):
        val = np.asarray(self.fn(np.atleast_2d(x)))
        if not np.all(np.isfinite(val)):
            raise ValueError("field is not finite on the sample set")
        return val


def reduce(field: Field3, bump: BumpProfile, n_quad: int = DEFAULT_N_QUAD, order: int = 0) -> Callable:
    """Planar field x' -> int psi^(order)(x3) g(x', x3) dx3 by Gauss quadrature over the bump support."""
    if n_quad < 32:
        raise ValueError("n_quad must be at least 32")
    lo, hi = bump.support
    if not (-field.half_height < lo and hi < field.half_height):
        raise ValueError("bump support must lie inside (-half_height, half_height)")
    rule = gauss_legendre(n_quad, lo, hi)
    w = rule.weights * bump.derivative(rule.nodes, order)

    def reduced(xp):
        xp = np.atleast_2d(np.asarray(xp, float))
        P, Q = len(xp), len(w)
        pts = np.empty((P, Q, 3))
        pts[:, :, :2] = xp[:, None, :]
        pts[:, :, 2] = rule.nodes[None, :]
        g = field(pts.reshape(-1, 3))
        if field.ncomp == 1:
            return g.reshape(P, Q) @ w
        return np.einsum("pqc,q->pc", g.reshape(P, Q, 3), w)

    return reduced


def _derived(field: Field3, fn: Callable, ncomp: int) -> Field3:
    return Field3(fn, ncomp, field.half_height)


@dataclass
class ReducedResidual:
    residual_u12: float
    residual_u3: float
    residual_v: float
    scale_u: float
    scale_v: float

    @property
    def relative(self) -> dict:
        return {"u12": self.residual_u12 / self.scale_u, "u3": self.residual_u3 / self.scale_u,
                "v": self.residual_v / self.scale_v}

    def max_relative(self) -> float:
        return max(self.relative.values())

    def to_json(self) -> dict:
        return {**asdict(self), "relative": self.relative}


def reduced_residual(u: Field3, grad_u: Field3 | Callable, v: Field3, bump: BumpProfile, mat: Materials,
                     omega: float, grid, n_quad: int = DEFAULT_N_QUAD, step: float = 1e-3) -> ReducedResidual:
    """Max residuals of the reduced planar equations over the sample grid.

    ``grad_u(x)`` returns (N, 3, 3) with [a, b] = d u_a / d x_b; it feeds the
    psi' source terms.  Planar derivatives of reduced fields use central
    differences with ``step``; x3 integrals use quadrature.
    """
    lam, mu = mat.lam, mat.mu
    grid = np.atleast_2d(np.asarray(grid, float))
    gu = grad_u if isinstance(grad_u, Field3) else Field3(grad_u, 9, u.half_height)

    Ru = reduce(u, bump, n_quad)
    Rv = reduce(v, bump, n_quad)
    Ru_dd = reduce(u, bump, n_quad, order=2)
    Rv_dd = reduce(v, bump, n_quad, order=2)
    d_u3 = _derived(u, lambda x: gu.fn(x).reshape(-1, 3, 3)[:, 2, :2].reshape(len(x), 2), 2)
    div12 = _derived(u, lambda x: np.einsum("nii->n", gu.fn(x).reshape(-1, 3, 3)[:, :2, :2]), 1)

    def reduce_cols(fld, order):
        rq = gauss_legendre(n_quad, *bump.support)
        w = rq.weights * bump.derivative(rq.nodes, order)

        def f(xp):
            xp = np.atleast_2d(xp)
            pts = np.concatenate([np.repeat(xp, len(w), axis=0), np.tile(rq.nodes, len(xp))[:, None]], axis=1)
            return np.tensordot(fld.fn(pts).reshape(len(xp), len(w), -1), w, axes=([1], [0]))

        return f

    Rp_du3 = reduce_cols(d_u3, 1)
    Rp_div12 = reduce_cols(div12, 1)

    r12 = r3 = rv = 0.0
    su = sv = 0.0
    for x in grid:
        H = fd_hessian(lambda y: Ru(y[None, :])[0], x, step)  # (3, 2, 2)
        lap = H[:, 0, 0] + H[:, 1, 1]
        Ru0 = Ru(x[None, :])[0]
        Lu12 = mu * lap[:2] + (lam + mu) * np.array([H[0, 0, 0] + H[1, 1, 0], H[0, 0, 1] + H[1, 1, 1]])
        dd = Ru_dd(x[None, :])[0]
        G12 = -omega**2 * mat.rho_e * Ru0[:2] - mu * dd[:2] + (lam + mu) * Rp_du3(x)[0]
        G3 = (-omega**2 * mat.rho_e * Ru0[2] - (lam + 2 * mu) * dd[2] + (lam + mu) * Rp_div12(x)[0, 0])
        r12 = max(r12, float(np.max(np.abs(Lu12 - G12))))
        r3 = max(r3, float(abs(mu * lap[2] - G3)))
        su = max(su, float(np.max(np.abs(G12))), float(abs(G3)), float(np.max(np.abs(Lu12))))

        Hv = fd_hessian(lambda y: Rv(y[None, :])[0], x, step)
        G2 = -Rv_dd(x[None, :])[0] - omega**2 * mat.rho_b / mat.kappa * Rv(x[None, :])[0]
        rv = max(rv, float(abs(Hv[0, 0] + Hv[1, 1] - G2)))
        sv = max(sv, float(abs(G2)))
    return ReducedResidual(r12, r3, rv, su, sv)


def commutation_defect(field: Field3, bump: BumpProfile, x, component: int, n_quad: int = DEFAULT_N_QUAD,
                       grad: Callable | None = None, step: float = 1e-4) -> float:
    """|d_i R(g)(x) - R(d_i g)(x)|, the first by central differences.

    ``grad(x)`` returns d g / d x_component at 3D points; central differences in
    3D are used when it is missing.
    """
    R = reduce(field, bump, n_quad)
    lhs = fd_gradient(lambda y: R(y[None, :])[0], np.asarray(x, float), step)[..., component]
    if grad is None:
        def grad(p):
            e = np.zeros(3)
            e[component] = 1e-6
            return (field.fn(p + e) - field.fn(p - e)) / 2e-6
    Rd = reduce(_derived(field, grad, field.ncomp), bump, n_quad)
    return float(np.max(np.abs(lhs - Rd(np.atleast_2d(x))[0])))


def by_parts_defect(field: Field3, d3_field: Callable, bump: BumpProfile, xp, n_quad: int = DEFAULT_N_QUAD) -> float:
    """|R_{psi'}(g) + R_psi(d3 g)| at planar points xp."""
    a = reduce(field, bump, n_quad, order=1)(xp)
    b = reduce(_derived(field, d3_field, field.ncomp), bump, n_quad)(xp)
    return float(np.max(np.abs(a + b)))


# ---------------------------------------------------------------------------
# plane waves


def compressional_wave(d, omega: float, mat: Materials, half_height: float = 1.0):
    """u = d exp(i k_p x.d) and its gradient, as (Field3, grad callable)."""
    d = np.asarray(d, float) / np.linalg.norm(d)
    k = mat.kp(omega)

    def u(x):
        return np.exp(1j * k * (x @ d))[:, None] * d

    def grad(x):
        return (1j * k * np.exp(1j * k * (x @ d)))[:, None, None] * np.outer(d, d)

    return Field3(u, 3, half_height), grad


def shear_wave(d, polarization, omega: float, mat: Materials, half_height: float = 1.0):
    d = np.asarray(d, float) / np.linalg.norm(d)
    q = np.asarray(polarization, float)
    q = q - (q @ d) * d
    q /= np.linalg.norm(q)
    k = mat.ks(omega)

    def u(x):
        return np.exp(1j * k * (x @ d))[:, None] * q

    def grad(x):
        return (1j * k * np.exp(1j * k * (x @ d)))[:, None, None] * np.outer(q, d)

    return Field3(u, 3, half_height), grad


def acoustic_wave(d, omega: float, mat: Materials, half_height: float = 1.0) -> Field3:
    d = np.asarray(d, float) / np.linalg.norm(d)
    k = mat.ka(omega)
    return Field3(lambda x: np.exp(1j * k * (x @ d)), 1, half_height)


# ---------------------------------------------------------------------------
# edge-corner algebra


@dataclass
class EdgeCornerDefects:
    sym12: float
    sym13: float
    sym23: float
    normal_strain_gap: float
    v_relation: float
    a33: float
    a11: float
    grad_norm: float
    tol: float = 1e-10

    @property
    def diagonal_strain(self) -> bool:
        return max(self.sym12, self.sym13, self.sym23) < self.tol

    @property
    def value_relation(self) -> bool:
        return self.v_relation < self.tol and self.normal_strain_gap < self.tol

    @property
    def value_vanishes(self) -> bool:
        return self.v_relation < self.tol and abs(self.a11) < self.tol

    @property
    def gradient_vanishes(self) -> bool:
        return self.grad_norm < self.tol

    def classify(self) -> dict:
        return {"a": bool(self.diagonal_strain), "b": bool(self.value_relation), "c": bool(self.value_vanishes),
                "d": bool(self.gradient_vanishes), "b_hypothesis": bool(abs(self.a33) < self.tol)}

    def to_json(self) -> dict:
        out = asdict(self)
        out["classification"] = self.classify()
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_json())


def edge_corner_relations(grad_u0, v0: float, mat: Materials, tol: float = 1e-10) -> EdgeCornerDefects:
    """Edge-corner relations for a corner gradient [a, b] = d u_a / d x_b and corner value v0.

    (a) off-diagonal strain vanishes; (b) v0 = -2 (lam + mu) a11 with a11 = a22,
    stated under a33 = 0; (c) v0 = 0; (d) the full gradient vanishes.
    """
    A = np.asarray(grad_u0, float)
    if A.shape != (3, 3):
        raise ValueError("grad_u0 must be 3x3")
    return EdgeCornerDefects(
        sym12=abs(A[0, 1] + A[1, 0]), sym13=abs(A[0, 2] + A[2, 0]), sym23=abs(A[1, 2] + A[2, 1]),
        normal_strain_gap=abs(A[0, 0] - A[1, 1]),
        v_relation=abs(v0 + 2 * (mat.lam + mat.mu) * A[0, 0]),
        a33=float(A[2, 2]), a11=float(A[0, 0]), grad_norm=float(np.max(np.abs(A))), tol=tol)
