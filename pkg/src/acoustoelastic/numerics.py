"""Numerical kernels: special functions, quadrature, finite differences, SVD.

Special functions and dense factorizations are backed by scipy/numpy.  A
hand-written one-sided Jacobi SVD is kept as an independent cross-check.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy import special

# ---------------------------------------------------------------------------
# special functions


def gamma(x):
    """Gamma function on the positive real axis."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("gamma is only provided on the positive real axis")
    return special.gamma(x)


def besselj(n, x):
    return special.jv(n, x)


def bessely(n, x):
    return special.yv(n, x)


def hankel1(n, x):
    return special.hankel1(n, x)


def bessel_derivs(kind: str, n, x):
    """Return Z_n(x), Z_n'(x), Z_n''(x) for Z in {J, Y, H1}.

    The second derivative comes from Bessel's equation, so it is exact up to
    rounding of Z_n and Z_n'.
    """
    fn = {"J": special.jv, "Y": special.yv, "H": special.hankel1}[kind]
    n = np.asarray(n)
    x = np.asarray(x, dtype=float)
    z = fn(n, x)
    zm = fn(n - 1, x)
    zp = fn(n + 1, x)
    d1 = 0.5 * (zm - zp)
    with np.errstate(divide="ignore", invalid="ignore"):
        d2 = -d1 / x - (1.0 - n * n / (x * x)) * z
    return z, d1, d2


# ---------------------------------------------------------------------------
# quadrature


@dataclass(frozen=True)
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray
    domain: str
    degree: int

    def integrate(self, f: Callable) -> complex:
        vals = f(self.nodes) if self.nodes.ndim == 1 else f(self.nodes[:, 0], self.nodes[:, 1])
        return np.sum(self.weights * vals)


@lru_cache(maxsize=64)
def _leggauss(n):
    x, w = np.polynomial.legendre.leggauss(n)
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


def gauss_legendre(n: int, a: float = -1.0, b: float = 1.0) -> QuadratureRule:
    if n < 1:
        raise ValueError("n must be positive")
    if not a < b:
        raise ValueError("need a < b")
    x, w = _leggauss(n)
    half = 0.5 * (b - a)
    return QuadratureRule(half * x + 0.5 * (a + b), half * w, "interval", 2 * n - 1)


def sector_rule(sector, n_r: int, n_theta: int, r_min: float = 0.0) -> QuadratureRule:
    """Tensor Gauss rule on the truncated sector; weights carry the Jacobian r."""
    if n_r < 2 or n_theta < 2:
        raise ValueError("need at least two nodes per direction")
    rr = gauss_legendre(n_r, r_min, sector.h)
    tt = gauss_legendre(n_theta, sector.theta_m, sector.theta_M)
    R, T = np.meshgrid(rr.nodes, tt.nodes, indexing="ij")
    W = np.outer(rr.weights * rr.nodes, tt.weights)
    nodes = np.column_stack([(R * np.cos(T)).ravel(), (R * np.sin(T)).ravel()])
    return QuadratureRule(nodes, W.ravel(), "sector", min(2 * n_r - 2, 2 * n_theta - 1))


def arc_rule(radius: float, theta_a: float, theta_b: float, n: int) -> QuadratureRule:
    """Gauss rule on a circular arc, parameterized by angle with Jacobian radius."""
    tt = gauss_legendre(n, theta_a, theta_b)
    nodes = radius * np.column_stack([np.cos(tt.nodes), np.sin(tt.nodes)])
    return QuadratureRule(nodes, radius * tt.weights, "arc", 2 * n - 1)


def triangle_rule(n: int = 4) -> QuadratureRule:
    """Collapsed Gauss rule on the reference triangle {x, y >= 0, x + y <= 1}."""
    g = gauss_legendre(n, 0.0, 1.0)
    u, v = np.meshgrid(g.nodes, g.nodes, indexing="ij")
    wu, wv = np.meshgrid(g.weights, g.weights, indexing="ij")
    x = u
    y = v * (1.0 - u)
    w = wu * wv * (1.0 - u)
    return QuadratureRule(np.column_stack([x.ravel(), y.ravel()]), w.ravel(), "triangle", 2 * n - 2)


def adaptive(integrate_at: Callable[[int], complex], n0: int = 16, tol: float = 1e-12,
             n_max: int = 4096) -> tuple[complex, int]:
    """Double the order until two successive results agree to ``tol`` (relative)."""
    n = n0
    prev = integrate_at(n)
    while n < n_max:
        n *= 2
        cur = integrate_at(n)
        if abs(cur - prev) <= tol * max(abs(cur), 1e-300):
            return cur, n
        prev = cur
    return prev, n


# ---------------------------------------------------------------------------
# finite differences


def fd_gradient(f: Callable, x, step: float = 1e-5):
    """Central-difference gradient of a scalar or vector field at one point.

    Returns an array of shape ``value.shape + (dim,)``.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    x = np.asarray(x, dtype=float)
    cols = []
    for k in range(x.size):
        e = np.zeros_like(x)
        e[k] = step
        fp = np.asarray(f(x + e))
        fm = np.asarray(f(x - e))
        if not (np.all(np.isfinite(fp)) and np.all(np.isfinite(fm))):
            raise ValueError("stencil point outside the evaluator's domain")
        cols.append((fp - fm) / (2 * step))
    return np.stack(cols, axis=-1)


def fd_hessian(f: Callable, x, step: float = 1e-3):
    """Central-difference Hessian (last two axes) of a scalar or vector field."""
    return fd_gradient(lambda y: fd_gradient(f, y, step), x, step)


def fd_laplacian(f: Callable, x, step: float = 1e-3):
    x = np.asarray(x, dtype=float)
    f0 = np.asarray(f(x))
    acc = 0.0
    for k in range(x.size):
        e = np.zeros_like(x)
        e[k] = step
        acc = acc + (np.asarray(f(x + e)) - 2 * f0 + np.asarray(f(x - e))) / step**2
    return acc


# ---------------------------------------------------------------------------
# dense linear algebra


def svd_smallest(A) -> tuple[float, np.ndarray]:
    """Smallest singular value and its right singular vector (unit norm)."""
    A = np.atleast_2d(np.asarray(A))
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    _, s, vh = np.linalg.svd(A)
    n = A.shape[1]
    if A.shape[0] < n:
        # rank deficient by construction: a null vector exists
        _, _, vh = np.linalg.svd(A, full_matrices=True)
        return 0.0, vh[-1].conj()
    return float(s[-1]), vh[n - 1].conj()


def jacobi_svd(A, tol: float = 1e-15, max_sweeps: int = 100) -> np.ndarray:
    """Singular values by one-sided Jacobi rotations (Hestenes), descending."""
    U = np.array(A, dtype=complex, copy=True)
    m, n = U.shape
    if m < n:
        U = U.conj().T.copy()
        m, n = n, m
    for _ in range(max_sweeps):
        off = 0.0
        for i in range(n - 1):
            for j in range(i + 1, n):
                a = np.vdot(U[:, i], U[:, i]).real
                b = np.vdot(U[:, j], U[:, j]).real
                c = np.vdot(U[:, i], U[:, j])
                if abs(c) <= tol * math.sqrt(a * b) or abs(c) == 0.0:
                    continue
                off = max(off, abs(c) / math.sqrt(a * b))
                # rotate columns i, j to orthogonality
                phase = c / abs(c)
                zeta = (b - a) / (2 * abs(c))
                t = math.copysign(1.0, zeta) / (abs(zeta) + math.sqrt(1 + zeta * zeta))
                cs = 1 / math.sqrt(1 + t * t)
                sn = cs * t
                ui = U[:, i].copy()
                uj = U[:, j].copy()
                U[:, i] = cs * ui - sn * np.conj(phase) * uj
                U[:, j] = sn * phase * ui + cs * uj
        if off <= tol:
            break
    return np.sort(np.linalg.norm(U, axis=0))[::-1]
