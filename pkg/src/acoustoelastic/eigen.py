"""Interior acoustic-elastic transmission eigenvalues by singular-value scanning.

The discrete operator for frequency omega (P2 elements for both fields, both
interface conditions imposed weakly on the whole boundary) is

    A(omega) = [[K_e - omega^2 rho_e M_e,  C                                  ],
                [C^T,                      M_a / kappa - K_a / (rho_b omega^2)]]

where C[(i, c), j] = int phi_j phi_i nu_c ds.  A is real symmetric, so its
smallest singular value is the smallest eigenvalue magnitude.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spl
from scipy.optimize import brentq

from . import meshing
from .fem import P2Space
from .geometry import Materials
from .numerics import bessel_derivs, svd_smallest

_DENSE_LIMIT = 1500
_GOLDEN = (math.sqrt(5) - 1) / 2


class EigenSystem:
    """Frequency-independent pieces of A(omega) on a fixed mesh."""

    def __init__(self, mesh: meshing.Mesh, mat: Materials, marker: int = meshing.OUTER):
        self.mesh, self.mat = mesh, mat
        self.space = V = P2Space.build(mesh)
        self.Ke = V.elastic_stiffness(mat.lam, mat.mu).tocsc()
        self.Me = V.vector_mass().tocsc()
        self.Ka = V.scalar_stiffness().tocsc()
        self.Ma = V.scalar_mass().tocsc()
        self.C = V.coupling(marker).tocsc()
        self.n_u = 2 * V.n_nodes
        self.n_v = V.n_nodes
        self.B = sp.block_diag([self.Me, self.Ma], format="csc")

    @property
    def size(self) -> int:
        return self.n_u + self.n_v

    def assemble(self, omega: float) -> sp.csc_matrix:
        if not omega > 0:
            raise ValueError("omega must be positive")
        m = self.mat
        Auu = self.Ke - omega**2 * m.rho_e * self.Me
        Avv = self.Ma / m.kappa - self.Ka / (m.rho_b * omega**2)
        return sp.bmat([[Auu, self.C], [self.C.T, Avv]], format="csc")

    def sigma_min(self, omega: float, vector: bool = False):
        """Smallest singular value of B^{-1/2} A(omega) B^{-1/2}, B the block mass matrix.

        The mass weighting removes the h^2 scale of raw FE entries, so the
        background level is mesh independent.  Optionally returns a null
        vector estimate with unit Euclidean norm.
        """
        A = self.assemble(omega)
        if self.size <= _DENSE_LIMIT:
            Bh = np.linalg.cholesky(self.B.toarray())
            Binv = np.linalg.inv(Bh)
            s, y = svd_smallest(Binv @ A.toarray() @ Binv.T)
            x = np.real_if_close(Binv.T @ y)
            return (s, x / np.linalg.norm(x)) if vector else s
        lu = spl.splu(A, permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
                      options=dict(SymmetricMode=True))
        inv = spl.LinearOperator(A.shape, matvec=lu.solve, dtype=float)
        # shift-invert Lanczos at zero for the pencil A x = mu B x
        w, X = spl.eigsh(A, k=1, M=self.B, sigma=0.0, OPinv=inv, which="LM", ncv=12, tol=1e-12)
        s = abs(float(w[0]))
        if not vector:
            return s
        return s, X[:, 0] / np.linalg.norm(X[:, 0])

    def split(self, x):
        """Split a coefficient vector into (u nodal pairs, v nodal values)."""
        return x[: self.n_u], x[self.n_u:]


@dataclass
class EigenCandidate:
    omega: float
    sigma_min: float
    u_dof: np.ndarray = field(repr=False)
    v_dof: np.ndarray = field(repr=False)
    threshold: float = float("nan")
    diagnostics: list = field(default_factory=list, repr=False)

    def to_json(self) -> dict:
        return {"omega": self.omega, "sigma_min": self.sigma_min, "threshold": self.threshold}


def _golden(f: Callable[[float], float], a: float, b: float, rel_tol: float):
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while (b - a) > rel_tol * 0.5 * (a + b):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    return (c, fc) if fc < fd else (d, fd)


def sigma_grid(system: EigenSystem, omegas: Sequence[float]) -> np.ndarray:
    return np.array([system.sigma_min(w) for w in omegas])


def scan(system: EigenSystem, interval: tuple, n_grid: int = 64, rel_tol: float = 1e-6,
         ratio: float = 50.0, record: list | None = None) -> list[EigenCandidate]:
    """Grid scan of sigma_min with golden-section refinement of the dips.

    Every interior grid minimum is refined; a refined minimum is kept when it
    lies below median(grid values) / ratio.  ``record`` collects (omega, sigma).
    """
    lo, hi = interval
    if not 0 < lo < hi:
        raise ValueError("interval must satisfy 0 < lo < hi")
    if n_grid < 16:
        raise ValueError("n_grid must be at least 16")
    grid = np.linspace(lo, hi, n_grid)
    sig = sigma_grid(system, grid)
    if record is not None:
        record.extend(zip(grid.tolist(), sig.tolist()))
    thr = float(np.median(sig)) / ratio
    out: list[EigenCandidate] = []
    for i in range(1, n_grid - 1):
        if not (sig[i] <= sig[i - 1] and sig[i] <= sig[i + 1]):
            continue
        w, s = _golden(system.sigma_min, grid[i - 1], grid[i + 1], rel_tol)
        if s >= thr:
            continue
        if out and abs(w - out[-1].omega) <= rel_tol * w:
            continue
        s, x = system.sigma_min(w, vector=True)
        u, v = system.split(x)
        out.append(EigenCandidate(float(w), float(s), u, v, thr))
    return out


def local_scan(system: EigenSystem, centers: Sequence[float], rel_halfwidth: float = 1e-3,
               n_grid: int = 16, rel_tol: float = 1e-6, ratio: float = 50.0) -> list[EigenCandidate]:
    """Scan small windows around approximate eigenvalues (e.g. from a coarser mesh)."""
    out = []
    for c in centers:
        found = scan(system, (c * (1 - rel_halfwidth), c * (1 + rel_halfwidth)), n_grid, rel_tol, ratio)
        for cand in found:
            if not any(abs(cand.omega - o.omega) <= rel_tol * cand.omega for o in out):
                out.append(cand)
    return sorted(out, key=lambda c: c.omega)


def refine(system: EigenSystem, centers: Sequence[float], rel_halfwidth: float = 5e-5,
           rel_tol: float = 1e-6, max_shifts: int = 4) -> list[EigenCandidate]:
    """Golden-section minimization of sigma_min in a narrow bracket around each center.

    Meant for a fine mesh seeded by candidates from a coarse scan; much cheaper
    than a grid scan there.  The bracket is shifted when the minimum sits on
    its edge.
    """
    out = []
    for c in centers:
        a, b = c * (1 - rel_halfwidth), c * (1 + rel_halfwidth)
        for _ in range(max_shifts + 1):
            w, s = _golden(system.sigma_min, a, b, rel_tol)
            width = b - a
            if w - a < 0.05 * width:
                a, b = a - 0.8 * width, b - 0.8 * width
            elif b - w < 0.05 * width:
                a, b = a + 0.8 * width, b + 0.8 * width
            else:
                break
        s, x = system.sigma_min(w, vector=True)
        u, v = system.split(x)
        out.append(EigenCandidate(float(w), float(s), u, v))
    return out


def cluster(values: Sequence[float], rel_tol: float) -> list[float]:
    """Merge sorted values closer than rel_tol (relative) into their mean."""
    vals = sorted(values)
    groups: list[list[float]] = []
    for v in vals:
        if groups and abs(v - groups[-1][-1]) <= rel_tol * v:
            groups[-1].append(v)
        else:
            groups.append([v])
    return [float(np.mean(g)) for g in groups]


# ---------------------------------------------------------------------------
# eigenfunctions


@dataclass
class EigenPair:
    omega: float
    u: Callable
    v: Callable
    grad_u: Callable
    scale: complex


def eigenpair(candidate: EigenCandidate, system: EigenSystem, max_sigma: float | None = None) -> EigenPair:
    """FE evaluators of (u, v) normalized to unit combined L2 norm."""
    thr = candidate.threshold if max_sigma is None else max_sigma
    if not candidate.sigma_min < thr:
        raise ValueError("sigma_min above the dip threshold: not an eigenpair")
    V = system.space
    u, v = candidate.u_dof, candidate.v_dof
    nrm2 = np.real(np.vdot(u, system.Me @ u) + np.vdot(v, system.Ma @ v))
    # fix the phase by the largest coefficient so results are deterministic
    x = np.concatenate([u, v])
    k = int(np.argmax(np.abs(x)))
    ph = np.conj(x[k]) / abs(x[k])
    scale = ph / math.sqrt(nrm2)
    U, Vv = u * scale, v * scale
    loc = V.locator()
    return EigenPair(candidate.omega,
                     lambda p: loc.evaluate(U, p, 2),
                     lambda p: loc.evaluate(Vv, p, 1)[:, 0],
                     lambda p: loc.evaluate(U, p, 2, grad=True)[1],
                     scale)


def corner_probes(mesh: meshing.Mesh, probe_factor: float = 8.0):
    """Marked corner positions and probe radii (probe_factor x largest adjacent element)."""
    if len(mesh.corners) == 0:
        raise ValueError("mesh has no marked corners")
    diam = mesh.element_diameters()
    radii = [probe_factor * diam[np.any(mesh.triangles == k, axis=1)].max() for k in mesh.corners]
    return mesh.vertices[mesh.corners], np.array(radii)


def corner_report(candidate: EigenCandidate, system: EigenSystem, probe_factor: float = 8.0):
    """Corner diagnostics of the candidate's eigenfunction at every marked corner."""
    from .corner import corner_diagnostics

    pair = eigenpair(candidate, system, max_sigma=np.inf)
    corners, radii = corner_probes(system.mesh, probe_factor)
    out = [corner_diagnostics(pair.v, pair.u, c, system.mat, r) for c, r in zip(corners, radii)]
    candidate.diagnostics = out
    return out


def control_report(system: EigenSystem, u_field: Callable, v_field: Callable, probe_factor: float = 8.0):
    """Same diagnostics for a prescribed field interpolated onto the mesh (negative control)."""
    from .corner import corner_diagnostics

    V = system.space
    U = V.interpolate(u_field, 2)
    Vv = V.interpolate(v_field, 1)
    loc = V.locator()
    corners, radii = corner_probes(system.mesh, probe_factor)
    return [corner_diagnostics(lambda p: loc.evaluate(Vv, p, 1)[:, 0], lambda p: loc.evaluate(U, p, 2),
                               c, system.mat, r) for c, r in zip(corners, radii)]


# ---------------------------------------------------------------------------
# disk oracle


def disk_mode_matrix(n: int, omega: float, radius: float, mat: Materials) -> np.ndarray:
    """Real 3x3 matrix whose determinant vanishes at disk eigenvalues of azimuthal order n.

    Unknowns: amplitudes of phi = A J_n(kp r), psi = i B J_n(ks r) and
    v = C J_n(ka r) multiplying e^{in t}; rows: normal-flux condition scaled by
    rho_b omega^2, normal traction, tangential traction divided by i.
    """
    kp, ks, ka = mat.kp(omega), mat.ks(omega), mat.ka(omega)
    lam, mu, a = mat.lam, mat.mu, radius
    J, J1, J2 = bessel_derivs("J", n, kp * a)
    f, f1, f2 = J, kp * J1, kp * kp * J2
    G, G1, G2 = bessel_derivs("J", n, ks * a)
    g, g1, g2 = G, ks * G1, ks * ks * G2
    H, H1, _ = bessel_derivs("J", n, ka * a)
    s = mat.rho_b * omega**2
    M = np.empty((3, 3))
    # u_r = f' + in g / r with psi amplitude i B  ->  f' - n g / r
    M[0] = [s * f1, -s * n * g / a, -ka * H1]
    # sigma_rr = -lam kp^2 f + 2 mu f'' + 2 mu in (g'/r - g/r^2)
    M[1] = [-lam * kp**2 * f + 2 * mu * f2, -2 * mu * n * (g1 / a - g / a**2), H]
    # sigma_rt = mu [2 in (f'/r - f/r^2) - g'' + g'/r - n^2 g / r^2]
    M[2] = [2 * mu * n * (f1 / a - f / a**2), mu * (-g2 + g1 / a - n * n * g / a**2), 0.0]
    return M


def disk_mode_det(n, omega, radius, mat):
    return float(np.linalg.det(disk_mode_matrix(n, omega, radius, mat)))


@dataclass(frozen=True)
class DiskRoot:
    omega: float
    n: int
    multiplicity: int


def disk_eigenvalues(interval: tuple, radius: float, mat: Materials, n_max: int | None = None,
                     n_samples: int = 4000) -> list[DiskRoot]:
    """Roots of the per-mode determinants in ``interval`` by sign change + Brent."""
    lo, hi = interval
    if n_max is None:
        n_max = int(math.ceil(mat.ks(hi) * radius)) + 8
    w = np.linspace(lo, hi, n_samples)
    roots = []
    for n in range(n_max + 1):
        d = np.array([disk_mode_det(n, x, radius, mat) for x in w])
        for i in np.flatnonzero(np.sign(d[:-1]) * np.sign(d[1:]) < 0):
            r = brentq(lambda x: disk_mode_det(n, x, radius, mat), w[i], w[i + 1], xtol=1e-14, rtol=1e-15)
            roots.append(DiskRoot(float(r), n, 1 if n == 0 else 2))
    return sorted(roots, key=lambda r: r.omega)


def disk_mode_field(n: int, omega: float, radius: float, mat: Materials):
    """Analytic eigenfunction (u, v) evaluators of azimuthal order n (e^{in t})."""
    from .forward import evaluate_modes

    M = disk_mode_matrix(n, omega, radius, mat)
    _, _, vh = np.linalg.svd(M)
    A, Bp, C = vh[-1]
    kp, ks, ka = mat.kp(omega), mat.ks(omega), mat.ka(omega)
    ns = np.array([n])

    def u(x):
        return evaluate_modes(x, ns, np.array([A]), np.array([1j * Bp]), kp, ks, mat, "J")

    def v(x):
        x = np.atleast_2d(x)
        r = np.hypot(x[:, 0], x[:, 1])
        t = np.arctan2(x[:, 1], x[:, 0])
        return C * bessel_derivs("J", n, ka * r)[0] * np.exp(1j * n * t)

    return u, v


# ---------------------------------------------------------------------------
# output


def write_scan_csv(record, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["omega", "sigma_min"])
        for om, s in sorted(record):
            w.writerow([repr(float(om)), repr(float(s))])


def write_candidates_json(cands: Sequence[EigenCandidate], path):
    with open(path, "w") as fh:
        json.dump([c.to_json() for c in cands], fh, indent=2)
