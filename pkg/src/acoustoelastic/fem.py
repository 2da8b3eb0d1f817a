"""Quadratic Lagrange finite elements with isoparametric circular boundaries.

Node numbering: mesh vertices first, then one node per edge.  Edges lying on
a circle registered in ``Mesh.circles`` get their mid-node projected onto the
circle, which makes the adjacent triangles curved (isoparametric).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.spatial import cKDTree

from .meshing import Mesh
from .numerics import gauss_legendre, triangle_rule

_TRI_Q = triangle_rule(4)
_EDGE_Q = gauss_legendre(5, 0.0, 1.0)


def p2_shape(xi, eta):
    """Values (Q, 6) and reference gradients (Q, 6, 2) of the P2 basis."""
    l0 = 1.0 - xi - eta
    l1, l2 = xi, eta
    N = np.stack([l0 * (2 * l0 - 1), l1 * (2 * l1 - 1), l2 * (2 * l2 - 1),
                  4 * l0 * l1, 4 * l1 * l2, 4 * l2 * l0], axis=-1)
    # d/dxi, d/deta with dl0 = (-1,-1), dl1 = (1,0), dl2 = (0,1)
    dxi = np.stack([-(4 * l0 - 1), 4 * l1 - 1, 0 * xi, 4 * (l0 - l1), 4 * l2, -4 * l2], axis=-1)
    deta = np.stack([-(4 * l0 - 1), 0 * xi, 4 * l2 - 1, -4 * l1, 4 * l1, 4 * (l0 - l2)], axis=-1)
    return N, np.stack([dxi, deta], axis=-1)


def edge_shape(t):
    """1D quadratic basis on [0, 1] for (start, end, mid) nodes."""
    return np.stack([(1 - t) * (1 - 2 * t), t * (2 * t - 1), 4 * t * (1 - t)], axis=-1), \
        np.stack([4 * t - 3, 4 * t - 1, 4 - 8 * t], axis=-1)


@dataclass
class P2Space:
    mesh: Mesh
    nodes: np.ndarray
    elements: np.ndarray
    edge_node: dict
    segment_nodes: np.ndarray

    @classmethod
    def build(cls, mesh: Mesh) -> "P2Space":
        tri = mesh.triangles
        loc = np.array([[0, 1], [1, 2], [2, 0]])
        e_all = np.sort(tri[:, loc].reshape(-1, 2), axis=1)
        uniq, inv = np.unique(e_all, axis=0, return_inverse=True)
        inv = inv.reshape(-1)
        nv = mesh.n_vertices
        mids = 0.5 * (mesh.vertices[uniq[:, 0]] + mesh.vertices[uniq[:, 1]])
        edge_node = {(int(a), int(b)): nv + k for k, (a, b) in enumerate(uniq)}
        seg_mid = np.array([edge_node[(min(a, b), max(a, b))] for a, b in mesh.segments], dtype=np.int64)
        nodes = np.vstack([mesh.vertices, mids])
        for marker, (c, r) in mesh.circles.items():
            idx = seg_mid[mesh.segment_markers == marker]
            d = nodes[idx] - c
            nodes[idx] = c + r * d / np.linalg.norm(d, axis=1)[:, None]
        elements = np.column_stack([tri, nv + inv.reshape(-1, 3)])
        segment_nodes = np.column_stack([mesh.segments, seg_mid])
        return cls(mesh, nodes, elements, edge_node, segment_nodes)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    # -- geometry at quadrature points -------------------------------------
    def geometry(self, elems=None, rule=_TRI_Q):
        """Physical points, weights (incl. |J|), shape values and gradients."""
        el = self.elements if elems is None else self.elements[elems]
        X = self.nodes[el]  # (E, 6, 2)
        N, dN = p2_shape(rule.nodes[:, 0], rule.nodes[:, 1])
        J = np.einsum("eia,qib->eqab", X, dN)
        det = J[..., 0, 0] * J[..., 1, 1] - J[..., 0, 1] * J[..., 1, 0]
        if np.any(det <= 0):
            raise ValueError("inverted element")
        inv = np.empty_like(J)
        inv[..., 0, 0] = J[..., 1, 1] / det
        inv[..., 1, 1] = J[..., 0, 0] / det
        inv[..., 0, 1] = -J[..., 0, 1] / det
        inv[..., 1, 0] = -J[..., 1, 0] / det
        G = np.einsum("qib,eqba->eqia", dN, inv)
        pts = np.einsum("eia,qi->eqa", X, N)
        w = det * rule.weights[None, :]
        return el, pts, w, N, G

    # -- assembly ----------------------------------------------------------
    def _scatter(self, el, Ke, ncomp):
        E, nloc = el.shape
        if ncomp == 1:
            dofs = el
        else:
            dofs = (ncomp * el[:, :, None] + np.arange(ncomp)[None, None]).reshape(E, -1)
        rows = np.repeat(dofs, dofs.shape[1], axis=1).ravel()
        cols = np.tile(dofs, (1, dofs.shape[1])).ravel()
        n = ncomp * self.n_nodes
        return sp.csr_matrix((Ke.ravel(), (rows, cols)), shape=(n, n))

    def scalar_stiffness(self, elems=None):
        el, _, w, _, G = self.geometry(elems)
        Ke = np.einsum("eq,eqia,eqja->eij", w, G, G)
        return self._scatter(el, Ke, 1)

    def scalar_mass(self, elems=None):
        el, _, w, N, _ = self.geometry(elems)
        Ke = np.einsum("eq,qi,qj->eij", w, N, N)
        return self._scatter(el, Ke, 1)

    def elastic_stiffness(self, lam, mu, elems=None):
        """Bilinear form lam div u div w + 2 mu eps(u):eps(w), interleaved dofs."""
        el, _, w, _, G = self.geometry(elems)
        GG = np.einsum("eq,eqia,eqjb->eiajb", w, G, G)  # int w G_i,a G_j,b
        lap = np.einsum("eiaja->eij", GG)
        E = len(el)
        K = np.zeros((E, 6, 2, 6, 2))
        # K[(i,d),(j,c)] = lam G_i,d G_j,c + mu delta_cd G_i.G_j + mu G_i,c G_j,d
        K += lam * GG
        K += mu * np.einsum("eicjd->eidjc", GG)
        for c in range(2):
            K[:, :, c, :, c] += mu * lap
        return self._scatter(el, K.reshape(E, 12, 12), 2)

    def vector_mass(self, elems=None):
        el, _, w, N, _ = self.geometry(elems)
        M = np.einsum("eq,qi,qj->eij", w, N, N)
        E = len(el)
        K = np.zeros((E, 6, 2, 6, 2))
        for c in range(2):
            K[:, :, c, :, c] = M
        return self._scatter(el, K.reshape(E, 12, 12), 2)

    # -- boundary segments -------------------------------------------------
    def segment_geometry(self, marker, rule=_EDGE_Q):
        """Nodes (S,3), points (S,Q,2), weights incl. |x'| (S,Q), normals, shape (Q,3)."""
        sel = self.mesh.segment_markers == marker
        sn = self.segment_nodes[sel]
        X = self.nodes[sn]  # (S, 3, 2)
        L, dL = edge_shape(rule.nodes)
        pts = np.einsum("sia,qi->sqa", X, L)
        tang = np.einsum("sia,qi->sqa", X, dL)
        jac = np.linalg.norm(tang, axis=2)
        normals = np.stack([tang[..., 1], -tang[..., 0]], axis=-1) / jac[..., None]
        return sn, pts, jac * rule.weights[None, :], normals, L

    def coupling(self, marker):
        """Matrix C[(i,c), j] = int_segments phi_j (phi_i e_c).nu ds (vector rows, scalar cols)."""
        sn, _, w, nrm, L = self.segment_geometry(marker)
        S = len(sn)
        loc = np.einsum("sq,qi,qj,sqc->sicj", w, L, L, nrm)  # (S, 3 vec-nodes, 2, 3 scalar nodes)
        rows = (2 * sn[:, :, None, None] + np.arange(2)[None, None, :, None])
        rows = np.broadcast_to(rows, (S, 3, 2, 3))
        cols = np.broadcast_to(sn[:, None, None, :], (S, 3, 2, 3))
        return sp.csr_matrix((loc.ravel(), (rows.ravel(), cols.ravel())),
                             shape=(2 * self.n_nodes, self.n_nodes))

    # -- interpolation / evaluation ---------------------------------------
    def interpolate(self, f, ncomp=1):
        vals = np.asarray(f(self.nodes))
        return vals.reshape(-1) if ncomp == 1 else vals.reshape(self.n_nodes, ncomp).reshape(-1)

    def locator(self, elems=None):
        return Locator(self, elems)


class Locator:
    """Point location and field evaluation restricted to a set of elements."""

    def __init__(self, space: P2Space, elems=None):
        self.space = space
        self.elems = np.arange(len(space.elements)) if elems is None else np.asarray(elems)
        V = space.mesh.vertices[space.mesh.triangles[self.elems]]
        self.V = V
        self.tree = cKDTree(V.mean(axis=1))
        self.k = min(16, len(self.elems))

    def locate(self, x):
        """Element index (into ``elems``) and reference coordinates; -1 if outside."""
        x = np.atleast_2d(np.asarray(x, float))
        _, cand = self.tree.query(x, k=self.k)
        cand = np.atleast_2d(cand)
        found = -np.ones(len(x), dtype=np.int64)
        ref = np.zeros((len(x), 2))
        for j in range(cand.shape[1]):
            todo = found < 0
            if not np.any(todo):
                break
            c = cand[todo, j]
            V = self.V[c]
            T = np.stack([V[:, 1] - V[:, 0], V[:, 2] - V[:, 0]], axis=2)
            rhs = x[todo] - V[:, 0]
            lam = np.linalg.solve(T, rhs[..., None])[..., 0]
            tol = 1e-10
            ok = (lam[:, 0] >= -tol) & (lam[:, 1] >= -tol) & (lam.sum(axis=1) <= 1 + tol)
            idx = np.flatnonzero(todo)[ok]
            found[idx] = c[ok]
            ref[idx] = lam[ok]
        # Newton correction for curved elements
        hit = found >= 0
        if np.any(hit):
            el = self.space.elements[self.elems[found[hit]]]
            X = self.space.nodes[el]
            r = ref[hit]
            for _ in range(4):
                N, dN = p2_shape(r[:, 0], r[:, 1])
                xm = np.einsum("pia,pi->pa", X, N)
                J = np.einsum("pia,pib->pab", X, dN)
                r = r - np.linalg.solve(J, (xm - x[hit])[..., None])[..., 0]
            ref[hit] = r
        return found, ref

    def evaluate(self, coef, x, ncomp=1, grad=False):
        """Values (P, ncomp) and optionally gradients (P, ncomp, 2); NaN outside."""
        x = np.atleast_2d(np.asarray(x, float))
        found, ref = self.locate(x)
        coef = np.asarray(coef)
        C = coef.reshape(self.space.n_nodes, ncomp)
        val = np.full((len(x), ncomp), np.nan, dtype=coef.dtype if np.iscomplexobj(coef) else float)
        gr = np.full((len(x), ncomp, 2), np.nan, dtype=val.dtype)
        hit = found >= 0
        if np.any(hit):
            el = self.space.elements[self.elems[found[hit]]]
            N, dN = p2_shape(ref[hit, 0], ref[hit, 1])
            val[hit] = np.einsum("pi,pic->pc", N, C[el])
            if grad:
                X = self.space.nodes[el]
                J = np.einsum("pia,pib->pab", X, dN)
                Jinv = np.linalg.inv(J)
                G = np.einsum("pib,pba->pia", dN, Jinv)
                gr[hit] = np.einsum("pia,pic->pca", G, C[el])
        return (val, gr) if grad else val
