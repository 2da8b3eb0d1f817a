"""Triangle meshes for disks, convex polygons and disk-with-polygon scenes.

Point sets are placed by hand (rings for disks, boundary sampling plus
multi-level hexagonal lattices elsewhere) and connected with a Delaunay
triangulation; polygon edges missing from the triangulation are recovered by
bisection.  Corner grading uses target size ``clip(gamma * dist, h/2**L, h)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial import Delaunay, cKDTree

OUTER = 1
INTERFACE = 2


@dataclass
class Mesh:
    vertices: np.ndarray
    triangles: np.ndarray
    regions: np.ndarray
    segments: np.ndarray
    segment_markers: np.ndarray
    corners: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    circles: dict = field(default_factory=dict)
    h: float = float("nan")
    grading: dict = field(default_factory=dict)

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float)
        self.triangles = np.asarray(self.triangles, dtype=np.int64)
        self.regions = np.asarray(self.regions, dtype=np.int64)
        self.segments = np.asarray(self.segments, dtype=np.int64).reshape(-1, 2)
        self.segment_markers = np.asarray(self.segment_markers, dtype=np.int64)
        self.corners = np.asarray(self.corners, dtype=np.int64)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    def signed_areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        a = p[:, 1] - p[:, 0]
        b = p[:, 2] - p[:, 0]
        return 0.5 * (a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0])

    def segment_normals(self) -> np.ndarray:
        """Unit normals pointing to the right of each oriented segment."""
        d = self.vertices[self.segments[:, 1]] - self.vertices[self.segments[:, 0]]
        n = np.column_stack([d[:, 1], -d[:, 0]])
        return n / np.linalg.norm(n, axis=1)[:, None]

    def min_angle(self) -> float:
        p = self.vertices[self.triangles]
        angs = []
        for i in range(3):
            a = p[:, (i + 1) % 3] - p[:, i]
            b = p[:, (i + 2) % 3] - p[:, i]
            c = np.sum(a * b, axis=1) / (np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1))
            angs.append(np.arccos(np.clip(c, -1, 1)))
        return float(np.degrees(np.min(angs)))

    def element_diameters(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        return np.max([np.linalg.norm(p[:, i] - p[:, (i + 1) % 3], axis=1) for i in range(3)], axis=0)

    def check(self):
        if np.any(self.signed_areas() <= 0):
            raise ValueError("mesh has non-positive triangles")
        for marker in np.unique(self.segment_markers):
            seg = self.segments[self.segment_markers == marker]
            starts, ends = np.sort(seg[:, 0]), np.sort(seg[:, 1])
            if not np.array_equal(starts, ends):
                raise ValueError(f"segments with marker {marker} do not form closed loops")


# ---------------------------------------------------------------------------
# point placement helpers


def _corner_size(points, corners, h, levels, factor=0.5, gamma=0.5):
    h_min = h * factor**levels
    if len(corners) == 0:
        return np.full(len(points), h)
    d = cKDTree(corners).query(points)[0]
    return np.clip(gamma * d, h_min, h)


def _sample_segment(a, b, size_fn, include_end=False):
    """Points on [a, b] with spacing following ``size_fn`` (equidistribution)."""
    a, b = np.asarray(a, float), np.asarray(b, float)
    t = np.linspace(0.0, 1.0, 2001)
    pts = a[None] + t[:, None] * (b - a)[None]
    dens = np.linalg.norm(b - a) / size_fn(pts)
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(t))])
    n = max(1, int(math.ceil(cum[-1] - 1e-9)))
    tk = np.interp(np.linspace(0, cum[-1], n + 1), cum, t)
    if not include_end:
        tk = tk[:-1]
    return a[None] + tk[:, None] * (b - a)[None]


def _polygon_boundary(vertices, size_fn):
    """Closed polyline through the polygon's vertices, listing vertex indices."""
    pts, corner_idx = [], []
    nv = len(vertices)
    for i in range(nv):
        corner_idx.append(sum(len(p) for p in pts))
        pts.append(_sample_segment(vertices[i], vertices[(i + 1) % nv], size_fn))
    return np.vstack(pts), np.array(corner_idx)


def _seg_distance(points, polyline):
    """Distance from points to a closed polyline."""
    a = polyline
    b = np.roll(polyline, -1, axis=0)
    best = np.full(len(points), np.inf)
    for k in range(0, len(a), 256):
        aa, bb = a[k:k + 256], b[k:k + 256]
        ab = bb - aa
        ap = points[:, None, :] - aa[None]
        t = np.clip(np.sum(ap * ab[None], axis=2) / np.sum(ab * ab, axis=1)[None], 0, 1)
        d = np.linalg.norm(ap - t[..., None] * ab[None], axis=2)
        best = np.minimum(best, d.min(axis=1))
    return best


def points_in_polygon(points, poly) -> np.ndarray:
    """Even-odd rule point-in-polygon test (vectorized over points)."""
    x, y = points[:, 0], points[:, 1]
    inside = np.zeros(len(points), dtype=bool)
    n = len(poly)
    for i in range(n):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % n]
        cond = (y1 > y) != (y2 > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            xint = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
        inside ^= cond & (x < xint)
    return inside


def _hex_lattice(lo, hi, spacing):
    """Hexagonal lattice anchored at the origin, clipped to the box [lo, hi]."""
    dy = spacing * math.sqrt(3) / 2
    j = np.arange(math.floor(lo[1] / dy), math.ceil(hi[1] / dy) + 1)
    i = np.arange(math.floor(lo[0] / spacing) - 1, math.ceil(hi[0] / spacing) + 1)
    I, J = np.meshgrid(i, j)
    X = (I + 0.5 * (J % 2)) * spacing
    Y = J * dy
    return np.column_stack([X.ravel(), Y.ravel()])


def _interior_points(inside_fn, boundary_pts, dist_fn, size_fn, corners, h, levels, lo, hi):
    accepted = [boundary_pts]
    tree_pts = boundary_pts
    for lev in range(levels, -1, -1):
        hl = h * 0.5**lev
        if lev > 0 and len(corners):
            reach = 2.5 * hl / 0.5
            cand = np.vstack([_hex_lattice(c - reach, c + reach, hl) for c in corners])
        else:
            cand = _hex_lattice(lo, hi, hl)
        cand = cand[inside_fn(cand)]
        if len(cand) == 0:
            continue
        sz = size_fn(cand)
        lo_b = 0.0 if lev == levels else 0.75 * hl
        hi_b = np.inf if lev == 0 else 1.5 * hl
        cand = cand[(sz >= lo_b) & (sz < hi_b)]
        if len(cand) == 0:
            continue
        sz = size_fn(cand)
        cand = cand[dist_fn(cand) > 0.45 * sz]
        if len(cand) == 0:
            continue
        d = cKDTree(tree_pts).query(cand)[0]
        cand = cand[d > 0.6 * size_fn(cand)]
        cand = np.unique(np.round(cand, 13), axis=0)
        accepted.append(cand)
        tree_pts = np.vstack([tree_pts, cand])
    return np.vstack(accepted)


def _triangulate(points, loops, keep_fn=None, max_iter=30):
    """Delaunay triangulation with recovery of the closed boundary loops.

    ``loops`` is a list of index arrays into ``points`` (each a closed loop).
    Missing loop edges are bisected and the triangulation recomputed.
    """
    points = np.asarray(points, float)
    loops = [list(l) for l in loops]
    for _ in range(max_iter):
        tri = Delaunay(points, qhull_options="Qbb Qc Qz Q12")
        simp = tri.simplices
        p = points[simp]
        area = 0.5 * ((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
                      - (p[:, 1, 1] - p[:, 0, 1]) * (p[:, 2, 0] - p[:, 0, 0]))
        simp = simp[np.abs(area) > 1e-14 * np.max(np.abs(area))]
        edges = set()
        for a, b in ((0, 1), (1, 2), (2, 0)):
            e = np.sort(simp[:, [a, b]], axis=1)
            edges.update(map(tuple, e))
        new_points = []
        new_loops = []
        missing = False
        for loop in loops:
            nl = []
            for k, i in enumerate(loop):
                j = loop[(k + 1) % len(loop)]
                nl.append(i)
                if (min(i, j), max(i, j)) not in edges:
                    missing = True
                    mid = 0.5 * (points[i] + points[j])
                    new_points.append(mid)
                    nl.append(len(points) + len(new_points) - 1)
            new_loops.append(nl)
        if not missing:
            break
        points = np.vstack([points, np.array(new_points)])
        loops = new_loops
    else:
        raise RuntimeError("boundary recovery failed")
    p = points[simp]
    area = 0.5 * ((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
                  - (p[:, 1, 1] - p[:, 0, 1]) * (p[:, 2, 0] - p[:, 0, 0]))
    simp = np.where(area[:, None] > 0, simp, simp[:, [0, 2, 1]])
    if keep_fn is not None:
        simp = simp[keep_fn(points[simp].mean(axis=1))]
    # drop unreferenced points
    used = np.unique(simp)
    remap = -np.ones(len(points), dtype=np.int64)
    remap[used] = np.arange(len(used))
    loops = [remap[np.array(l)] for l in loops]
    return points[used], remap[simp], loops, remap


def _loop_segments(loop):
    loop = np.asarray(loop)
    return np.column_stack([loop, np.roll(loop, -1)])


# ---------------------------------------------------------------------------
# public constructors


def disk_mesh(radius: float = 1.0, h: float = 0.1, center=(0.0, 0.0)) -> Mesh:
    """Ring mesh of a disk: ring k at radius k*radius/n carries 6k points."""
    n = max(2, int(math.ceil(radius / h)))
    pts = [np.zeros((1, 2))]
    for k in range(1, n + 1):
        m = 6 * k
        t = 2 * math.pi * (np.arange(m) + 0.5 * (k % 2)) / m
        pts.append(k * radius / n * np.column_stack([np.cos(t), np.sin(t)]))
    pts = np.vstack(pts)
    m = 6 * n
    loop = np.arange(len(pts) - m, len(pts))
    pts, tris, loops, _ = _triangulate(pts, [loop])
    c = np.asarray(center, float)
    mesh = Mesh(pts + c, tris, np.zeros(len(tris)), _loop_segments(loops[0]),
                np.full(len(loops[0]), OUTER), circles={OUTER: (c, float(radius))}, h=radius / n)
    mesh.check()
    return mesh


def polygon_mesh(vertices, h: float, levels: int = 4, factor: float = 0.5) -> Mesh:
    """Mesh of a convex or simple polygon graded toward every vertex."""
    poly = np.asarray(vertices, float)
    if _signed_area(poly) < 0:
        poly = poly[::-1]

    def size_fn(x):
        return _corner_size(x, poly, h, levels, factor)

    bpts, cidx = _polygon_boundary(poly, size_fn)
    lo, hi = poly.min(axis=0), poly.max(axis=0)
    pts = _interior_points(lambda x: points_in_polygon(x, poly), bpts,
                           lambda x: _seg_distance(x, bpts), size_fn, poly, h, levels, lo, hi)
    loop = np.arange(len(bpts))
    pts, tris, loops, remap = _triangulate(pts, [loop], keep_fn=lambda c: points_in_polygon(c, poly))
    corners = remap[cidx]
    mesh = Mesh(pts, tris, np.zeros(len(tris)), _loop_segments(loops[0]),
                np.full(len(loops[0]), OUTER), corners=corners, h=h,
                grading={"levels": levels, "factor": factor})
    mesh.check()
    return mesh


def scattering_mesh(vertices, radius: float, h: float, levels: int = 4, factor: float = 0.5,
                    h_far: float | None = None) -> Mesh:
    """Mesh of the disk |x| < radius with the polygon as an interior interface.

    Region 1 is the polygon interior, region 0 the surrounding annulus.
    """
    poly = np.asarray(vertices, float)
    if _signed_area(poly) < 0:
        poly = poly[::-1]
    if np.max(np.linalg.norm(poly, axis=1)) >= radius:
        raise ValueError("polygon must lie strictly inside the artificial circle")
    h_far = h if h_far is None else h_far

    def size_fn(x):
        base = _corner_size(x, poly, h, levels, factor)
        d = _seg_distance(x, poly)
        return np.minimum(np.maximum(base, np.minimum(h_far, h + 0.3 * d)), h_far) if h_far > h else base

    bpts, cidx = _polygon_boundary(poly, size_fn)
    m = max(12, int(math.ceil(2 * math.pi * radius / h_far)))
    t = 2 * math.pi * np.arange(m) / m
    cpts = radius * np.column_stack([np.cos(t), np.sin(t)])
    allb = np.vstack([bpts, cpts])

    def dist_fn(x):
        return np.minimum(_seg_distance(x, bpts), radius - np.hypot(x[:, 0], x[:, 1]))

    lo, hi = -radius * np.ones(2), radius * np.ones(2)
    pts = _interior_points(lambda x: np.hypot(x[:, 0], x[:, 1]) < radius, allb, dist_fn, size_fn,
                           poly, h, levels, lo, hi)
    loop_poly = np.arange(len(bpts))
    loop_circ = np.arange(len(bpts), len(bpts) + m)
    pts, tris, loops, remap = _triangulate(pts, [loop_poly, loop_circ])
    regions = points_in_polygon(pts[tris].mean(axis=1), poly).astype(int)
    corners = remap[cidx]
    segs = np.vstack([_loop_segments(loops[1]), _loop_segments(loops[0])])
    marks = np.concatenate([np.full(len(loops[1]), OUTER), np.full(len(loops[0]), INTERFACE)])
    mesh = Mesh(pts, tris, regions, segs, marks, corners=corners,
                circles={OUTER: (np.zeros(2), float(radius))}, h=h,
                grading={"levels": levels, "factor": factor})
    mesh.check()
    return mesh


def _signed_area(poly):
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)


def regular_polygon(n: int, radius: float = 1.0, rotation: float = 0.0, center=(0.0, 0.0)):
    t = rotation + 2 * math.pi * np.arange(n) / n
    return np.asarray(center, float) + radius * np.column_stack([np.cos(t), np.sin(t)])


# ---------------------------------------------------------------------------
# text format


def write_mesh(mesh: Mesh, path):
    """Plain text: vertex count, vertices, triangle count, triangles, segments."""
    lines = [str(mesh.n_vertices)]
    lines += [f"{x:.17g} {y:.17g}" for x, y in mesh.vertices]
    lines.append(str(len(mesh.triangles)))
    lines += [f"{a} {b} {c} {r}" for (a, b, c), r in zip(mesh.triangles, mesh.regions)]
    lines.append(str(len(mesh.segments)))
    lines += [f"{a} {b} {m}" for (a, b), m in zip(mesh.segments, mesh.segment_markers)]
    lines.append(str(len(mesh.corners)))
    lines += [str(c) for c in mesh.corners]
    lines.append(str(len(mesh.circles)))
    lines += [f"{k} {c[0]:.17g} {c[1]:.17g} {r:.17g}" for k, (c, r) in mesh.circles.items()]
    lines.append(f"{mesh.h:.17g}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_mesh(path) -> Mesh:
    tok = Path(path).read_text().split("\n")
    it = iter([t for t in tok if t.strip()])

    def rows(k, conv):
        return [list(map(conv, next(it).split())) for _ in range(k)]

    nv = int(next(it))
    verts = np.array(rows(nv, float))
    nt = int(next(it))
    tr = np.array(rows(nt, int)).reshape(-1, 4)
    ns = int(next(it))
    sg = np.array(rows(ns, int)).reshape(-1, 3)
    nc = int(next(it))
    corners = np.array([int(next(it)) for _ in range(nc)], dtype=int)
    ncirc = int(next(it))
    circles = {}
    for _ in range(ncirc):
        k, cx, cy, r = next(it).split()
        circles[int(k)] = (np.array([float(cx), float(cy)]), float(r))
    h = float(next(it))
    mesh = Mesh(verts, tr[:, :3], tr[:, 3], sg[:, :2], sg[:, 2], corners=corners, circles=circles, h=h)
    mesh.check()
    return mesh
