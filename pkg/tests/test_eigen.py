import csv
import math

import numpy as np
import pytest

from acoustoelastic import eigen as E
from acoustoelastic import meshing
from acoustoelastic.geometry import Materials
from acoustoelastic.numerics import fd_gradient, gauss_legendre

MAT = Materials(lam=2.0, mu=1.0, rho_e=1.0, rho_b=1.0, kappa=1.0)
SQUARE = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


@pytest.fixture(scope="module")
def coarse_disk():
    return E.EigenSystem(meshing.disk_mesh(1.0, 1 / 8), MAT)


@pytest.fixture(scope="module")
def disk_roots():
    return E.disk_eigenvalues((2.0, 5.6), 1.0, MAT)


def test_assembly_depends_on_omega(coarse_disk):
    A1, A2 = coarse_disk.assemble(2.0), coarse_disk.assemble(3.0)
    assert abs(A1 - A2).max() > 0
    assert abs(A1 - A1.T).max() < 1e-12
    for bad in (0.0, -1.0):
        with pytest.raises(ValueError):
            coarse_disk.assemble(bad)


def test_scan_input_validation(coarse_disk):
    with pytest.raises(ValueError):
        E.scan(coarse_disk, (3.0, 2.0))
    with pytest.raises(ValueError):
        E.scan(coarse_disk, (2.0, 3.0), n_grid=8)


def test_scan_empty_below_first_eigenvalue():
    small = E.EigenSystem(meshing.disk_mesh(0.5, 1 / 8), MAT)
    assert E.disk_eigenvalues((0.2, 2.0), 0.5, MAT) == []
    assert E.scan(small, (0.2, 2.0), 24) == []


def test_sigma_min_is_continuous(coarse_disk):
    w = np.linspace(3.0, 3.2, 21)
    s = E.sigma_grid(coarse_disk, w)
    fine = E.sigma_grid(coarse_disk, w[:-1] + 0.005)
    # steps shrink with the grid spacing
    assert np.max(np.abs(np.diff(s))) < 0.05 * np.max(s)
    assert np.max(np.abs(fine - s[:-1])) < 0.6 * np.max(np.abs(np.diff(s))) + 1e-12


def test_dense_and_sparse_sigma_agree():
    s = E.EigenSystem(meshing.disk_mesh(1.0, 0.34), MAT)
    assert s.size <= E._DENSE_LIMIT
    dense = s.sigma_min(3.3)
    old = E._DENSE_LIMIT
    E._DENSE_LIMIT = 0
    try:
        sparse = s.sigma_min(3.3)
    finally:
        E._DENSE_LIMIT = old
    assert sparse == pytest.approx(dense, rel=1e-8)


def test_disk_oracle_mode_field_satisfies_interface_conditions(disk_roots):
    for root in disk_roots:
        u, v = E.disk_mode_field(root.n, root.omega, 1.0, MAT)
        t = np.linspace(0.1, 6.0, 7)
        for tt in t:
            nu = np.array([math.cos(tt), math.sin(tt)])
            x = 0.999999 * nu
            J = np.array([fd_gradient(lambda y, k=k: u(y[None, :])[0, k], x, 1e-6) for k in range(2)])
            gv = fd_gradient(lambda y: v(y[None, :])[0], x, 1e-6)
            tr = MAT.lam * np.trace(J) * nu + MAT.mu * (J + J.T) @ nu
            scale = np.max(np.abs(J)) + abs(v(x[None, :])[0])
            assert np.linalg.norm(tr + v(x[None, :])[0] * nu) < 1e-4 * scale
            assert abs(u(x[None, :])[0] @ nu - gv @ nu / (MAT.rho_b * root.omega**2)) < 1e-4 * scale


def test_disk_roots_multiplicity(disk_roots):
    assert [r.n for r in disk_roots] == [1, 2, 0]
    assert [r.multiplicity for r in disk_roots] == [2, 2, 1]
    for r in disk_roots:
        assert abs(E.disk_mode_det(r.n, r.omega, 1.0, MAT)) < 1e-10


def test_scan_grid_doubling_is_stable(coarse_disk):
    # the base grid must resolve the narrowest dip (n = 0 mode near 5.14)
    a = [c.omega for c in E.scan(coarse_disk, (2.5, 5.5), 80)]
    b = [c.omega for c in E.scan(coarse_disk, (2.5, 5.5), 160)]
    assert len(a) == len(b) == 3
    np.testing.assert_allclose(a, b, rtol=1e-5)


def test_refine_recovers_scan_candidates(coarse_disk):
    found = E.scan(coarse_disk, (2.5, 3.2), 24)
    assert len(found) == 1
    ref = E.refine(coarse_disk, [found[0].omega * (1 + 2e-4)], rel_halfwidth=1e-4)
    assert ref[0].omega == pytest.approx(found[0].omega, rel=2e-6)


def test_candidate_mesh_convergence_on_disk(disk_roots):
    w0 = disk_roots[0].omega
    oms = []
    for h in (1 / 4, 1 / 8, 1 / 16):
        s = E.EigenSystem(meshing.disk_mesh(1.0, h), MAT)
        oms.append(E.refine(s, [w0], rel_halfwidth=2e-2, rel_tol=1e-8)[0].omega)
    assert abs(oms[0] - oms[1]) > abs(oms[1] - oms[2])
    assert abs(oms[2] - w0) < abs(oms[0] - w0)


def test_eigenpair_normalization_and_scaling(coarse_disk):
    cand = E.scan(coarse_disk, (2.5, 3.2), 24)[0]
    p1 = E.eigenpair(cand, coarse_disk)
    scaled = E.EigenCandidate(cand.omega, cand.sigma_min, (2 - 3j) * cand.u_dof, (2 - 3j) * cand.v_dof,
                              cand.threshold)
    p2 = E.eigenpair(scaled, coarse_disk)
    pts = np.random.default_rng(0).uniform(-0.6, 0.6, (30, 2))
    np.testing.assert_allclose(p1.u(pts), p2.u(pts), atol=1e-12)
    np.testing.assert_allclose(p1.v(pts), p2.v(pts), atol=1e-12)
    # unit combined L2 norm
    V = coarse_disk.space
    U = cand.u_dof * p1.scale
    Vv = cand.v_dof * p1.scale
    n2 = np.real(np.vdot(U, coarse_disk.Me @ U) + np.vdot(Vv, coarse_disk.Ma @ Vv))
    assert n2 == pytest.approx(1.0, rel=1e-12)
    assert V.n_nodes * 3 == coarse_disk.size
    bad = E.EigenCandidate(cand.omega, 1.0, cand.u_dof, cand.v_dof, 0.5)
    with pytest.raises(ValueError):
        E.eigenpair(bad, coarse_disk)


def test_disk_eigenfunction_matches_analytic_mode(disk_roots):
    root = [r for r in disk_roots if r.n == 0][0]
    s = E.EigenSystem(meshing.disk_mesh(1.0, 1 / 64), MAT)
    sig, x = s.sigma_min(root.omega, vector=True)
    cand = E.EigenCandidate(root.omega, sig, *s.split(x))
    pair = E.eigenpair(cand, s, max_sigma=np.inf)
    ua, va = E.disk_mode_field(0, root.omega, 1.0, MAT)
    gr, gt = gauss_legendre(40, 0, 0.999), gauss_legendre(64, 0, 2 * math.pi)
    R, T = np.meshgrid(gr.nodes, gt.nodes, indexing="ij")
    W = np.outer(gr.weights * gr.nodes, gt.weights).ravel()[:, None]
    P = np.column_stack([(R * np.cos(T)).ravel(), (R * np.sin(T)).ravel()])
    F = np.concatenate([pair.u(P), pair.v(P)[:, None]], 1)
    G = np.concatenate([ua(P), va(P)[:, None]], 1)
    a = np.sum(W * np.conj(G) * F) / np.sum(W * np.abs(G) ** 2)
    err = math.sqrt(np.sum(W * np.abs(F - a * G) ** 2) / np.sum(W * np.abs(a * G) ** 2))
    assert err < 0.01


def test_corner_reports_and_control():
    s = E.EigenSystem(meshing.polygon_mesh(SQUARE, 1 / 8), MAT)
    corners, radii = E.corner_probes(s.mesh)
    assert len(corners) == 4 and np.all(radii > 0)
    cand = E.refine(s, [4.7114], rel_halfwidth=2e-3)[0]
    diags = E.corner_report(cand, s)
    assert len(diags) == 4 and cand.diagnostics is diags
    # diagnostics do not depend on the scale of the coefficient vector
    scaled = E.EigenCandidate(cand.omega, cand.sigma_min, -4j * cand.u_dof, -4j * cand.v_dof)
    again = E.corner_report(scaled, s)
    for a, b in zip(diags, again):
        assert a.scalar_defect == pytest.approx(b.scalar_defect, rel=1e-9)
        assert a.bc_defect == pytest.approx(b.bc_defect, rel=1e-9)
    ctrl = E.control_report(s, lambda x: np.column_stack([x[:, 0], x[:, 1]]), lambda x: np.full(len(x), -6.0))
    assert all(d.scalar_defect < 1e-10 and d.bc_defect < 1e-9 for d in ctrl)
    with pytest.raises(ValueError):
        E.corner_probes(meshing.disk_mesh(1.0, 0.5))


def test_scan_csv(tmp_path, coarse_disk):
    rec = []
    E.scan(coarse_disk, (2.5, 3.0), 16, record=rec)
    p = tmp_path / "scan.csv"
    E.write_scan_csv(rec, p)
    rows = list(csv.reader(open(p)))
    assert rows[0] == ["omega", "sigma_min"] and len(rows) == 17


def test_cluster():
    assert E.cluster([1.0, 1.0 + 1e-9, 2.0], 1e-6) == pytest.approx([1.0 + 5e-10, 2.0])
