import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from acoustoelastic.forward import (Disk, FarFieldPattern, IncidentWave, Polygon, PolygonSolver, ScatterScene,
                                    admissibility_check, decomposition_defect, energy_flux, equal_area_square,
                                    far_field, far_field_from_coefficients, far_field_from_samples,
                                    format_scene, gram_independence, identifiability_experiment, parse_scene,
                                    regular_polygon, solve_disk)
from acoustoelastic.geometry import Materials
from acoustoelastic.numerics import fd_hessian

MAT = Materials(lam=2.0, mu=1.0, rho_e=1.0, rho_b=1.0, kappa=1.0)


def disk_scene(ks_radius, angle=0.0, kind="compressional", radius=1.0, center=(0.0, 0.0)):
    om = ks_radius / radius * math.sqrt(MAT.mu / MAT.rho_e)
    inc = (IncidentWave.compressional if kind == "compressional" else IncidentWave.shear)(om, angle)
    return ScatterScene(Disk(center, radius), MAT, inc)


def test_incident_wave_validation():
    with pytest.raises(ValueError):
        IncidentWave(1.0, 0.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        IncidentWave(0.0)
    with pytest.raises(ValueError):
        IncidentWave(1.0, kind="torsional")


@pytest.mark.parametrize("inc", [IncidentWave.compressional(2.0, 0.3), IncidentWave.shear(1.5, 2.0),
                                 IncidentWave(1.2, -0.7, 0.5, 1j, "combination")])
def test_incident_wave_solves_navier(inc):
    x = np.array([0.3, -0.4])
    lap = np.zeros(2, complex)
    gdiv = np.zeros(2, complex)
    H = fd_hessian(lambda y: inc.displacement(y[None, :], MAT)[0], x, 1e-3)  # (2, 2, 2)
    lap = H[:, 0, 0] + H[:, 1, 1]
    gdiv = np.array([H[0, 0, 0] + H[1, 1, 0], H[0, 0, 1] + H[1, 1, 1]])
    u = inc.displacement(x[None, :], MAT)[0]
    res = MAT.mu * lap + (MAT.lam + MAT.mu) * gdiv + inc.omega**2 * MAT.rho_e * u
    assert np.max(np.abs(res)) < 1e-6 * max(1.0, inc.omega**2)


def test_incident_gradient_matches_fd():
    inc = IncidentWave(1.7, 0.9, 1.0, 0.4, "combination")
    x = np.array([[0.2, 0.1]])
    G = inc.gradient(x, MAT)[0]
    e = 1e-6
    for b in range(2):
        dx = np.zeros((1, 2))
        dx[0, b] = e
        col = (inc.displacement(x + dx, MAT) - inc.displacement(x - dx, MAT))[0] / (2 * e)
        np.testing.assert_allclose(G[:, b], col, atol=1e-8)


def test_polygon_validation():
    with pytest.raises(ValueError):
        Polygon(((0, 0), (1, 0)))
    with pytest.raises(ValueError):
        Polygon(((0, 0), (0, 1), (1, 0)))  # clockwise
    with pytest.raises(ValueError):
        Polygon(((0, 0), (1, 1), (1, 0), (0, 1)))  # bow tie
    assert Polygon(((0, 0), (1, 0), (0, 1))).convex
    assert not Polygon(((0, 0), (2, 0), (1, 0.5), (2, 2), (0, 2))).convex
    sq = equal_area_square(2.0)
    assert sq.area == pytest.approx(2.0)


@pytest.mark.parametrize("ks_radius", [0.5, 1.0, 2.0, 4.0])
def test_disk_transmission_residuals(ks_radius):
    for kind in ("compressional", "shear"):
        f = solve_disk(disk_scene(ks_radius, 0.4, kind))
        assert f.residual["normal"] < 1e-8 and f.residual["traction"] < 1e-8


def test_disk_interior_field_solves_helmholtz():
    f = solve_disk(disk_scene(1.5))
    om = f.scene.incident.omega
    ka = MAT.ka(om)
    x = np.array([0.2, -0.3])
    H = fd_hessian(lambda y: f.v(y[None, :])[0], x, 1e-3)
    v0 = f.v(x[None, :])[0]
    assert abs(H[0, 0] + H[1, 1] + ka**2 * v0) < 1e-5 * ka**2 * abs(v0)


def _static_limit_ratio(r, a=1.0):
    """|u^s| / |u^i| per unit k_s a at (r, 0) from the quasi-static inclusion problem.

    Incident compressional wave along e1 gives remote strain eps0 = k_p e1 e1^T.
    The isotropic half sees a fluid of areal bulk modulus kappa; the deviatoric
    half sees a traction-free hole (Kirsch, plane strain).
    """
    lam, mu, kappa = MAT.lam, MAT.mu, MAT.kappa
    A = (lam + mu - kappa) / (2 * (kappa + mu))  # dilatational coefficient per eps0
    kol = 3 - 4 * lam / (2 * (lam + mu))  # Kolosov constant
    dev = 0.5 * ((kol + 1) * a * a / r - a**4 / r**3)
    kp_over_ks = math.sqrt(MAT.mu / (MAT.lam + 2 * MAT.mu))
    return (A * a * a / r + dev) * kp_over_ks


def test_disk_low_frequency_matches_static_limit():
    f = solve_disk(disk_scene(0.01))
    x = np.array([[2.0, 0.0]])
    ratio = np.max(np.abs(f.u_scattered(x))) / np.max(np.abs(f.u_incident(x)))
    assert ratio == pytest.approx(_static_limit_ratio(2.0) * 0.01, rel=1e-2)
    t = np.linspace(0, 2 * math.pi, 64, endpoint=False)
    ring = 2.0 * np.column_stack([np.cos(t), np.sin(t)])
    # scattering is first order in frequency: smallness is k_s a times an O(1) constant
    small = solve_disk(disk_scene(1e-3))
    assert np.max(np.abs(small.u_scattered(ring))) <= 1e-3 * np.max(np.abs(small.u_incident(ring)))


def test_disk_truncation_convergence():
    sc = disk_scene(2.0, 0.7)
    a = far_field(solve_disk(sc))
    b = far_field(solve_disk(sc, n_trunc=26))
    assert a.distance(b) < 1e-10
    with pytest.raises(ValueError):
        solve_disk(sc, n_trunc=5)


def test_far_field_radius_independence():
    f = solve_disk(disk_scene(2.0, 0.3))
    om = f.scene.incident.omega
    n = int(f.ns.max())
    a = far_field_from_samples(f.u_scattered, 1.5, MAT, om, n)
    b = far_field_from_samples(f.u_scattered, 3.0, MAT, om, n)
    ref = far_field(f)
    assert a.distance(b) < 1e-8 * ref.l2_norm() + 1e-12
    assert a.distance(ref) < 1e-8 * ref.l2_norm() + 1e-12


def test_far_field_matches_large_radius_asymptotics():
    f = solve_disk(disk_scene(1.0))
    ff = far_field(f, 16)
    kp, ks = MAT.kp(f.scene.incident.omega), MAT.ks(f.scene.incident.omega)
    r = 4000.0
    x = r * ff.directions
    u = f.u_scattered(x)
    xp = np.column_stack([-ff.directions[:, 1], ff.directions[:, 0]])
    approx = (np.exp(1j * kp * r) * ff.u_p[:, None] * ff.directions
              + np.exp(1j * ks * r) * ff.u_s[:, None] * xp) / math.sqrt(r)
    assert np.max(np.abs(u - approx)) < 5e-3 * np.max(np.abs(approx))


def test_off_center_disk_translation():
    base = solve_disk(disk_scene(1.0, 0.5))
    moved = solve_disk(disk_scene(1.0, 0.5, center=(0.3, -0.2)))
    assert moved.residual["normal"] < 1e-8
    om = base.scene.incident.omega
    a = far_field_from_samples(moved.u_scattered, 3.0, MAT, om, 24)
    assert a.distance(far_field(moved)) < 1e-8 * a.l2_norm()


def test_zero_and_single_mode_patterns():
    ns = np.arange(-3, 4)
    z = np.zeros(len(ns), complex)
    th, up, us = far_field_from_coefficients(ns, z, z, 1.0, 2.0, 32)
    assert np.all(up == 0) and np.all(us == 0)
    a = z.copy()
    a[3] = 1.0
    th, up, us = far_field_from_coefficients(ns, a, z, 1.0, 2.0, 32)
    assert np.all(us == 0)
    assert np.ptp(np.abs(up)) < 1e-15 and np.ptp(up.real) < 1e-15 and abs(up[0]) > 0


@given(st.floats(0, 2 * math.pi))
def test_far_field_directions_unit(shift):
    th = np.linspace(0, 2 * math.pi, 17)[:-1] + shift
    ff = FarFieldPattern(th, np.ones(16, complex), np.zeros(16, complex))
    assert np.max(np.abs(np.linalg.norm(ff.directions, axis=1) - 1)) < 1e-14
    assert ff.combined().shape == (16, 2)


def test_decomposition_and_flux():
    f = solve_disk(disk_scene(1.5))
    assert decomposition_defect(f, 2.0) < 1e-6
    flux = energy_flux(f, 3.0)
    assert flux["relative"] < 1e-3


def test_admissibility_examples():
    inc = IncidentWave.compressional(2.0, 0.0)
    f = solve_disk(ScatterScene(Disk((0, 0), 1e-3), MAT, inc))
    pts = np.random.default_rng(0).uniform(1, 3, size=(50, 2))
    # drop the scattered part: a tiny disk only perturbs the plane wave
    f.grad_u_scattered = lambda x: np.zeros((len(x), 2, 2), complex)
    rep = admissibility_check(f, pts)
    assert rep["admissible_a"] and rep["min_strain_defect"] == pytest.approx(MAT.kp(2.0), rel=1e-12)
    f.grad_u_total = lambda x: np.zeros((len(x), 2, 2), complex)
    rep = admissibility_check(f, pts)
    assert not rep["admissible_a"] and not rep["admissible_b"]
    g = solve_disk(disk_scene(0.2))
    r = np.random.default_rng(1).uniform(2, 3, 100)
    t = np.random.default_rng(2).uniform(0, 2 * math.pi, 100)
    rep = admissibility_check(g, np.column_stack([r * np.cos(t), r * np.sin(t)]))
    assert rep["admissible_b"]


def test_gram_independence():
    pts = np.random.default_rng(3).uniform(1.5, 3.0, size=(200, 2))
    fs = [solve_disk(disk_scene(1.0, a)) for a in (0.0, 2.0, 4.0)]
    one = gram_independence(fs[:1], pts)
    assert one["lambda_min"] == pytest.approx(np.sum(np.abs(fs[0].u_total(pts)) ** 2))
    assert gram_independence(fs, pts)["ratio"] > 1e-10
    with pytest.raises(ValueError):
        gram_independence([fs[0], fs[0]], pts)


def test_scene_round_trip_and_errors():
    sc = disk_scene(1.0, 0.2)
    back = parse_scene(format_scene(sc))
    assert back == sc
    tri = ScatterScene(Polygon(((0, 0), (1, 0), (0, 1))), MAT, IncidentWave.shear(1.0, 0.1))
    assert parse_scene(format_scene(tri)) == tri
    with pytest.raises(ValueError, match="line 2"):
        parse_scene("incident.omega = 1\nmaterial.bogus = 3\n")
    with pytest.raises(ValueError, match="line 1"):
        parse_scene("incident.omega\n")
    with pytest.raises(ValueError):
        parse_scene("material.mu = 1\n")
    with pytest.raises(ValueError):
        parse_scene("incident.omega = 1\ninclusion.type = ellipse\n")
    sc = parse_scene("incident.omega = 1\ninclusion.type = regular_polygon\ninclusion.sides = 5\n")
    assert len(sc.inclusion.vertices) == 5


def test_polygon_solver_rejects_low_dtn_order():
    with pytest.raises(ValueError):
        PolygonSolver(regular_polygon(3, 0.5), MAT, 1.0, n_dtn=0)


@pytest.mark.slow
def test_polygon_converges_to_disk_with_vertex_count():
    om = 1.0
    ref = far_field(solve_disk(ScatterScene(Disk((0, 0), 1.0), MAT, IncidentWave.compressional(om, 0.3))))
    errs = []
    for n in (16, 32, 64):
        solver = PolygonSolver(regular_polygon(n, 1.0), MAT, om)
        ff = far_field(solver.solve(IncidentWave.compressional(om, 0.3)))
        errs.append(np.max(np.abs(ff.combined() - ref.combined())) / np.max(np.abs(ref.combined())))
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 0.02


def test_identical_scene_mismatch_zero():
    tri = regular_polygon(3, 0.5)
    res = identifiability_experiment(tri, tri, MAT, 2.0, [0.0, 2.0, 4.0], solver_kw={"h": 0.15})
    assert res["mismatch"] < 1e-10
    with pytest.raises(ValueError):
        identifiability_experiment(tri, tri, MAT, 2.0, [0.0, 0.0, 4.0])


def test_polygon_mesh_self_convergence():
    tri = regular_polygon(3, 0.5)
    om = 1.0 / tri.diameter
    inc = IncidentWave.compressional(om, 0.3)
    ffs = [far_field(PolygonSolver(tri, MAT, om, h=h).solve(inc)) for h in (0.1, 0.05, 0.025)]
    d1, d2 = ffs[0].distance(ffs[1]), ffs[1].distance(ffs[2])
    assert d1 / d2 >= 2.0
    assert ffs[2].l2_norm() > 0


def test_polygon_solution_residuals():
    sq = equal_area_square(0.5)
    om = 1.0 / sq.diameter
    res = [PolygonSolver(sq, MAT, om, h=h).solve(IncidentWave.shear(om, 1.0)).residual for h in (0.1, 0.05)]
    for r in res:
        assert r["linear_system"] < 1e-10
        assert math.isfinite(r["condition_estimate"]) and r["condition_estimate"] > 1
        assert math.isfinite(r["traction"])  # corner-dominated, reported only
    assert res[0]["normal"] / res[1]["normal"] > 1.8
