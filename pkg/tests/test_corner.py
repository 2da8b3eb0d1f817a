import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from acoustoelastic.corner import (CornerDiagnostics, assemble_identity, bracket_direction, corner_diagnostics,
                                   diagnostics_from_values, exact_pair, is_conformal, limit_extraction,
                                   quadratic_form_test)
from acoustoelastic.geometry import CgoPair, Materials, SectorGeometry, admissible_direction

SYM = SectorGeometry(-math.pi / 4, math.pi / 4)
MAT = Materials(lam=2.0, mu=1.0, rho_e=1.0, rho_b=1.0, kappa=4.0)


def _zero_scalar(x):
    return np.zeros(len(x))


def _zero_vec(x):
    return np.zeros((len(x), 2))


def test_zero_fields_give_zero_identity():
    b = assemble_identity(_zero_scalar, _zero_vec, SYM, CgoPair(10.0, math.pi), MAT, 2.0)
    vals = [v for k, v in vars(b).items() if k != "s"]
    assert all(v == 0 for v in vals)


def test_identity_rejects_bad_input():
    with pytest.raises(ValueError):
        assemble_identity(_zero_scalar, _zero_vec, SYM, CgoPair(10.0, 0.0), MAT, 2.0)
    with pytest.raises(ValueError):
        assemble_identity(_zero_scalar, _zero_vec, SYM, CgoPair(10.0, math.pi), MAT, 0.0)
    with pytest.raises(ValueError):
        assemble_identity(lambda x: np.full(len(x), np.inf), _zero_vec, SYM, CgoPair(10.0, math.pi), MAT, 1.0)


def test_exact_pair_solves_the_transmission_system():
    sector, factory = exact_pair(MAT, 0.4)
    omega = 3.0
    v, gv, u, gu = factory(omega)
    rng = np.random.default_rng(0)
    # interface conditions on both rays: u.nu = grad v.nu / (rho_b omega^2), traction = -v nu
    for tau, nu in ((sector.tau_M, sector.nu_M), (sector.tau_m, sector.nu_m)):
        x = rng.uniform(0, 1, 8)[:, None] * tau
        G = gu(x)
        t = MAT.lam * (G[:, 0, 0] + G[:, 1, 1])[:, None] * nu + MAT.mu * (G + G.transpose(0, 2, 1)) @ nu
        np.testing.assert_allclose(t, -v(x)[:, None] * nu, atol=1e-12)
        np.testing.assert_allclose(u(x) @ nu, gv(x) @ nu / (MAT.rho_b * omega**2), atol=1e-12)
    with pytest.raises(ValueError):
        exact_pair(Materials(kappa=1.0))


@pytest.mark.parametrize("rotation", [0.0, 0.4, -1.2])
@pytest.mark.parametrize("s", [10.0, 20.0, 40.0])
def test_identity_vanishes_on_exact_pair(rotation, s):
    sector, factory = exact_pair(MAT, rotation)
    v, gv, u, gu = factory(3.0)
    pair = CgoPair.for_sector(sector, s)
    b = assemble_identity(v, u, sector, pair, MAT, 3.0, grad_v=gv, grad_u=gu)
    assert abs(b.total) < 1e-8
    assert abs(b.I2_plus) > 1e-6  # terms are individually nonzero
    assert b.i3_defect() < 1e-10


def test_identity_invariant_under_node_doubling():
    sector, factory = exact_pair(MAT, 0.2)
    v, gv, u, gu = factory(2.5)
    pair = CgoPair.for_sector(sector, 14.0)
    a = assemble_identity(v, u, sector, pair, MAT, 2.5, gv, gu, n0=16)
    b = assemble_identity(v, u, sector, pair, MAT, 2.5, gv, gu, n0=32)
    for k in ("I1_plus", "I2_minus", "I4", "I5", "I_arc1", "total"):
        assert abs(getattr(a, k) - getattr(b, k)) < 1e-10


def test_identity_nonzero_for_non_solution():
    v = lambda x: 1 + x[:, 0]  # noqa: E731
    u = lambda x: np.column_stack([x[:, 1], np.ones(len(x))])  # noqa: E731
    b = assemble_identity(v, u, SYM, CgoPair(10.0, math.pi), MAT, 2.0)
    assert abs(b.total) > 1e-6
    assert json.dumps(b.to_json())


@given(st.floats(5, 60))
def test_i3_equals_is_i2_for_smooth_fields(s):
    u = lambda x: np.column_stack([np.cos(2 * x[:, 0] + x[:, 1]), x[:, 0] ** 3])  # noqa: E731
    b = assemble_identity(_zero_scalar, u, SYM, CgoPair(s, math.pi), MAT, 1.0)
    assert b.i3_defect() <= 1e-10 * max(1.0, s * abs(b.I2_plus))


def _linear(G):
    G = np.asarray(G, float)
    return lambda x: x @ G.T


def test_limit_extraction_examples():
    for G, zero in ((np.eye(2), True), (np.diag([1.0, 2.0]), False), (np.array([[0.0, 1.0], [-1.0, 0.0]]), True)):
        le = limit_extraction(_linear(G), G, SYM, MAT)
        if zero:
            assert abs(le.direct) < 1e-14
            assert abs(le.limit_estimate) < 1e-10
        else:
            assert abs(le.direct) > 0.1
            assert le.relative_gap() < 1e-6  # linear field: no remainder beyond the exponential tail


def test_limit_extraction_smooth_field_routes_agree():
    u = lambda x: np.column_stack([np.sin(x[:, 0] + 2 * x[:, 1]), np.exp(x[:, 0]) * x[:, 1]])  # noqa: E731
    G = np.array([[1.0, 2.0], [0.0, 1.0]])
    le = limit_extraction(u, G, SYM, MAT)
    assert le.relative_gap() < 0.05


def test_quadratic_form_examples():
    assert quadratic_form_test(np.eye(2), SYM)[1]
    lhs, ok = quadratic_form_test(np.diag([1.0, 2.0]), SYM)
    assert not ok and abs(lhs) > 0.1
    assert quadratic_form_test([[0, 1], [-1, 0]], SYM)[1]
    with pytest.raises(ValueError):
        quadratic_form_test(np.eye(3), SYM)


def test_quadratic_form_brute_force_grid():
    vals = (-2, -1, 0, 1, 2)
    bad = 0
    for sector in (SYM, SectorGeometry(0.0, math.pi / 2), SectorGeometry(0.3, 2.9)):
        for a in itertools.product(vals, repeat=4):
            A = np.array(a, float).reshape(2, 2)
            bad += quadratic_form_test(A, sector)[1] != is_conformal(A)
    assert bad == 0


@given(st.lists(st.floats(-5, 5), min_size=4, max_size=4), st.floats(-3.0, 2.0), st.floats(0.1, 3.0))
def test_quadratic_form_zero_iff_conclusion(a, tm, op):
    A = np.array(a).reshape(2, 2)
    sector = SectorGeometry(tm, min(tm + op, 3.1))
    lhs, _ = quadratic_form_test(A, sector)
    # |lhs| = sin(opening) |[-i 1] A [-i 1]^T| and the latter is |(a22 - a11) - i (a12 + a21)|
    expect = math.sin(sector.opening) * math.hypot(a[3] - a[0], a[1] + a[2])
    assert abs(abs(lhs) - expect) <= 1e-12 * max(1.0, expect)


def test_bracket_direction_magnitude():
    phi, _ = admissible_direction(SYM)
    w = bracket_direction(SYM, phi)
    assert abs(np.linalg.norm(w) - math.sqrt(2) * math.sin(SYM.opening)) < 1e-14


def test_diagnostics_examples():
    mat = Materials(lam=0.5, mu=0.5)
    d = diagnostics_from_values(np.eye(2), -2.0, mat)
    assert d.scalar_defect == 0 and d.bc_defect == 0
    d = diagnostics_from_values([[0.0, 1.0], [0.0, 0.0]], 0.0, mat)
    np.testing.assert_allclose(d.strain, [[0, 0.5], [0.5, 0]])
    assert d.scalar_defect == pytest.approx(1 / math.sqrt(2))
    assert set(json.loads(d.dumps())) == {"grad_u", "strain", "v_corner", "scalar_defect", "bc_defect"}


@given(st.lists(st.floats(-3, 3), min_size=4, max_size=4))
def test_strain_is_exact_symmetric_part(a):
    d = diagnostics_from_values(np.array(a).reshape(2, 2), 0.0, MAT)
    assert np.array_equal(d.strain, 0.5 * (d.grad_u + d.grad_u.T))


def test_corner_diagnostics_least_squares():
    mat = Materials(lam=0.5, mu=0.5)
    corner = np.array([1.0, 1.0])

    def inside(x):
        return (x[:, 0] <= 1) & (x[:, 1] <= 1)

    u = lambda x: np.where(inside(x)[:, None], x - corner, np.nan)  # noqa: E731
    v = lambda x: np.where(inside(x), -2.0, np.nan)  # noqa: E731
    d = corner_diagnostics(v, u, corner, mat, 0.05)
    assert d.scalar_defect < 1e-12 and d.bc_defect < 1e-12
    assert d.n_samples < 6 * 64
    u2 = lambda x: np.where(inside(x)[:, None], np.column_stack([x[:, 1] - 1, 0 * x[:, 0]]), np.nan)  # noqa: E731
    d = corner_diagnostics(lambda x: np.where(inside(x), 0.0, np.nan), u2, corner, mat, 0.05)
    assert d.scalar_defect == pytest.approx(1 / math.sqrt(2), rel=1e-10)


def test_corner_diagnostics_needs_samples():
    with pytest.raises(ValueError):
        corner_diagnostics(lambda x: np.full(len(x), np.nan), _zero_vec, [0, 0], MAT, 0.1)


def test_corner_diagnostics_type():
    assert isinstance(diagnostics_from_values(np.zeros((2, 2)), 0.0, MAT), CornerDiagnostics)
