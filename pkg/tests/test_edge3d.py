import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from acoustoelastic import edge3d as E
from acoustoelastic.geometry import Materials
from acoustoelastic.numerics import fd_gradient, gauss_legendre

MAT = Materials(lam=2.0, mu=1.0, rho_e=1.0, rho_b=1.0, kappa=1.0, dim=3)
BUMP = E.BumpProfile(0.1, 0.4)
GRID = np.array([[a, c] for a in (0.1, 0.3, 0.5) for c in (-0.2, 0.2)])


def scalar(fn):
    return E.Field3(fn, 1)


def test_bump_normalization_and_support():
    r = gauss_legendre(400, *BUMP.support)
    assert abs(r.weights @ BUMP(r.nodes) - 1) < 1e-10
    assert abs(r.weights @ BUMP.derivative(r.nodes, 1)) < 1e-10
    assert abs(r.weights @ BUMP.derivative(r.nodes, 2)) < 1e-10
    assert BUMP(BUMP.support[0]) == 0 and BUMP(BUMP.support[1]) == 0
    assert np.all(BUMP(np.linspace(-1, 1, 101)) >= 0)
    with pytest.raises(ValueError):
        E.BumpProfile(0.0, 0.0)
    with pytest.raises(ValueError):
        BUMP.derivative(0.0, 3)


@given(st.floats(-0.49, 0.49))
def test_bump_derivatives_match_fd(x):
    h = 1e-5
    d1 = (BUMP(x + h) - BUMP(x - h)) / (2 * h)
    d2 = (BUMP.derivative(x + h, 1) - BUMP.derivative(x - h, 1)) / (2 * h)
    assert abs(BUMP.derivative(x, 1) - d1) < 1e-4 * (1 + abs(d1))
    assert abs(BUMP.derivative(x, 2) - d2) < 1e-3 * (1 + abs(d2))


def test_reduce_examples():
    one = scalar(lambda x: np.ones(len(x)))
    assert abs(E.reduce(one, BUMP)([[0.3, -0.2]])[0] - 1) < 1e-12
    x3 = scalar(lambda x: x[:, 2])
    assert abs(E.reduce(x3, BUMP)([[0.3, 0.2]])[0] - BUMP.center) < 1e-12
    g = scalar(lambda x: np.exp(x[:, 0]) * np.sin(x[:, 2]))
    r = gauss_legendre(400, *BUMP.support)
    moment = r.weights @ (BUMP(r.nodes) * np.sin(r.nodes))
    xp = np.array([[0.2, 0.1], [-0.4, 0.7]])
    np.testing.assert_allclose(E.reduce(g, BUMP)(xp), np.exp(xp[:, 0]) * moment, rtol=1e-12)


def test_reduce_preconditions():
    one = scalar(lambda x: np.ones(len(x)))
    with pytest.raises(ValueError):
        E.reduce(one, BUMP, n_quad=16)
    with pytest.raises(ValueError):
        E.reduce(E.Field3(one.fn, 1, half_height=0.4), BUMP)
    bad = scalar(lambda x: np.full(len(x), np.nan))
    with pytest.raises(ValueError):
        E.reduce(bad, BUMP)([[0.0, 0.0]])


@given(st.floats(-3, 3), st.floats(-3, 3))
def test_reduce_is_linear(a, b):
    f = scalar(lambda x: np.cos(x[:, 0] + 2 * x[:, 2]))
    g = scalar(lambda x: x[:, 1] * x[:, 2] ** 2)
    h = scalar(lambda x: a * f.fn(x) + b * g.fn(x))
    xp = np.array([[0.1, 0.4], [0.3, -0.2]])
    lhs = E.reduce(h, BUMP)(xp)
    rhs = a * E.reduce(f, BUMP)(xp) + b * E.reduce(g, BUMP)(xp)
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * (1 + abs(a) + abs(b))


def test_commutation_and_by_parts():
    g = scalar(lambda x: np.exp(x[:, 0]) * np.sin(x[:, 2]))
    d1 = lambda x: np.exp(x[:, 0]) * np.sin(x[:, 2])  # noqa: E731
    assert E.commutation_defect(g, BUMP, [0.2, 0.1], 0, grad=d1) < 1e-8
    assert E.commutation_defect(g, BUMP, [0.2, 0.1], 1) < 1e-8
    d3 = lambda x: np.exp(x[:, 0]) * np.cos(x[:, 2])  # noqa: E731
    assert E.by_parts_defect(g, d3, BUMP, [[0.2, 0.1], [0.5, -0.3]]) < 1e-10


def test_vector_field_reduction():
    u, gu = E.compressional_wave([0.3, 0.4, 0.8], 2.0, MAT)
    val = E.reduce(u, BUMP)(GRID)
    assert val.shape == (len(GRID), 3)


@pytest.mark.parametrize("d", [[1.0, 0.5, 0.0], [0.3, 0.4, 0.8], [0.0, 0.2, 1.0]])
def test_reduced_residuals(d):
    om = 2.0
    v = E.acoustic_wave(d, om, MAT)
    u, gu = E.compressional_wave(d, om, MAT)
    r = E.reduced_residual(u, gu, v, BUMP, MAT, om, GRID)
    assert r.max_relative() < 1e-5
    pol = [0.0, 0.0, 1.0] if d[2] == 0 else [1.0, 0.0, 0.0]
    u, gu = E.shear_wave(d, pol, om, MAT)
    r = E.reduced_residual(u, gu, v, BUMP, MAT, om, GRID)
    assert r.max_relative() < 1e-5
    assert set(json.loads(json.dumps(r.to_json()))["relative"]) == {"u12", "u3", "v"}


def test_residual_detects_wrong_frequency():
    d = [0.3, 0.4, 0.8]
    u, gu = E.compressional_wave(d, 2.0, MAT)
    v = E.acoustic_wave(d, 2.0, MAT)
    r = E.reduced_residual(u, gu, v, BUMP, MAT, 2.5, GRID)
    assert r.max_relative() > 1e-2


def test_plane_wave_gradients():
    for u, gu in (E.compressional_wave([1, 2, 2], 1.5, MAT), E.shear_wave([0, 1, 1], [1, 0, 0], 1.5, MAT)):
        x = np.array([0.1, -0.2, 0.3])
        G = gu(x[None, :])[0]
        for a in range(3):
            g = fd_gradient(lambda y, a=a: u(y[None, :])[0, a], x, 1e-6)
            np.testing.assert_allclose(G[a], g, atol=1e-8)


def test_edge_corner_hand_cases():
    lam, mu = MAT.lam, MAT.mu
    c = E.edge_corner_relations(np.diag([0.3, 0.3, 0.0]), -2 * (lam + mu) * 0.3, MAT).classify()
    assert c["a"] and c["b"] and c["b_hypothesis"] and not c["c"] and not c["d"]
    c = E.edge_corner_relations(np.zeros((3, 3)), 0.0, MAT).classify()
    assert all(c.values())
    A = np.zeros((3, 3))
    A[0, 1], A[1, 0] = 1.0, -1.0
    c = E.edge_corner_relations(A, 0.0, MAT).classify()
    assert c["a"] and not c["d"]
    rep = E.edge_corner_relations(A, 0.0, MAT)
    assert json.loads(rep.dumps())["classification"] == c
    with pytest.raises(ValueError):
        E.edge_corner_relations(np.eye(2), 0.0, MAT)


def _holder_seminorm(f, pts, alpha=0.5):
    g = np.array([fd_gradient(f, p, 1e-5) for p in pts])
    d = np.linalg.norm(pts[:, None] - pts[None], axis=2)
    dg = np.linalg.norm(g[:, None] - g[None], axis=2)
    off = d > 0
    return float(np.max(dg[off] / d[off] ** alpha))


def test_reduction_does_not_roughen_gradients():
    # heuristic: C^{1,1/2} input stays C^{1,1/2} with no larger seminorm
    fn = lambda x: np.abs(x[:, 0]) ** 1.5 * np.cos(x[:, 2])  # noqa: E731
    R = E.reduce(scalar(fn), BUMP)
    pts = np.column_stack([np.linspace(-0.3, 0.3, 13), np.zeros(13)])
    red = _holder_seminorm(lambda y: R(y[None, :])[0], pts)
    inp = max(_holder_seminorm(lambda y, z=z: fn(np.array([[y[0], y[1], z]]))[0], pts)
              for z in np.linspace(*BUMP.support, 9))
    assert red <= inp * (1 + 1e-6)
    assert math.isfinite(red)
