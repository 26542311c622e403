"""Polytope construction, slacks, and the log-barrier metric quantities."""

import json

import numpy as np
import pytest

import polyhmc as ph
from polyhmc import barrier


def central_diff(f, x, eps=1e-6):
    """Componentwise central difference of a scalar function."""
    g = np.empty_like(x)
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = eps
        g[j] = (f(x + e) - f(x - e)) / (2 * eps)
    return g


def interior_points(P, n, rng, shrink=0.7):
    """Random strictly interior points: center plus a damped Dikin step."""
    pts = []
    c = P.center if P.center is not None else barrier.analytic_center(P)
    ms = ph.metric_state(P, c)
    while len(pts) < n:
        z = rng.standard_normal(P.d)
        u = np.linalg.solve(ms.chol.T, z)  # unit metric norm after scaling
        x = c + shrink * rng.random() * u / max(np.sqrt(z @ z), 1e-12)
        if np.all(ph.slack(P, x) > 1e-10):
            pts.append(x)
    return pts


def test_hypercube_preset():
    P = ph.make_preset("hypercube", 3, 0.5)
    assert P.d == 3 and P.m == 6
    np.testing.assert_allclose(P.center, 0.0)
    np.testing.assert_allclose(ph.slack(P, np.zeros(3)), 0.5)
    # one constraint per facet: +/- e_i each bounded by the half width
    x = np.array([0.2, -0.1, 0.0])
    s = ph.slack(P, x)
    assert s.shape == (6,)
    assert np.isclose(s.min(), 0.3) and np.isclose(s.max(), 0.7)


def test_simplex_preset_slack_example():
    P = ph.make_preset("simplex", 2)
    np.testing.assert_allclose(
        ph.slack(P, np.array([0.25, 0.25])), [0.25, 0.25, 0.5]
    )
    assert P.m == 3


def test_polytope_validation():
    with pytest.raises(ValueError):
        ph.Polytope(np.ones((3, 2)), np.ones(2))  # b length mismatch
    with pytest.raises(ValueError):
        ph.Polytope(np.ones((2, 2)), np.array([1.0, np.nan]))


def test_metric_at_box_center():
    # half width 0.5: each facet contributes 1/0.25 = 4, two facets per axis
    P = ph.make_preset("hypercube", 2, 0.5)
    ms = ph.metric_state(P, np.zeros(2))
    np.testing.assert_allclose(ms.g, 8.0 * np.eye(2), rtol=1e-14)
    np.testing.assert_allclose(ms.logdet, 2 * np.log(8.0), rtol=1e-14)
    np.testing.assert_allclose(ms.chol @ ms.chol.T, ms.g, rtol=1e-12)
    # gradient of log det vanishes at the symmetry point
    np.testing.assert_allclose(ph.grad_log_det(P, np.zeros(2)), 0.0, atol=1e-13)


def test_one_dimensional_halfline():
    # single constraint x < 0; at x = -1 the slack is 1
    P = ph.Polytope(np.array([[1.0]]), np.array([0.0]))
    x = np.array([-1.0])
    ms = ph.metric_state(P, x)
    np.testing.assert_allclose(ms.g, [[1.0]])
    e = np.array([1.0])
    np.testing.assert_allclose(ph.metric_directional_deriv(P, x, e, e), [2.0])
    np.testing.assert_allclose(ph.grad_log_det(P, x), [2.0])


def test_metric_state_rejects_infeasible():
    P = ph.make_preset("hypercube", 2, 0.5)
    with pytest.raises(ph.Infeasible):
        ph.metric_state(P, np.array([0.5, 0.0]))  # on the boundary
    with pytest.raises(ph.Infeasible):
        ph.metric_state(P, np.array([2.0, 0.0]))


def test_rank_deficient_a_rejected():
    # constraints only restrict x_0, so the metric would be singular
    with pytest.raises(ValueError):
        ph.Polytope(np.array([[1.0, 0.0], [-1.0, 0.0]]), np.array([1.0, 1.0]))


def test_cholesky_failure_on_overflowing_metric():
    # slacks of 1e-160 square to an overflow, so factoring g must fail loudly
    Q = ph.Polytope(np.array([[1.0], [-1.0]]), np.array([1e-160, 1e-160]))
    assert np.all(ph.slack(Q, np.zeros(1)) > 0)
    with pytest.raises((ph.CholeskyFailure, ph.Infeasible)):
        ph.metric_state(Q, np.zeros(1))


def test_barrier_value_and_gradient():
    P = ph.make_preset("hypercube", 2, 0.5)
    x = np.array([0.1, -0.2])
    s = ph.slack(P, x)
    np.testing.assert_allclose(ph.barrier_value(P, x), -np.sum(np.log(s)), rtol=1e-14)
    rng = np.random.default_rng(3)
    for x in interior_points(P, 20, rng):
        fd = central_diff(lambda y: ph.barrier_value(P, y), x)
        np.testing.assert_allclose(ph.barrier_gradient(P, x), fd, rtol=1e-5, atol=1e-7)


def test_metric_is_barrier_hessian():
    rng = np.random.default_rng(11)
    for kind in ("hypercube", "simplex"):
        P = ph.make_preset(kind, 3, 0.5) if kind == "hypercube" else ph.make_preset(kind, 3)
        for x in interior_points(P, 10, rng):
            fd = np.column_stack(
                [
                    central_diff(lambda y, j=j: ph.barrier_gradient(P, y)[j], x)
                    for j in range(P.d)
                ]
            )
            np.testing.assert_allclose(ph.metric_state(P, x).g, fd, rtol=2e-5, atol=1e-6)


def test_metric_directional_deriv_matches_fd():
    rng = np.random.default_rng(7)
    P = ph.make_preset("simplex", 3)
    eps = 1e-6
    for x in interior_points(P, 15, rng):
        u = rng.standard_normal(3)
        v = rng.standard_normal(3)
        gp = ph.metric_state(P, x + eps * v).g
        gm = ph.metric_state(P, x - eps * v).g
        np.testing.assert_allclose(
            ph.metric_directional_deriv(P, x, u, v),
            (gp - gm) @ u / (2 * eps),
            rtol=5e-5,
            atol=1e-6,
        )


def test_metric_directional_deriv_bilinear_symmetric():
    rng = np.random.default_rng(19)
    P = ph.make_preset("hypercube", 4, 0.5)
    for x in interior_points(P, 10, rng):
        u, v, w = rng.standard_normal((3, 4))
        a, b = rng.standard_normal(2)
        np.testing.assert_allclose(
            ph.metric_directional_deriv(P, x, a * u + b * w, v),
            a * ph.metric_directional_deriv(P, x, u, v)
            + b * ph.metric_directional_deriv(P, x, w, v),
            rtol=1e-12,
            atol=1e-12,
        )
        np.testing.assert_allclose(
            ph.metric_directional_deriv(P, x, u, v),
            ph.metric_directional_deriv(P, x, v, u),
            rtol=1e-12,
            atol=1e-12,
        )


def test_grad_log_det_matches_fd():
    rng = np.random.default_rng(23)
    for kind, d in (("hypercube", 4), ("simplex", 4)):
        P = ph.make_preset(kind, d, 0.5) if kind == "hypercube" else ph.make_preset(kind, d)
        for x in interior_points(P, 10, rng):
            fd = central_diff(lambda y: ph.metric_state(P, y).logdet, x)
            np.testing.assert_allclose(ph.grad_log_det(P, x), fd, rtol=1e-5, atol=1e-6)


def test_load_polytope_roundtrip(tmp_path):
    P = ph.make_preset("hypercube", 3, 0.5)
    path = tmp_path / "poly.json"
    path.write_text(
        json.dumps({"d": 3, "m": 6, "A": P.A.tolist(), "b": P.b.tolist()})
    )
    Q = ph.load_polytope(str(path))
    np.testing.assert_array_equal(Q.A, P.A)
    np.testing.assert_array_equal(Q.b, P.b)
    assert Q.d == 3 and Q.m == 6


def test_load_polytope_rejects_bad_payload(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"A": [[1.0, 0.0]]}))
    with pytest.raises((ValueError, KeyError)):
        ph.load_polytope(str(path))


def test_chebyshev_center():
    P = ph.make_preset("hypercube", 3, 0.5)
    np.testing.assert_allclose(ph.chebyshev_center(P), 0.0, atol=1e-9)
    # interval [0, 1]: deepest point is the midpoint
    Q = ph.Polytope(np.array([[1.0], [-1.0]]), np.array([1.0, 0.0]))
    np.testing.assert_allclose(ph.chebyshev_center(Q), [0.5], atol=1e-9)


def test_analytic_center_stationarity():
    A = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0], [1.0, 1.0]])
    b = np.array([1.0, 0.0, 1.0, 0.0, 1.5])
    Q = ph.Polytope(A, b)
    c = ph.analytic_center(Q)
    assert np.all(ph.slack(Q, c) > 0)
    np.testing.assert_allclose(ph.barrier_gradient(Q, c), 0.0, atol=1e-8)
