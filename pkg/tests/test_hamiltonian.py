"""Energy terms, their gradients, momentum refresh, and the phase-space norm."""

import numpy as np

import polyhmc as ph

from test_barrier import central_diff, interior_points


def test_uniform_energy_at_box_center():
    # V = 0 and p = 0 leaves only the half log-determinant: log 8 at the center
    P = ph.make_preset("hypercube", 2, 0.5)
    V = ph.UniformTarget()
    z = ph.PhasePoint(np.zeros(2), np.zeros(2))
    np.testing.assert_allclose(ph.hamiltonian(V, P, z), np.log(8.0), rtol=1e-14)
    np.testing.assert_allclose(
        ph.effective_potential(V, P, np.zeros(2)), np.log(8.0), rtol=1e-14
    )
    assert ph.kinetic_energy(P, z) == 0.0


def test_gaussian_energy_with_unit_momentum():
    # g = 8 I, so e_1 contributes p' g^{-1} p / 2 = 1/16
    P = ph.make_preset("hypercube", 2, 0.5)
    V = ph.GaussianTarget(np.zeros(2))
    z = ph.PhasePoint(np.zeros(2), np.array([1.0, 0.0]))
    np.testing.assert_allclose(ph.kinetic_energy(P, z), 0.0625, rtol=1e-14)
    np.testing.assert_allclose(
        ph.hamiltonian(V, P, z), np.log(8.0) + 0.0625, rtol=1e-14
    )


def test_hamiltonian_splits_into_potential_and_kinetic():
    rng = np.random.default_rng(5)
    P = ph.make_preset("simplex", 3)
    V = ph.GaussianTarget(np.full(3, 0.2))
    for x in interior_points(P, 10, rng):
        z = ph.PhasePoint(x, rng.standard_normal(3))
        np.testing.assert_allclose(
            ph.hamiltonian(V, P, z),
            ph.effective_potential(V, P, x) + ph.kinetic_energy(P, z),
            rtol=1e-14,
        )


def test_grad_effective_potential_matches_fd():
    rng = np.random.default_rng(8)
    for kind in ("hypercube", "simplex"):
        P = (
            ph.make_preset("hypercube", 4, 0.5)
            if kind == "hypercube"
            else ph.make_preset("simplex", 4)
        )
        V = ph.GaussianTarget(np.zeros(4))
        for x in interior_points(P, 10, rng):
            fd = central_diff(lambda y: ph.effective_potential(V, P, y), x)
            np.testing.assert_allclose(
                ph.grad_effective_potential(V, P, x), fd, rtol=1e-5, atol=1e-6
            )


def test_kinetic_gradients_match_fd():
    rng = np.random.default_rng(13)
    P = ph.make_preset("hypercube", 3, 0.5)
    for x in interior_points(P, 10, rng):
        p = rng.standard_normal(3)
        z = ph.PhasePoint(x, p)
        fd_x = central_diff(lambda y: ph.kinetic_energy(P, ph.PhasePoint(y, p)), x)
        np.testing.assert_allclose(ph.grad_x_kinetic(P, z), fd_x, rtol=1e-5, atol=1e-7)
        fd_p = central_diff(lambda q: ph.kinetic_energy(P, ph.PhasePoint(x, q)), p)
        np.testing.assert_allclose(ph.grad_p_kinetic(P, z), fd_p, rtol=1e-6, atol=1e-9)
        # closed form: dp H2 = g^{-1} p
        ms = ph.metric_state(P, x)
        np.testing.assert_allclose(
            ph.grad_p_kinetic(P, z), np.linalg.solve(ms.g, p), rtol=1e-10
        )


def test_kinetic_momentum_parity():
    # H2 is even in p, so its x-gradient is too and its p-gradient is odd
    rng = np.random.default_rng(21)
    P = ph.make_preset("simplex", 3)
    for x in interior_points(P, 10, rng):
        p = rng.standard_normal(3)
        zp = ph.PhasePoint(x, p)
        zm = ph.PhasePoint(x, -p)
        assert ph.kinetic_energy(P, zp) == ph.kinetic_energy(P, zm)
        np.testing.assert_array_equal(ph.grad_x_kinetic(P, zp), ph.grad_x_kinetic(P, zm))
        np.testing.assert_allclose(
            ph.grad_p_kinetic(P, zp), -ph.grad_p_kinetic(P, zm), rtol=1e-14
        )


def test_sample_momentum_covariance():
    # draws at a fixed position must have second moment g(x)
    P = ph.make_preset("hypercube", 2, 0.5)
    x = np.array([0.15, -0.3])
    ms = ph.metric_state(P, x)
    rng = np.random.default_rng(42)
    draws = np.array([ph.sample_momentum(P, x, rng) for _ in range(20000)])
    cov = draws.T @ draws / len(draws)
    np.testing.assert_allclose(cov, ms.g, rtol=0.05, atol=0.05)


def test_sample_momentum_deterministic():
    P = ph.make_preset("hypercube", 3, 0.5)
    x = np.zeros(3)
    a = ph.sample_momentum(P, x, np.random.default_rng(7))
    b = ph.sample_momentum(P, x, np.random.default_rng(7))
    np.testing.assert_array_equal(a, b)


def test_refresh_momentum_limits():
    import pytest

    P = ph.make_preset("hypercube", 2, 0.5)
    x = np.zeros(2)
    p = np.array([0.3, -0.4])
    # beta = 0 would never refresh; the blend weight must stay in (0, 1]
    with pytest.raises(ValueError):
        ph.refresh_momentum(P, x, p, 0.0, np.random.default_rng(1))
    # beta = 1 ignores the incoming momentum entirely
    a = ph.refresh_momentum(P, x, p, 1.0, np.random.default_rng(2))
    b = ph.refresh_momentum(P, x, 100.0 * p, 1.0, np.random.default_rng(2))
    np.testing.assert_array_equal(a, b)


def test_refresh_momentum_blend():
    # beta = 0.5 must combine with sqrt(1/2) weights against a known draw
    P = ph.make_preset("hypercube", 2, 0.5)
    x = np.zeros(2)
    p = np.array([1.0, 2.0])
    ms = ph.metric_state(P, x)
    fresh = ms.chol @ np.random.default_rng(9).standard_normal(2)
    out = ph.refresh_momentum(P, x, p, 0.5, np.random.default_rng(9))
    np.testing.assert_allclose(out, np.sqrt(0.5) * p + np.sqrt(0.5) * fresh, rtol=1e-14)


def test_refresh_momentum_preserves_stationary_covariance():
    # iterate the refresh: the stationary law of p stays N(0, g(x))
    P = ph.make_preset("hypercube", 2, 0.5)
    x = np.array([0.1, 0.2])
    ms = ph.metric_state(P, x)
    rng = np.random.default_rng(77)
    p = ph.sample_momentum(P, x, rng)
    draws = np.empty((30000, 2))
    for i in range(len(draws)):
        p = ph.refresh_momentum(P, x, p, 0.5, rng)
        draws[i] = p
    cov = draws.T @ draws / len(draws)
    np.testing.assert_allclose(cov, ms.g, rtol=0.08, atol=0.08)


def test_phase_norm_basics():
    rng = np.random.default_rng(31)
    P = ph.make_preset("hypercube", 3, 0.5)
    for x in interior_points(P, 10, rng):
        assert ph.phase_norm(P, x, np.zeros(3), np.zeros(3)) == 0.0
        dx, dp = rng.standard_normal((2, 3))
        n1 = ph.phase_norm(P, x, dx, dp)
        assert n1 > 0
        # absolute homogeneity
        np.testing.assert_allclose(
            ph.phase_norm(P, x, 2.5 * dx, 2.5 * dp), 2.5 * n1, rtol=1e-12
        )
        # triangle inequality
        ex, ep = rng.standard_normal((2, 3))
        assert ph.phase_norm(P, x, dx + ex, dp + ep) <= n1 + ph.phase_norm(
            P, x, ex, ep
        ) + 1e-12
