"""The split Hamiltonian on phase space and its exact partial derivatives.

With metric g(x) the Hamiltonian is

    H(x, p) = V(x) + ½ log det g(x) + ½ pᵀ g(x)⁻¹ p

split as H1(x) = V + ½ log det g (the effective potential, momentum-free)
and H2(x, p) = ½ ‖p‖²_{g⁻¹} (the kinetic term).  Exact derivatives:

    ∂x H1 = ∇V + ½ ∇ log det g
    ∂x H2 = -½ Dg(x)[g⁻¹p, g⁻¹p]        ∂p H2 = g⁻¹ p

Momenta are Gaussian with covariance g(x); sampling goes through the
Cholesky factor (any orthogonally-equivalent factor would give the same
law).  Inverse-metric products are computed by two triangular solves, never
by forming g⁻¹.
"""

from dataclasses import dataclass

import numpy as np

from . import barrier, linalg


@dataclass(frozen=True)
class PhasePoint:
    """A state (x, p); x must be strictly feasible for the polytope in play."""

    x: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", np.ascontiguousarray(self.x, dtype=np.float64))
        object.__setattr__(self, "p", np.ascontiguousarray(self.p, dtype=np.float64))


def _ms(P, x):
    return x if isinstance(x, barrier.MetricState) else barrier.metric_state(P, x)


def effective_potential(V, P, x):
    """H1(x) = V(x) + ½ log det g(x)."""
    ms = _ms(P, x)
    return float(V.value(ms.x)) + 0.5 * ms.logdet


def grad_effective_potential(V, P, x):
    """∂x H1 = ∇V(x) + ½ ∇ log det g(x)."""
    ms = _ms(P, x)
    return V.gradient(ms.x) + 0.5 * barrier.grad_log_det(P, ms)


def kinetic_energy(P, z):
    """H2(z) = ½ pᵀ g(x)⁻¹ p."""
    ms = _ms(P, z.x)
    return 0.5 * float(linalg.quad_inv(ms.chol, z.p))


def grad_x_kinetic(P, z):
    """∂x H2 = -½ Dg(x)[u, u] with u = g⁻¹ p."""
    ms = _ms(P, z.x)
    u = linalg.solve_spd(ms.chol, z.p)
    return -0.5 * barrier.metric_directional_deriv(P, ms, u, u)


def grad_p_kinetic(P, z):
    """∂p H2 = g⁻¹ p, via two triangular solves."""
    ms = _ms(P, z.x)
    return linalg.solve_spd(ms.chol, z.p)


def hamiltonian(V, P, z):
    """H(z) = V + ½ log det g + ½ ‖p‖²_{g⁻¹}."""
    ms = _ms(P, z.x)
    return (
        float(V.value(ms.x))
        + 0.5 * ms.logdet
        + 0.5 * float(linalg.quad_inv(ms.chol, z.p))
    )


def phase_norm(P, x_anchor, dx, dp):
    """‖(dx, dp)‖_z = ‖dx‖_{g(x)} + ‖dp‖_{g(x)⁻¹} anchored at x_anchor."""
    ms = _ms(P, x_anchor)
    nv, np_ = barrier.local_norms(ms, dx, dp)
    return nv + np_


def sample_momentum(P, x, rng):
    """Draw p ~ N(0, g(x)) as chol · xi with xi standard normal."""
    ms = _ms(P, x)
    return ms.chol @ rng.standard_normal(ms.chol.shape[0])


def refresh_momentum(P, x, p, beta, rng):
    """Partial refresh: √(1−β) p + √β g_draw, g_draw ~ N(0, g(x)).

    beta = 1 is a full refresh; the marginal N(0, g(x)) is preserved for any
    beta in (0, 1].
    """
    if not 0.0 < beta <= 1.0:
        raise ValueError("beta must be in (0, 1]")
    fresh = sample_momentum(P, x, rng)
    return np.sqrt(1.0 - beta) * np.asarray(p, dtype=np.float64) + np.sqrt(beta) * fresh
