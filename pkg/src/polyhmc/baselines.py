"""Comparison samplers: MALA on truncated targets, independent MH on the simplex.

MALA targets exp(-V) restricted to the polytope: a proposal that lands
outside is rejected outright (zero target density), otherwise the standard
Metropolis-Hastings ratio with the Gaussian drift kernel applies.

The Gaussian proposal can be parameterized three ways, all of the form
y ~ N(x - c * grad V(x), sigma^2 * I):

    "step_sd"  -> sigma = h,        c = h^2 / 2
    "step_var" -> sigma^2 = h,      c = h / 2
    "langevin" -> sigma^2 = 2 h,    c = h      (Euler-Maruyama of the diffusion)

The default "step_sd" reproduces the reference acceptance rates on the
Gaussian box benchmarks (about 0.55 at d=5 and 0.44 at d=10 with h=0.05);
the other two give acceptance below 0.05 on the same benchmark at that h.
Which one was used is recorded in experiment metadata.
"""

from dataclasses import dataclass

import numpy as np

from . import barrier

_MALA_PARAMS = ("step_sd", "step_var", "langevin")


@dataclass(frozen=True)
class MalaConfig:
    h: float = 0.05
    N: int = 1
    seed: int = 0
    parameterization: str = "step_sd"

    def __post_init__(self):
        if self.h <= 0:
            raise ValueError("h must be > 0")
        if self.N < 1:
            raise ValueError("N must be >= 1")
        if self.parameterization not in _MALA_PARAMS:
            raise ValueError(f"unknown parameterization {self.parameterization!r}")

    @property
    def drift_coeff(self):
        if self.parameterization == "step_sd":
            return 0.5 * self.h * self.h
        if self.parameterization == "step_var":
            return 0.5 * self.h
        return self.h

    @property
    def noise_var(self):
        if self.parameterization == "step_sd":
            return self.h * self.h
        if self.parameterization == "step_var":
            return self.h
        return 2.0 * self.h


@dataclass(frozen=True)
class ImhConfig:
    N: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be >= 1")


def mala_step(V, P, x, cfg, rng):
    """One MALA move for exp(-V) on P; returns (new_x, accepted)."""
    c, var = cfg.drift_coeff, cfg.noise_var
    sd = np.sqrt(var)
    gx = V.gradient(x)
    mean_fwd = x - c * gx
    y = mean_fwd + sd * rng.standard_normal(x.shape[0])
    if np.any(barrier.slack(P, y) <= 0.0):
        return x.copy(), False
    gy = V.gradient(y)
    mean_rev = y - c * gy
    # log q(x|y) - log q(y|x) = [‖y - mean_fwd‖² - ‖x - mean_rev‖²] / (2 var)
    log_ratio = (
        V.value(x)
        - V.value(y)
        + (np.sum((y - mean_fwd) ** 2) - np.sum((x - mean_rev) ** 2)) / (2.0 * var)
    )
    if np.isnan(log_ratio):
        return x.copy(), False
    if log_ratio >= 0.0 or rng.random() <= np.exp(log_ratio):
        return y, True
    return x.copy(), False


def run_mala(V, P, cfg, x_init=None):
    """Run cfg.N MALA steps; returns (xs array, acceptance_rate)."""
    if x_init is None:
        x_init = P.center if P.center is not None else barrier.analytic_center(P)
    x = np.ascontiguousarray(x_init, dtype=np.float64)
    if np.any(barrier.slack(P, x) <= 0.0):
        raise ValueError("MALA start point infeasible")
    rng = np.random.default_rng(cfg.seed)
    xs = np.empty((cfg.N, x.shape[0]))
    n_acc = 0
    for i in range(cfg.N):
        x, acc = mala_step(V, P, x, cfg, rng)
        xs[i] = x
        n_acc += acc
    return xs, n_acc / cfg.N


def sample_uniform_simplex(d, rng):
    """Uniform draw from the open simplex {x_i > 0, sum x < 1} in R^d."""
    if d < 1:
        raise ValueError("d must be >= 1")
    while True:
        y = rng.dirichlet(np.ones(d + 1))[:d]
        if np.all(y > 0.0) and y.sum() < 1.0:
            return y


def imh_step(V, x, d, rng):
    """Independent MH with flat proposal on the simplex; returns (new_x, accepted)."""
    y = sample_uniform_simplex(d, rng)
    log_ratio = V.value(x) - V.value(y)
    if np.isnan(log_ratio):
        return x.copy(), False
    if log_ratio >= 0.0 or rng.random() <= np.exp(log_ratio):
        return y, True
    return x.copy(), False


def run_imh(V, d, cfg, x_init=None):
    """Run cfg.N IMH steps on the d-simplex; returns (xs array, acceptance_rate)."""
    if x_init is None:
        x_init = np.full(d, 1.0 / (d + 1))
    x = np.ascontiguousarray(x_init, dtype=np.float64)
    rng = np.random.default_rng(cfg.seed)
    xs = np.empty((cfg.N, d))
    n_acc = 0
    for i in range(cfg.N):
        x, acc = imh_step(V, x, d, rng)
        xs[i] = x
        n_acc += acc
    return xs, n_acc / cfg.N
