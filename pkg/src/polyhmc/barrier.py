"""Polytopes {x : Ax < b} and the log-barrier Hessian geometry on them.

The barrier is phi(x) = -sum_i log(s_i(x)) with slacks s = b - Ax.  Its
Hessian g(x) = Aᵀ S⁻² A is the Riemannian metric everything else builds on:
derivatives of g, the gradient of log det g (leverage scores), local norms,
and the analytic center used as a canonical interior starting point.
"""

import json
from dataclasses import dataclass

import numpy as np

from . import linalg
from ._jit import njit


class Infeasible(ValueError):
    """Raised when a point violates a constraint; carries the row index."""

    def __init__(self, index, slack_value):
        self.index = int(index)
        self.slack_value = float(slack_value)
        super().__init__(
            f"constraint {self.index} violated (slack {self.slack_value:.3e} <= 0)"
        )


class CholeskyFailure(ArithmeticError):
    """Metric not numerically positive definite at a feasible point."""


class NoConvergence(RuntimeError):
    """An iterative routine exhausted its budget without meeting tolerance."""


def _as_readonly(a):
    out = np.ascontiguousarray(a, dtype=np.float64)
    if out is a:
        out = out.copy()
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Polytope:
    """Open polytope {x in R^d : Ax < b}, A of full column rank, m >= d.

    Immutable and shareable across threads.  ``center`` is an optional known
    interior point (presets carry their exact center of mass).
    Boundedness and non-emptiness of the interior are assumed, not checked:
    the one-dimensional half-line {x < 0} is a legitimate (unbounded)
    instance used to exercise integrator domain failures.
    """

    A: np.ndarray
    b: np.ndarray
    center: np.ndarray | None = None

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=np.float64))
        b = np.asarray(self.b, dtype=np.float64).ravel()
        if A.ndim != 2:
            raise ValueError("A must be a 2-D array")
        m, d = A.shape
        if d < 1 or m < d:
            raise ValueError(f"need m >= d >= 1, got A of shape {m}x{d}")
        if b.shape != (m,):
            raise ValueError(f"b must have length {m}, got {b.shape}")
        if not (np.isfinite(A).all() and np.isfinite(b).all()):
            raise ValueError("A and b must be finite")
        _, ok = linalg.chol_lower(np.ascontiguousarray(A.T @ A))
        if not ok:
            raise ValueError("A must have full column rank (AᵀA not positive definite)")
        object.__setattr__(self, "A", _as_readonly(A))
        object.__setattr__(self, "b", _as_readonly(b))
        if self.center is not None:
            c = _as_readonly(np.asarray(self.center, dtype=np.float64).ravel())
            if c.shape != (d,):
                raise ValueError(f"center must have length {d}")
            object.__setattr__(self, "center", c)

    @property
    def m(self):
        return self.A.shape[0]

    @property
    def d(self):
        return self.A.shape[1]


@dataclass(frozen=True)
class MetricState:
    """Everything the geometry needs at one feasible point.

    Fields: position x, slacks s, metric g = AᵀS⁻²A, its lower Cholesky
    factor, and log det g.  Produced per call; treat as a value.
    """

    x: np.ndarray
    s: np.ndarray
    g: np.ndarray
    chol: np.ndarray
    logdet: float


def make_preset(kind, d, half_width=0.5):
    """Build a preset polytope: 'hypercube' [-w, w]^d or the open unit simplex.

    The hypercube uses A = [I; -I], b = w·1 and center 0; the simplex is
    {x > 0, sum x < 1} with A = [-I; 1ᵀ], b = (0,…,0,1) and center of mass
    1/(d+1)·1.  half_width only applies to the hypercube.
    """
    d = int(d)
    if d < 1:
        raise ValueError("d must be >= 1")
    if kind == "hypercube":
        if half_width <= 0:
            raise ValueError("half_width must be > 0")
        eye = np.eye(d)
        A = np.vstack([eye, -eye])
        b = np.full(2 * d, float(half_width))
        return Polytope(A, b, center=np.zeros(d))
    if kind == "simplex":
        A = np.vstack([-np.eye(d), np.ones((1, d))])
        b = np.zeros(d + 1)
        b[d] = 1.0
        return Polytope(A, b, center=np.full(d, 1.0 / (d + 1)))
    raise ValueError(f"unknown preset {kind!r} (expected 'hypercube' or 'simplex')")


def load_polytope(path):
    """Load a polytope from JSON {"d": int, "m": int, "A": [[...]], "b": [...]}."""
    with open(path) as fh:
        data = json.load(fh)
    for key in ("d", "m", "A", "b"):
        if key not in data:
            raise ValueError(f"polytope file missing key {key!r}")
    d, m = int(data["d"]), int(data["m"])
    A = np.asarray(data["A"], dtype=np.float64)
    b = np.asarray(data["b"], dtype=np.float64)
    if A.shape != (m, d):
        raise ValueError(f"A has shape {A.shape}, expected ({m}, {d})")
    if b.shape != (m,):
        raise ValueError(f"b has length {b.shape}, expected {m}")
    return Polytope(A, b)


def slack(P, x):
    """Slack vector s = b - Ax (positive on the interior)."""
    return P.b - P.A @ np.asarray(x, dtype=np.float64)


@njit(cache=True)
def _metric_from_slack(A, s):
    m, d = A.shape
    W = A / s.reshape(m, 1)
    g = W.T @ W
    L, ok = linalg.chol_lower(g)
    logdet = 0.0
    if ok:
        for j in range(d):
            logdet += 2.0 * np.log(L[j, j])
    return g, L, logdet, ok


@njit(cache=True)
def _barrier_gradient_raw(A, s):
    m, d = A.shape
    out = np.zeros(d)
    for i in range(m):
        w = 1.0 / s[i]
        for l in range(d):
            out[l] += A[i, l] * w
    return out


@njit(cache=True)
def _metric_dirderiv_raw(A, s, u, v):
    # (Dg(x)[u, v])_l = sum_i 2 A_il (Au)_i (Av)_i / s_i^3
    m, d = A.shape
    au = A @ u
    av = A @ v
    out = np.zeros(d)
    for i in range(m):
        w = 2.0 * au[i] * av[i] / (s[i] * s[i] * s[i])
        for l in range(d):
            out[l] += A[i, l] * w
    return out


@njit(cache=True)
def _grad_log_det_raw(A, s, L):
    # (∇ log det g)_l = sum_i 2 A_il σ_i / s_i with leverage σ_i = a_iᵀ g⁻¹ a_i / s_i².
    m, d = A.shape
    out = np.zeros(d)
    for i in range(m):
        y = linalg.solve_lower(L, A[i].copy())
        lev = 0.0
        for k in range(d):
            lev += y[k] * y[k]
        lev /= s[i] * s[i]
        w = 2.0 * lev / s[i]
        for l in range(d):
            out[l] += A[i, l] * w
    return out


def metric_state(P, x):
    """Metric state at a strictly feasible x.

    Raises Infeasible (with the first violated row index) when any slack is
    <= 0, and CholeskyFailure when the metric is not numerically positive
    definite (cannot happen at honest interior points of a full-rank
    polytope, but overflow near the boundary can get here).
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    s = P.b - P.A @ x
    bad = np.nonzero(s <= 0.0)[0]
    if bad.size:
        raise Infeasible(bad[0], s[bad[0]])
    g, L, logdet, ok = _metric_from_slack(P.A, s)
    if not ok:
        raise CholeskyFailure(f"metric Cholesky failed (min slack {s.min():.3e})")
    return MetricState(x=x, s=s, g=g, chol=L, logdet=logdet)


def barrier_value(P, x):
    """phi(x) = -sum log slack; raises Infeasible outside the interior."""
    s = slack(P, x)
    bad = np.nonzero(s <= 0.0)[0]
    if bad.size:
        raise Infeasible(bad[0], s[bad[0]])
    return float(-np.log(s).sum())


def barrier_gradient(P, x):
    """∇phi(x) = Aᵀ S⁻¹ 1."""
    s = slack(P, x)
    bad = np.nonzero(s <= 0.0)[0]
    if bad.size:
        raise Infeasible(bad[0], s[bad[0]])
    return _barrier_gradient_raw(P.A, s)


def metric_directional_deriv(P, x, u, v):
    """Dg(x)[u, v] = 2 Aᵀ S⁻³ ((Au) ⊙ (Av)), as a length-d vector.

    Component l is uᵀ (∂g/∂x_l) v; symmetric and bilinear in (u, v).
    """
    ms = x if isinstance(x, MetricState) else metric_state(P, x)
    u = np.ascontiguousarray(u, dtype=np.float64)
    v = np.ascontiguousarray(v, dtype=np.float64)
    return _metric_dirderiv_raw(P.A, ms.s, u, v)


def grad_log_det(P, x):
    """∇_x log det g(x), via per-constraint leverage scores.

    Uses m triangular solves against the cached Cholesky factor; this is the
    trace term g⁻¹ : Dg appearing in the position derivative of the
    Hamiltonian's log-det part.
    """
    ms = x if isinstance(x, MetricState) else metric_state(P, x)
    return _grad_log_det_raw(P.A, ms.s, ms.chol)


def local_norms(ms, v, p):
    """(‖v‖_g, ‖p‖_{g⁻¹}) at ms, via the Cholesky factor."""
    v = np.ascontiguousarray(v, dtype=np.float64)
    p = np.ascontiguousarray(p, dtype=np.float64)
    return (
        float(linalg.norm_metric(ms.chol, v)),
        float(linalg.norm_metric_inv(ms.chol, p)),
    )


def chebyshev_center(P):
    """Center of the largest inscribed ball, via linear programming.

    Used only to bootstrap Newton for polytopes without a known center.
    """
    from scipy.optimize import linprog

    m, d = P.m, P.d
    row_norms = np.linalg.norm(P.A, axis=1)
    c = np.zeros(d + 1)
    c[d] = -1.0
    A_ub = np.hstack([P.A, row_norms.reshape(m, 1)])
    bounds = [(None, None)] * d + [(0.0, None)]
    res = linprog(c, A_ub=A_ub, b_ub=P.b, bounds=bounds, method="highs")
    if not res.success or res.x[d] <= 0.0:
        raise NoConvergence("no strictly feasible point found (empty interior?)")
    return res.x[:d]


def analytic_center(P, x0=None, tol=1e-8, max_iter=200):
    """Analytic center: the minimizer of the barrier.

    For presets the exact center of mass is returned directly (it coincides
    with the analytic center for both presets).  Otherwise damped Newton
    from x0 (default: Chebyshev center), stopping when ‖∇phi‖_{g⁻¹} <= tol;
    raises NoConvergence after max_iter iterations.
    """
    if x0 is None:
        if P.center is not None:
            return P.center.copy()
        x = chebyshev_center(P)
    else:
        x = np.asarray(x0, dtype=np.float64).copy()
    for _ in range(max_iter):
        ms = metric_state(P, x)
        grad = _barrier_gradient_raw(P.A, ms.s)
        step = -linalg.solve_spd(ms.chol, grad)
        lam = float(linalg.norm_metric_inv(ms.chol, grad))
        if lam <= tol:
            return x
        t = 1.0 / (1.0 + lam)  # damped step stays in the domain (Dikin)
        while t > 1e-18 and np.any(P.b - P.A @ (x + t * step) <= 0.0):
            t *= 0.5
        x = x + t * step
    raise NoConvergence(f"analytic center: no convergence in {max_iter} iterations")
