"""Generalized-leapfrog integrator with domain detection and involution check.

One leapfrog step for the non-separable Hamiltonian solves two fixed-point
equations (the momentum half-step and the position step are implicit) and
finishes with an explicit momentum half-step:

    p½  = p0 - (h/2) ∂x H2(x0, p½)                       (implicit)
    x1  = x0 + (h/2) [∂p H2(x0, p½) + ∂p H2(x1, p½)]     (implicit)
    p1  = p½ - (h/2) ∂x H2(x1, p½)                        (explicit)

Both implicit solves run plain fixed-point iteration from the explicit
initializer, with residuals measured in the phase norm anchored at the
starting point.  A step "succeeds" only when every iterate stays strictly
feasible and (in gated mode) the residual reaches fp_tol within the
iteration budget; anything else is a DomainFailure value, not an error.

The proposal map composes an outer explicit half-kick of the effective
potential, a momentum flip, and the leapfrog; applying it twice should
return the starting point, and the involution check verifies exactly that
within tolerance eta before a proposal is allowed into the MH filter.
"""

from dataclasses import dataclass

import numpy as np

from . import barrier, linalg
from ._jit import njit
from .barrier import _metric_from_slack, _metric_dirderiv_raw, _grad_log_det_raw
from .hamiltonian import PhasePoint, grad_effective_potential, phase_norm

STATUS_OK = 0
STATUS_MOMENTUM_NO_CONVERGENCE = 1
STATUS_MOMENTUM_DIVERGED = 2
STATUS_POSITION_INFEASIBLE = 3
STATUS_POSITION_NO_CONVERGENCE = 4
STATUS_POSITION_DIVERGED = 5

_FAILURE_FIELDS = {
    STATUS_MOMENTUM_NO_CONVERGENCE: ("momentum_fp", "no_convergence"),
    STATUS_MOMENTUM_DIVERGED: ("momentum_fp", "diverged"),
    STATUS_POSITION_INFEASIBLE: ("position_fp", "infeasible_iterate"),
    STATUS_POSITION_NO_CONVERGENCE: ("position_fp", "no_convergence"),
    STATUS_POSITION_DIVERGED: ("position_fp", "diverged"),
}


@dataclass(frozen=True)
class LeapfrogConfig:
    """Step size and fixed-point budget for one leapfrog step.

    h: step size (h = 0 degenerates to the identity map and is allowed);
    K: fixed-point iteration cap; fp_tol: residual tolerance in the phase
    norm; blow_up: divergence guard as a multiple of the first residual;
    require_convergence: when False the solves run exactly K iterations and
    accept whatever they end on (the style of integrator the no-involution
    ablation emulates) — feasibility and finiteness are still enforced.
    """

    h: float
    K: int = 30
    fp_tol: float = 1e-10
    blow_up: float = 1e6
    require_convergence: bool = True

    def __post_init__(self):
        if self.h < 0:
            raise ValueError("h must be >= 0")
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if self.fp_tol <= 0:
            raise ValueError("fp_tol must be > 0")


@dataclass(frozen=True)
class DomainFailure:
    """The phase point left dom(Φ_h): stage says which solve, reason says how."""

    stage: str
    reason: str


@dataclass(frozen=True)
class InvolutionResult:
    """Outcome of the involution check; err0/err1 are the two anchored errors."""

    passed: bool
    reason: str = ""
    err0: float = np.nan
    err1: float = np.nan


@njit(cache=True)
def _dx_h2_raw(A, s, L, p):
    u = linalg.solve_spd(L, p)
    return -0.5 * _metric_dirderiv_raw(A, s, u, u)


@njit(cache=True)
def _momentum_fixed_point(A, s0, L0, p0, h, K, fp_tol, blow_up, gated):
    """Solve q = p0 - (h/2) ∂x H2(x0, q) by fixed-point iteration from q = p0.

    Returns (q, status, iterations).  Residuals are ‖Δq‖_{g(x0)⁻¹}.
    """
    q = p0.copy()
    half = 0.5 * h
    r0 = -1.0
    for k in range(K):
        q_new = p0 - half * _dx_h2_raw(A, s0, L0, q)
        r = linalg.norm_metric_inv(L0, q_new - q)
        q = q_new
        if not np.isfinite(r):
            return q, STATUS_MOMENTUM_DIVERGED, k + 1
        if gated:
            if r <= fp_tol:
                return q, STATUS_OK, k + 1
            if r0 < 0.0:
                r0 = r
            elif r > blow_up * r0:
                return q, STATUS_MOMENTUM_DIVERGED, k + 1
    if gated:
        return q, STATUS_MOMENTUM_NO_CONVERGENCE, K
    return q, STATUS_OK, K


@njit(cache=True)
def _position_fixed_point(A, b, s0, L0, x0, p_half, h, K, fp_tol, blow_up, gated):
    """Solve x1 = x0 + (h/2)[∂p H2(x0, p½) + ∂p H2(x1, p½)] from x1 = x0.

    Every iterate is slack-checked before its metric is built.  Returns
    (x1, s1, L1, logdet1, status, iterations); the metric outputs are valid
    only when status is OK, and are exact at the returned x1.
    """
    d = x0.shape[0]
    a0 = linalg.solve_spd(L0, p_half)
    half = 0.5 * h
    y = x0.copy()
    sy = s0.copy()
    Ly = L0.copy()
    logdet_y = 0.0
    for j in range(d):
        logdet_y += 2.0 * np.log(L0[j, j])
    r0 = -1.0
    for k in range(K):
        ay = linalg.solve_spd(Ly, p_half)
        y_new = x0 + half * (a0 + ay)
        s_new = b - A @ y_new
        for i in range(s_new.shape[0]):
            if not (s_new[i] > 0.0):  # catches NaN as well
                return y_new, s_new, Ly, logdet_y, STATUS_POSITION_INFEASIBLE, k + 1
        g_new, L_new, logdet_new, ok = _metric_from_slack(A, s_new)
        if not ok:
            # feasible but numerically outside the tractable domain
            return y_new, s_new, Ly, logdet_y, STATUS_POSITION_INFEASIBLE, k + 1
        r = linalg.norm_metric(L0, y_new - y)
        y, sy, Ly, logdet_y = y_new, s_new, L_new, logdet_new
        if not np.isfinite(r):
            return y, sy, Ly, logdet_y, STATUS_POSITION_DIVERGED, k + 1
        if gated:
            if r <= fp_tol:
                return y, sy, Ly, logdet_y, STATUS_OK, k + 1
            if r0 < 0.0:
                r0 = r
            elif r > blow_up * r0:
                return y, sy, Ly, logdet_y, STATUS_POSITION_DIVERGED, k + 1
    if gated:
        return y, sy, Ly, logdet_y, STATUS_POSITION_NO_CONVERGENCE, K
    return y, sy, Ly, logdet_y, STATUS_OK, K


@njit(cache=True)
def _leapfrog_raw(A, b, x0, p0, s0, L0, h, K, fp_tol, blow_up, gated):
    """One full leapfrog step from (x0, p0) with metric (s0, L0) at x0.

    Returns (status, x1, p1, p_half, s1, L1, logdet1).  On failure the
    trailing fields hold the last iterates and must be ignored.
    """
    p_half, st, _ = _momentum_fixed_point(A, s0, L0, p0, h, K, fp_tol, blow_up, gated)
    if st != STATUS_OK:
        return st, x0, p0, p_half, s0, L0, 0.0
    x1, s1, L1, logdet1, st, _ = _position_fixed_point(
        A, b, s0, L0, x0, p_half, h, K, fp_tol, blow_up, gated
    )
    if st != STATUS_OK:
        return st, x0, p0, p_half, s0, L0, 0.0
    p1 = p_half - 0.5 * h * _dx_h2_raw(A, s1, L1, p_half)
    return STATUS_OK, x1, p1, p_half, s1, L1, logdet1


def _failure(status):
    stage, reason = _FAILURE_FIELDS[status]
    return DomainFailure(stage=stage, reason=reason)


def half_kick(V, P, z, cfg):
    """Explicit momentum half-kick: p ← p - (h/2) ∂x H1(x)."""
    grad = grad_effective_potential(V, P, z.x)
    return PhasePoint(z.x, z.p - 0.5 * cfg.h * grad)


def flip(z):
    """Momentum reversal s(x, p) = (x, -p)."""
    return PhasePoint(z.x, -z.p)


def momentum_half_step(P, z, cfg):
    """The implicit momentum half-step alone: solve for p½ at fixed x.

    Returns (p_half, outcome) where outcome is None on success or a
    DomainFailure.  Exposed so the one-dimensional pathology (the quadratic
    in p½ losing its real root) can be probed directly.
    """
    ms = barrier.metric_state(P, z.x)
    q, st, _ = _momentum_fixed_point(
        P.A,
        ms.s,
        ms.chol,
        np.ascontiguousarray(z.p, dtype=np.float64),
        cfg.h,
        cfg.K,
        cfg.fp_tol,
        cfg.blow_up,
        cfg.require_convergence,
    )
    return q, (None if st == STATUS_OK else _failure(st))


def leapfrog_step(P, z, cfg):
    """One leapfrog step; returns a PhasePoint or a DomainFailure value.

    h = 0 returns the input exactly.  The input position must be strictly
    feasible (that raises Infeasible; leaving the domain mid-step does not).
    """
    ms = barrier.metric_state(P, z.x)
    st, x1, p1, _, _, _, _ = _leapfrog_raw(
        P.A,
        P.b,
        ms.x,
        np.ascontiguousarray(z.p, dtype=np.float64),
        ms.s,
        ms.chol,
        cfg.h,
        cfg.K,
        cfg.fp_tol,
        cfg.blow_up,
        cfg.require_convergence,
    )
    if st != STATUS_OK:
        return _failure(st)
    return PhasePoint(x1, p1)


def involution_map(P, z, cfg):
    """Φ_h = (leapfrog step) ∘ (momentum flip); the map the check verifies."""
    return leapfrog_step(P, flip(z), cfg)


def involution_check(P, z0, z1_outcome, cfg, eta, norm_mode="self_concordant"):
    """Check that Φ_h applied twice returns z0 within eta.

    z1_outcome is the result of involution_map at z0 (PhasePoint or
    DomainFailure).  The check fails if either hop failed, or if
    err0 + err1 > eta where err0 = ‖z0 - w‖ anchored at z0, err1 the same
    difference anchored at w = Φ_h(z1).  In euclidean mode both anchors are
    replaced by the plain norm ‖dx‖₂ + ‖dp‖₂ (the ablation of the
    metric-adapted norm).
    """
    if eta <= 0:
        raise ValueError("eta must be > 0")
    if norm_mode not in ("self_concordant", "euclidean"):
        raise ValueError(f"unknown norm_mode {norm_mode!r}")
    if isinstance(z1_outcome, DomainFailure):
        return InvolutionResult(passed=False, reason="forward_domain_failure")
    w = involution_map(P, z1_outcome, cfg)
    if isinstance(w, DomainFailure):
        return InvolutionResult(passed=False, reason="return_domain_failure")
    dx = z0.x - w.x
    dp = z0.p - w.p
    if norm_mode == "euclidean":
        err0 = err1 = float(np.linalg.norm(dx) + np.linalg.norm(dp))
    else:
        err0 = phase_norm(P, z0.x, dx, dp)
        err1 = phase_norm(P, w.x, dx, dp)
    if err0 + err1 > eta:
        return InvolutionResult(passed=False, reason="tolerance", err0=err0, err1=err1)
    return InvolutionResult(passed=True, err0=err0, err1=err1)


def proposal(V, P, z, cfg, eta, norm_mode="self_concordant", check_involution=True):
    """The full proposal map: half-kick, flip, leapfrog, half-kick, flip.

    Returns (z_proposed, accepted_flow).  When the integrator fails or the
    involution check rejects, the input z is returned with False and the
    chain treats the move as "flow not accepted" (the MH ratio then
    degenerates to 1).  Note the map includes a net momentum flip — the
    chain undoes it after the MH filter — so even at h = 0 the output is
    (x, -p), not z.
    """
    z0 = flip(half_kick(V, P, z, cfg))
    z1 = involution_map(P, z0, cfg)
    if isinstance(z1, DomainFailure):
        return z, False
    if check_involution:
        res = involution_check(P, z0, z1, cfg, eta, norm_mode)
        if not res.passed:
            return z, False
    return flip(half_kick(V, P, z1, cfg)), True
