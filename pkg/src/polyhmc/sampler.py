"""Metric HMC chain driver with the involution-checked proposal.

Each iteration performs five steps: partial momentum refresh, proposal
through the leapfrog map (guarded by the involution check unless running
the no-involution ablation), Metropolis-Hastings filter, momentum reversal,
and a second partial refresh.  A failed proposal leaves the state in place
and the MH ratio degenerates to 1, exactly as written in the five-step
scheme — the reversal and refreshes still happen.

Determinism contract: a chain draws from its own Generator seeded by
ChainConfig.seed, with exactly one momentum draw before the loop and three
draws per iteration (refresh normal, MH uniform, second refresh normal) in
fixed order, so identical configs reproduce identical traces bit for bit.

Step-size adaptation (Robbins-Monro on log h with gain n^-rate_exponent)
runs during the burn-in fraction and is frozen afterwards.  It is driven by
"the chain actually moved" (flow accepted AND MH accepted) rather than the
raw MH flag: failed flows auto-accept at ratio 1, and feeding those to the
adapter would push h upward exactly when the integrator is already failing.
"""

from dataclasses import dataclass, field

import numpy as np

from . import barrier, integrator, linalg
from .barrier import _grad_log_det_raw
from .hamiltonian import PhasePoint
from .integrator import STATUS_OK, _leapfrog_raw

H_CLAMP = (1e-8, 10.0)


class InfeasibleStart(ValueError):
    """Chain asked to start outside the polytope interior."""


@dataclass(frozen=True)
class AdaptConfig:
    """Robbins-Monro settings: target rate, gain exponent, burn-in fraction."""

    target_accept: float = 0.5
    rate_exponent: float = 0.7
    burn_in: float = 0.2

    def __post_init__(self):
        if not 0.0 < self.target_accept < 1.0:
            raise ValueError("target_accept must be in (0, 1)")
        if not 0.0 <= self.burn_in <= 1.0:
            raise ValueError("burn_in must be a fraction of N in [0, 1]")


@dataclass(frozen=True)
class ChainConfig:
    """Full per-chain configuration.

    involution=False runs the ablation: the check is skipped and the
    fixed-point solves run a fixed iteration count without the residual
    gate (the integrator style the ablation emulates).  norm_mode picks the
    anchor norm of the involution check.
    """

    n_iters: int
    h0: float = 0.1
    beta: float = 1.0
    eta: float = 5.0
    K: int = 30
    fp_tol: float = 1e-10
    blow_up: float = 1e6
    seed: int = 0
    involution: bool = True
    norm_mode: str = "self_concordant"
    adapt: AdaptConfig | None = field(default_factory=AdaptConfig)

    def __post_init__(self):
        if self.n_iters < 1:
            raise ValueError("n_iters must be >= 1")
        if self.h0 <= 0:
            raise ValueError("h0 must be > 0")
        if self.eta <= 0:
            raise ValueError("eta must be > 0")
        if not 0.0 < self.beta <= 1.0:
            raise ValueError("beta must be in (0, 1]")
        if self.norm_mode not in ("self_concordant", "euclidean"):
            raise ValueError(f"unknown norm_mode {self.norm_mode!r}")

    @property
    def burn_in_iters(self):
        if self.adapt is None:
            return 0
        return int(round(self.adapt.burn_in * self.n_iters))

    def leapfrog(self, h):
        return integrator.LeapfrogConfig(
            h=h,
            K=self.K,
            fp_tol=self.fp_tol,
            blow_up=self.blow_up,
            require_convergence=self.involution,
        )


@dataclass(frozen=True)
class ChainRecord:
    """One iteration of the trace."""

    x: np.ndarray
    accepted: bool
    involution_rejected: bool
    dom_failed: bool
    h: float
    H_current: float


class ChainTrace:
    """Struct-of-arrays trace; indexing yields ChainRecord views."""

    def __init__(self, xs, accepted, involution_rejected, dom_failed, h, H_current):
        self.xs = xs
        self.accepted = accepted
        self.involution_rejected = involution_rejected
        self.dom_failed = dom_failed
        self.h = h
        self.H_current = H_current

    def __len__(self):
        return self.xs.shape[0]

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[j] for j in range(*i.indices(len(self)))]
        return ChainRecord(
            x=self.xs[i],
            accepted=bool(self.accepted[i]),
            involution_rejected=bool(self.involution_rejected[i]),
            dom_failed=bool(self.dom_failed[i]),
            h=float(self.h[i]),
            H_current=float(self.H_current[i]),
        )


@dataclass(frozen=True)
class ChainStats:
    """Summary over the post-burn-in segment of one chain.

    acceptance_rate is the raw MH rate (failed flows auto-accept at ratio 1);
    move_rate counts iterations where the proposal actually replaced the
    state.  functional_means holds tracked functionals averaged over kept
    samples.
    """

    acceptance_rate: float
    involution_rejection_rate: float
    dom_failure_rate: float
    move_rate: float
    final_h: float
    n_iters: int
    burn_in_iters: int
    mean_x: np.ndarray
    functional_means: dict

    @staticmethod
    def from_trace(trace, burn_in_iters, track=None):
        n = len(trace)
        kept = slice(min(burn_in_iters, n - 1), n)
        acc = trace.accepted[kept]
        inv = trace.involution_rejected[kept]
        dom = trace.dom_failed[kept]
        moved = acc & ~inv & ~dom
        xs = trace.xs[kept]
        functional_means = {}
        if track:
            for name, fn in track.items():
                functional_means[name] = float(
                    np.mean([fn(xs[i]) for i in range(xs.shape[0])])
                )
        return ChainStats(
            acceptance_rate=float(acc.mean()),
            involution_rejection_rate=float(inv.mean()),
            dom_failure_rate=float(dom.mean()),
            move_rate=float(moved.mean()),
            final_h=float(trace.h[-1]),
            n_iters=n,
            burn_in_iters=int(min(burn_in_iters, n - 1)),
            mean_x=xs.mean(axis=0),
            functional_means=functional_means,
        )


def mh_accept(H_prop, H_cur, u):
    """True iff u <= min(1, exp(H_cur - H_prop)); NaN energies reject.

    H_prop = +inf (or NaN) rejects, H_prop = -inf accepts: a proposal with
    infinitely better energy should never be lost to overflow.
    """
    log_ratio = H_cur - H_prop
    if np.isnan(log_ratio):
        return False
    if log_ratio >= 0.0:
        return True
    return bool(u <= np.exp(log_ratio))


def adapt_step_size(h, accepted, n, cfg):
    """One Robbins-Monro update of h on the log scale; identity after burn-in.

    n is the 1-based iteration index; the gain is n^-rate_exponent and the
    result is clamped to [1e-8, 10].
    """
    if cfg.adapt is None or n > cfg.burn_in_iters:
        return h
    gain = float(n) ** (-cfg.adapt.rate_exponent)
    log_h = np.log(h) + gain * ((1.0 if accepted else 0.0) - cfg.adapt.target_accept)
    return float(min(max(np.exp(log_h), H_CLAMP[0]), H_CLAMP[1]))


class _Cursor:
    """Cached quantities at the current position; everything the loop reuses."""

    __slots__ = ("x", "s", "L", "logdet", "V_x", "dxH1")

    def __init__(self, V, P, x):
        ms = barrier.metric_state(P, x)
        self.x = ms.x
        self.s = ms.s
        self.L = ms.chol
        self.logdet = ms.logdet
        self.V_x = float(V.value(ms.x))
        self.dxH1 = V.gradient(ms.x) + 0.5 * _grad_log_det_raw(P.A, ms.s, ms.chol)


def chain_step(V, P, cur, p, h, cfg, rng):
    """One full five-step iteration from cached state cur with momentum p.

    Returns (cur', p', record_fields) where record_fields is the tuple
    (x, accepted, involution_rejected, dom_failed, H_current, moved).
    """
    A, b = P.A, P.b
    beta = cfg.beta
    sqb, sq1mb = np.sqrt(beta), np.sqrt(1.0 - beta)
    gated = cfg.involution

    # Step 1: partial refresh at the current position.
    p_tilde = sq1mb * p + sqb * (cur.L @ rng.standard_normal(len(cur.x)))
    H_cur = cur.V_x + 0.5 * cur.logdet + 0.5 * linalg.quad_inv(cur.L, p_tilde)

    # Step 2: proposal. Inner half-kick, then the leapfrog of the flipped
    # state (the two flips of the written composition cancel here).
    p0 = p_tilde - 0.5 * h * cur.dxH1
    st, x1, p1, _, s1, L1, logdet1 = _leapfrog_raw(
        A, b, cur.x, p0, cur.s, cur.L, h, cfg.K, cfg.fp_tol, cfg.blow_up, gated
    )
    dom_failed = st != STATUS_OK
    involution_rejected = False
    flow_ok = False
    nxt = None
    H_prop = H_cur
    if not dom_failed:
        if cfg.involution:
            st2, x2, p2, _, s2, L2, _ = _leapfrog_raw(
                A, b, x1, -p1, s1, L1, h, cfg.K, cfg.fp_tol, cfg.blow_up, gated
            )
            if st2 != STATUS_OK:
                involution_rejected = True
            else:
                dx = cur.x - x2
                dp = (-p0) - p2
                if cfg.norm_mode == "euclidean":
                    err0 = err1 = np.linalg.norm(dx) + np.linalg.norm(dp)
                else:
                    err0 = linalg.norm_metric(cur.L, dx) + linalg.norm_metric_inv(
                        cur.L, dp
                    )
                    err1 = linalg.norm_metric(L2, dx) + linalg.norm_metric_inv(L2, dp)
                involution_rejected = bool(err0 + err1 > cfg.eta)
        if not involution_rejected:
            flow_ok = True
            nxt = _Cursor.__new__(_Cursor)
            nxt.x, nxt.s, nxt.L, nxt.logdet = x1, s1, L1, logdet1
            nxt.V_x = float(V.value(x1))
            nxt.dxH1 = V.gradient(x1) + 0.5 * _grad_log_det_raw(A, s1, L1)
            # outer half-kick then flip: the proposed phase point
            p_out = -(p1 - 0.5 * h * nxt.dxH1)
            H_prop = nxt.V_x + 0.5 * logdet1 + 0.5 * linalg.quad_inv(L1, p_out)

    # Step 3: MH filter (ratio 1 when the flow was not accepted).
    u = rng.random()
    accepted = mh_accept(H_prop, H_cur, u)
    moved = accepted and flow_ok
    if moved:
        cur, p_bar = nxt, p_out
    else:
        p_bar = p_tilde

    # Steps 4 and 5: momentum reversal, then second partial refresh.
    p_hat = -p_bar
    p_new = sq1mb * p_hat + sqb * (cur.L @ rng.standard_normal(len(cur.x)))
    return cur, p_new, (cur.x, accepted, involution_rejected, dom_failed, H_cur, moved)


def run_chain(V, P, cfg, x_init=None, track=None):
    """Run one chain; returns (ChainTrace, ChainStats).

    x_init defaults to the polytope's center (or analytic center).  Raises
    InfeasibleStart when the start is not strictly interior.  track is an
    optional dict of named functionals evaluated over kept samples.
    """
    if x_init is None:
        x_init = P.center if P.center is not None else barrier.analytic_center(P)
    x_init = np.ascontiguousarray(x_init, dtype=np.float64)
    try:
        cur = _Cursor(V, P, x_init)
    except barrier.Infeasible as exc:
        raise InfeasibleStart(f"start point infeasible: {exc}") from exc

    rng = np.random.default_rng(cfg.seed)
    n, d = cfg.n_iters, P.d
    xs = np.empty((n, d))
    accepted = np.empty(n, dtype=bool)
    involution_rejected = np.empty(n, dtype=bool)
    dom_failed = np.empty(n, dtype=bool)
    hs = np.empty(n)
    H_cur_arr = np.empty(n)

    p = cur.L @ rng.standard_normal(d)  # initial momentum ~ N(0, g(x0))
    h = cfg.h0
    for i in range(n):
        cur, p, rec = chain_step(V, P, cur, p, h, cfg, rng)
        xs[i] = rec[0]
        accepted[i] = rec[1]
        involution_rejected[i] = rec[2]
        dom_failed[i] = rec[3]
        hs[i] = h
        H_cur_arr[i] = rec[4]
        h = adapt_step_size(h, rec[5], i + 1, cfg)

    trace = ChainTrace(xs, accepted, involution_rejected, dom_failed, hs, H_cur_arr)
    stats = ChainStats.from_trace(trace, cfg.burn_in_iters, track)
    return trace, stats
