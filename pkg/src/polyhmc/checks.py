"""Self-check suites: finite differences, barrier inequalities, integrator laws.

Each suite returns a list of row dicts {suite, name, passed, detail, seconds}
so the CLI can print a pass/fail table and tests can assert on the same
machinery.  All randomness is seeded; suites are deterministic.
"""

import time

import numpy as np

from . import barrier, linalg
from .hamiltonian import (
    PhasePoint,
    effective_potential,
    grad_effective_potential,
    grad_p_kinetic,
    grad_x_kinetic,
    hamiltonian,
    kinetic_energy,
    phase_norm,
    sample_momentum,
)
from .integrator import (
    DomainFailure,
    LeapfrogConfig,
    involution_check,
    involution_map,
    proposal,
)
from .targets import GaussianTarget, UniformTarget


def _interior_point(P, kind, rng, margin=0.8):
    """A strictly interior point with slack bounded away from the boundary."""
    if kind == "hypercube":
        w = P.b[0]
        return (rng.random(P.d) - 0.5) * (2.0 * w * margin)
    y = rng.dirichlet(np.ones(P.d + 1))[: P.d]
    c = np.full(P.d, 1.0 / (P.d + 1))
    return c + margin * (y - c)


def _rel_err(approx, exact):
    num = np.linalg.norm(np.asarray(approx) - np.asarray(exact))
    den = max(np.linalg.norm(np.asarray(exact)), 1e-12)
    return num / den


def _central_diff_vec(f, x, eps):
    """Central finite-difference gradient of scalar f at x."""
    d = x.shape[0]
    g = np.empty(d)
    for j in range(d):
        e = np.zeros(d)
        e[j] = eps
        g[j] = (f(x + e) - f(x - e)) / (2.0 * eps)
    return g


def _central_diff_jac(f, x, eps):
    """Central finite-difference Jacobian of vector f at x (columns = d/dx_j)."""
    d = x.shape[0]
    cols = []
    for j in range(d):
        e = np.zeros(d)
        e[j] = eps
        cols.append((f(x + e) - f(x - e)) / (2.0 * eps))
    return np.stack(cols, axis=1)


def fd_gradient_suite(seed=0, n_points=100, rel_tol=1e-5, eps=1e-6):
    """Analytic derivatives vs central finite differences on both presets.

    Covers the metric (as the Jacobian of the barrier gradient), the
    log-det gradient, the position gradient of the effective potential, and
    both kinetic-energy gradients, at random interior points of the
    5-dimensional box and simplex.
    """
    rng = np.random.default_rng(seed)
    rows = []
    cases = [
        ("hypercube", barrier.make_preset("hypercube", 5, 0.5)),
        ("simplex", barrier.make_preset("simplex", 5)),
    ]
    for kind, P in cases:
        V = GaussianTarget(0.1 * rng.standard_normal(P.d))
        worst = {
            "metric_vs_barrier_hessian": 0.0,
            "log_det_gradient": 0.0,
            "effective_potential_gradient": 0.0,
            "kinetic_position_gradient": 0.0,
            "kinetic_momentum_gradient": 0.0,
        }
        t0 = time.perf_counter()
        for _ in range(n_points):
            x = _interior_point(P, kind, rng)
            ms = barrier.metric_state(P, x)
            p = sample_momentum(P, x, rng)

            jac = _central_diff_jac(lambda y: barrier.barrier_gradient(P, y), x, eps)
            worst["metric_vs_barrier_hessian"] = max(
                worst["metric_vs_barrier_hessian"], _rel_err(jac, ms.g)
            )

            fd = _central_diff_vec(
                lambda y: barrier.metric_state(P, y).logdet, x, eps
            )
            worst["log_det_gradient"] = max(
                worst["log_det_gradient"], _rel_err(barrier.grad_log_det(P, ms), fd)
            )

            fd = _central_diff_vec(
                lambda y: effective_potential(V, P, y), x, eps
            )
            worst["effective_potential_gradient"] = max(
                worst["effective_potential_gradient"],
                _rel_err(grad_effective_potential(V, P, ms), fd),
            )

            fd = _central_diff_vec(
                lambda y: kinetic_energy(P, PhasePoint(y, p)), x, eps
            )
            worst["kinetic_position_gradient"] = max(
                worst["kinetic_position_gradient"],
                _rel_err(grad_x_kinetic(P, PhasePoint(x, p)), fd),
            )

            fd = _central_diff_vec(
                lambda q: kinetic_energy(P, PhasePoint(x, q)), p, eps
            )
            worst["kinetic_momentum_gradient"] = max(
                worst["kinetic_momentum_gradient"],
                _rel_err(grad_p_kinetic(P, PhasePoint(x, p)), fd),
            )
        dt = time.perf_counter() - t0
        for name, err in worst.items():
            rows.append(
                {
                    "suite": "finite_difference",
                    "name": f"{kind}:{name}",
                    "passed": bool(err <= rel_tol),
                    "detail": f"max rel err {err:.3e} (tol {rel_tol:.1e}, {n_points} points)",
                    "seconds": dt / len(worst),
                }
            )
    return rows


def self_concordance_suite(seed=0, n_points=1000, dikin_radius=0.999, slack_tol=1e-9):
    """Barrier inequalities and Dikin-ball containment at random points.

    Checks the third-derivative bound |D3 phi[h,h,h]| <= 2 ||h||_g^3, the
    barrier-parameter bound (grad phi . h)^2 <= m ||h||_g^2, and strict
    feasibility of every point on the metric sphere of the given radius.
    """
    rng = np.random.default_rng(seed)
    rows = []
    cases = [
        ("hypercube", barrier.make_preset("hypercube", 5, 0.5)),
        ("simplex", barrier.make_preset("simplex", 5)),
    ]
    for kind, P in cases:
        t0 = time.perf_counter()
        third_ok = param_ok = dikin_ok = True
        worst_third = worst_param = 0.0
        min_slack = np.inf
        for _ in range(n_points):
            x = _interior_point(P, kind, rng, margin=0.95)
            ms = barrier.metric_state(P, x)
            hvec = rng.standard_normal(P.d)
            h_norm = linalg.norm_metric(ms.chol, hvec)
            third = abs(float(hvec @ barrier.metric_directional_deriv(P, ms, hvec, hvec)))
            bound = 2.0 * h_norm**3 + slack_tol
            worst_third = max(worst_third, third - bound)
            third_ok &= third <= bound

            gphi = barrier.barrier_gradient(P, x)
            lhs = float(gphi @ hvec) ** 2
            rhs = P.m * h_norm**2 + slack_tol
            worst_param = max(worst_param, lhs - rhs)
            param_ok &= lhs <= rhs

            u = rng.standard_normal(P.d)
            u *= dikin_radius / linalg.norm_metric(ms.chol, u)
            s_edge = barrier.slack(P, x + u)
            min_slack = min(min_slack, float(s_edge.min()))
            dikin_ok &= bool(np.all(s_edge > 0.0))
        dt = time.perf_counter() - t0
        rows.append(
            {
                "suite": "self_concordance",
                "name": f"{kind}:third_derivative_bound",
                "passed": bool(third_ok),
                "detail": f"max excess {worst_third:.3e} over {n_points} points",
                "seconds": dt / 3,
            }
        )
        rows.append(
            {
                "suite": "self_concordance",
                "name": f"{kind}:barrier_parameter_bound",
                "passed": bool(param_ok),
                "detail": f"max excess {worst_param:.3e} over {n_points} points",
                "seconds": dt / 3,
            }
        )
        rows.append(
            {
                "suite": "dikin",
                "name": f"{kind}:containment_radius_{dikin_radius}",
                "passed": bool(dikin_ok),
                "detail": f"min boundary slack {min_slack:.3e} over {n_points} points",
                "seconds": dt / 3,
            }
        )
    return rows


def involution_suite(seed=0, n_points=100, fp_tol=1e-10, h_start=0.05, max_halvings=60):
    """Double application of the flow map returns the start to near fp_tol.

    For each random phase point, the step size is halved until the check
    passes at a tolerance of 100*fp_tol; the criterion is that the actual
    round-trip error in the phase norm anchored at the start is at most
    10*fp_tol.
    """
    rng = np.random.default_rng(seed)
    P = barrier.make_preset("hypercube", 5, 0.5)
    rows = []
    t0 = time.perf_counter()
    worst = 0.0
    n_ok = 0
    for _ in range(n_points):
        x = _interior_point(P, "hypercube", rng)
        p = sample_momentum(P, x, rng)
        z = PhasePoint(x, p)
        h = h_start
        achieved = None
        for _ in range(max_halvings):
            cfg = LeapfrogConfig(h=h, K=30, fp_tol=fp_tol)
            out = involution_map(P, z, cfg)
            if not isinstance(out, DomainFailure):
                res = involution_check(P, z, out, cfg, eta=100.0 * fp_tol)
                if res.passed:
                    back = involution_map(P, out, cfg)
                    if not isinstance(back, DomainFailure):
                        achieved = phase_norm(
                            P, z.x, back.x - z.x, back.p - z.p
                        )
                        break
            h *= 0.5
        if achieved is None:
            continue
        worst = max(worst, achieved)
        n_ok += 1
    dt = time.perf_counter() - t0
    passed = bool(n_ok == n_points and worst <= 10.0 * fp_tol)
    rows.append(
        {
            "suite": "involution",
            "name": "double_application_identity",
            "passed": passed,
            "detail": (
                f"{n_ok}/{n_points} points resolved, worst round-trip "
                f"{worst:.3e} (bound {10.0 * fp_tol:.1e})"
            ),
            "seconds": dt,
        }
    )
    return rows


def energy_order_suite(seed=0, n_points=20, h0=0.2, slope_range=(2.5, 3.5)):
    """One-step energy error scales like h^3 (local error of the order-2 scheme).

    Measures |H(step(z)) - H(z)| at step sizes h0, h0/2, h0/4, h0/8 over
    random phase points and fits one log-log slope to the pooled means.
    """
    rng = np.random.default_rng(seed)
    P = barrier.make_preset("hypercube", 5, 0.5)
    V = UniformTarget()
    hs = np.array([h0, h0 / 2.0, h0 / 4.0, h0 / 8.0])
    errors = np.zeros((n_points, hs.shape[0]))
    t0 = time.perf_counter()
    count = 0
    attempts = 0
    while count < n_points and attempts < 50 * n_points:
        attempts += 1
        x = _interior_point(P, "hypercube", rng)
        p = sample_momentum(P, x, rng)
        z = PhasePoint(x, p)
        H0 = hamiltonian(V, P, z)
        row = np.empty(hs.shape[0])
        ok = True
        for k, h in enumerate(hs):
            cfg = LeapfrogConfig(h=h, K=100, fp_tol=1e-13)
            z1, flow_ok = proposal(V, P, z, cfg, eta=1.0, check_involution=False)
            if not flow_ok:
                ok = False
                break
            row[k] = abs(hamiltonian(V, P, z1) - H0)
        if ok:
            errors[count] = row
            count += 1
    dt = time.perf_counter() - t0
    if count < n_points:
        return [
            {
                "suite": "energy_order",
                "name": "one_step_energy_slope",
                "passed": False,
                "detail": f"only {count}/{n_points} points integrated at all step sizes",
                "seconds": dt,
            }
        ]
    mean_err = errors.mean(axis=0)
    slope = float(np.polyfit(np.log(hs), np.log(mean_err), 1)[0])
    lo, hi = slope_range
    return [
        {
            "suite": "energy_order",
            "name": "one_step_energy_slope",
            "passed": bool(lo <= slope <= hi),
            "detail": f"slope {slope:.3f} over h={h0} .. {h0 / 8} (want [{lo}, {hi}])",
            "seconds": dt,
        }
    ]


def run_all_checks(seed=0):
    """Run every suite; returns (rows, all_passed)."""
    rows = []
    rows += fd_gradient_suite(seed=seed)
    rows += self_concordance_suite(seed=seed)
    rows += involution_suite(seed=seed)
    rows += energy_order_suite(seed=seed)
    return rows, all(r["passed"] for r in rows)
