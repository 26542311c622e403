"""Replicated sampling experiments: bias benchmarks and the norm ablation.

Each experiment runs R independent replicates with seeds base_seed + i and
returns a plain dict of results (the CLI serializes it).  Replicates may run
in worker processes; every worker is a pure function of its argument tuple,
so parallel results are identical to serial ones replicate by replicate.

Estimates of the benchmark functional exclude the adaptation burn-in by
default (include_burn_in=True keeps whole trajectories, which is how the
running-mean traces are always emitted).
"""

from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import baselines, diagnostics
from .barrier import make_preset
from .sampler import AdaptConfig, ChainConfig, run_chain
from .targets import GaussianTarget, UniformTarget

# involution tolerance defaults per (polytope kind, dimension)
ETA_DEFAULTS = {
    ("hypercube", 5): 5.0,
    ("hypercube", 10): 10.0,
    ("simplex", 5): 10.0,
    ("simplex", 10): 200.0,
}


def default_eta(kind, d):
    return ETA_DEFAULTS.get((kind, d), 10.0)


def _build_polytope(kind, d, half_width):
    if kind == "hypercube":
        return make_preset("hypercube", d, half_width)
    return make_preset(kind, d)


def _build_target(mu):
    if mu is None:
        return UniformTarget()
    return GaussianTarget(np.asarray(mu, dtype=np.float64))


def running_mean(q, stride):
    """Strided running mean of q; returns (1-based iters, values), final included."""
    n = q.shape[0]
    idx = np.arange(stride, n + 1, stride)
    if idx.size == 0 or idx[-1] != n:
        idx = np.append(idx, n)
    cum = np.cumsum(q)
    return idx, cum[idx - 1] / idx


def _chain_worker(args):
    (kind, d, half_width, mu, cfg, stride, include_burn_in, replicate) = args
    P = _build_polytope(kind, d, half_width)
    V = _build_target(mu)
    trace, stats = run_chain(V, P, cfg)
    q = trace.xs @ np.asarray(mu, dtype=np.float64)
    iters, vals = running_mean(q, stride)
    burn = 0 if include_burn_in else cfg.burn_in_iters
    return {
        "replicate": replicate,
        "estimate": float(q[burn:].mean()),
        "trace_iters": iters,
        "trace_vals": vals,
        "acceptance_rate": stats.acceptance_rate,
        "involution_rejection_rate": stats.involution_rejection_rate,
        "dom_failure_rate": stats.dom_failure_rate,
        "move_rate": stats.move_rate,
        "final_h": stats.final_h,
    }


def _mala_worker(args):
    (d, half_width, mu, cfg, stride, replicate) = args
    P = make_preset("hypercube", d, half_width)
    V = _build_target(mu)
    xs, acc = baselines.run_mala(V, P, cfg)
    q = xs @ np.asarray(mu, dtype=np.float64)
    iters, vals = running_mean(q, stride)
    return {
        "replicate": replicate,
        "estimate": float(q.mean()),
        "trace_iters": iters,
        "trace_vals": vals,
        "acceptance_rate": acc,
    }


def _imh_worker(args):
    (d, mu, cfg, stride, replicate) = args
    V = _build_target(mu)
    xs, acc = baselines.run_imh(V, d, cfg)
    q = xs @ np.asarray(mu, dtype=np.float64)
    iters, vals = running_mean(q, stride)
    return {
        "replicate": replicate,
        "estimate": float(q.mean()),
        "trace_iters": iters,
        "trace_vals": vals,
        "acceptance_rate": acc,
    }


def _map_jobs(worker, jobs, threads):
    if threads <= 1 or len(jobs) <= 1:
        return [worker(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(worker, jobs))


def _summarize(results, reference):
    summary = diagnostics.replicate_ci([r["estimate"] for r in results])
    out = {
        "estimates": list(summary.means),
        "pooled_mean": summary.pooled_mean,
        "standard_error": summary.standard_error,
        "ci_half_width": summary.ci_half_width,
        "bias": summary.pooled_mean - reference,
        "abs_bias": abs(summary.pooled_mean - reference),
    }
    for key in (
        "acceptance_rate",
        "involution_rejection_rate",
        "dom_failure_rate",
        "move_rate",
        "final_h",
    ):
        if key in results[0]:
            out[key] = float(np.mean([r[key] for r in results]))
    return out


def bias_experiment(
    kind,
    d=5,
    N=100_000,
    R=10,
    base_seed=20240801,
    threads=1,
    h0=0.1,
    eta=None,
    K=30,
    beta=1.0,
    ablation_K=5,
    fp_tol=1e-10,
    stride=100,
    include_burn_in=False,
    mala_h=0.05,
    imh_factor=10,
):
    """Bias benchmark: metric HMC vs its no-involution ablation vs a reference.

    kind="hypercube": Gaussian benchmark target on the half-width-1/2 box;
    the reference value is the closed-form truncated-Gaussian oracle, and a
    MALA baseline runs alongside.  kind="simplex": the same target on the
    simplex; the reference is an independence-sampler run imh_factor times
    longer than the chains.

    The ablation runs without the involution check, with a reduced
    fixed-point budget (ablation_K iterations, not convergence-gated) and
    the same step-size adaptation; that is the stressed integrator whose
    bias the check is designed to remove.
    """
    if kind not in ("hypercube", "simplex"):
        raise ValueError(f"unknown experiment kind {kind!r}")
    half_width = 0.5
    mu = diagnostics.mu_vector(d)
    if eta is None:
        eta = default_eta(kind, d)

    def chain_cfg(seed, involution, budget):
        return ChainConfig(
            n_iters=N,
            h0=h0,
            beta=beta,
            eta=eta,
            K=budget,
            fp_tol=fp_tol,
            seed=seed,
            involution=involution,
            adapt=AdaptConfig(),
        )

    samplers = {}
    trace_rows = []

    jobs = [
        (kind, d, half_width, tuple(mu), chain_cfg(base_seed + i, True, K), stride, include_burn_in, i)
        for i in range(R)
    ]
    results = _map_jobs(_chain_worker, jobs, threads)

    jobs_ab = [
        (kind, d, half_width, tuple(mu), chain_cfg(base_seed + i, False, ablation_K), stride, include_burn_in, i)
        for i in range(R)
    ]
    results_ab = _map_jobs(_chain_worker, jobs_ab, threads)

    if kind == "hypercube":
        coord_means = diagnostics.truncated_box_gaussian_mean(mu, -half_width, half_width)
        reference = float(mu @ coord_means)
        oracle = {"kind": "closed_form", "Q_star": reference}
        jobs_ref = [
            (d, half_width, tuple(mu), baselines.MalaConfig(h=mala_h, N=N, seed=base_seed + i), stride, i)
            for i in range(R)
        ]
        results_ref = _map_jobs(_mala_worker, jobs_ref, threads)
        ref_name = "mala"
    else:
        cfg_ref = baselines.ImhConfig(N=imh_factor * N, seed=base_seed + 9999)
        ref_run = _imh_worker((d, tuple(mu), cfg_ref, stride * imh_factor, 0))
        reference = ref_run["estimate"]
        oracle = {
            "kind": "imh_reference",
            "Q_ref": reference,
            "iterations": imh_factor * N,
            "acceptance_rate": ref_run["acceptance_rate"],
        }
        jobs_ref = [
            (d, tuple(mu), baselines.ImhConfig(N=N, seed=base_seed + i), stride, i)
            for i in range(R)
        ]
        results_ref = _map_jobs(_imh_worker, jobs_ref, threads)
        ref_name = "imh"

    for name, results_n in (
        ("bhmc", results),
        ("bhmc_no_involution", results_ab),
        (ref_name, results_ref),
    ):
        samplers[name] = _summarize(results_n, reference)
        for r in results_n:
            for it, val in zip(r["trace_iters"], r["trace_vals"]):
                trace_rows.append((name, int(it), r["replicate"], float(val)))

    return {
        "name": f"{kind}_bias",
        "kind": kind,
        "d": d,
        "N": N,
        "R": R,
        "eta": eta,
        "beta": beta,
        "K": K,
        "ablation_K": ablation_K,
        "include_burn_in": include_burn_in,
        "mala_parameterization": baselines.MalaConfig().parameterization if kind == "hypercube" else None,
        "oracle": oracle,
        "samplers": samplers,
        "trace_rows": trace_rows,
    }


def _norm_mode_worker(args):
    (mode, d, half_width, N, h, eta, K, fp_tol, seed) = args
    P = make_preset("hypercube", d, half_width)
    V = UniformTarget()
    cfg = ChainConfig(
        n_iters=N,
        h0=h,
        eta=eta,
        K=K,
        fp_tol=fp_tol,
        seed=seed,
        involution=True,
        norm_mode=mode,
        adapt=None,
    )
    trace, stats = run_chain(V, P, cfg)
    rej = trace.involution_rejected
    inf_norm = np.abs(trace.xs).max(axis=1)
    split = {}
    for label, mask in (("rejected", rej), ("accepted", ~rej)):
        split[f"{label}_count"] = int(mask.sum())
        split[f"{label}_mean_inf_norm"] = (
            float(inf_norm[mask].mean()) if mask.any() else float("nan")
        )
    return {
        "mode": mode,
        "involution_rejection_rate": stats.involution_rejection_rate,
        "acceptance_rate": stats.acceptance_rate,
        "dom_failure_rate": stats.dom_failure_rate,
        **split,
        "xs": trace.xs,
        "involution_rejected": rej,
        "accepted": trace.accepted,
    }


def norm_ablation_experiment(
    d=2,
    N=25_000,
    h=0.8,
    eta=1e-3,
    K=30,
    fp_tol=1e-4,
    half_width=1.0,
    base_seed=20240801,
    threads=1,
):
    """Involution-check norm comparison on the box, uniform target.

    Runs the same chain configuration under both check norms at matched
    (h, eta) and reports, per mode, the involution rejection rate and the
    mean sup-norm of positions at rejected vs accepted iterations — the
    per-sample positions are returned for CSV emission.

    The fixed-point gate is deliberately coarser here (1e-4) than the
    sampling default: the norm comparison is informative only when
    round-trip errors land near eta, and a 1e-10 gate pushes every
    surviving flow's error so far below eta that both norms agree on
    every decision.
    """
    jobs = [
        (mode, d, half_width, N, h, eta, K, fp_tol, base_seed)
        for mode in ("self_concordant", "euclidean")
    ]
    results = _map_jobs(_norm_mode_worker, jobs, threads)
    modes = {}
    position_rows = []
    for r in results:
        mode = r["mode"]
        modes[mode] = {
            k: r[k]
            for k in (
                "involution_rejection_rate",
                "acceptance_rate",
                "dom_failure_rate",
                "rejected_count",
                "rejected_mean_inf_norm",
                "accepted_count",
                "accepted_mean_inf_norm",
            )
        }
        xs = r["xs"]
        for i in range(xs.shape[0]):
            position_rows.append(
                (
                    mode,
                    i + 1,
                    *(float(v) for v in xs[i]),
                    int(r["involution_rejected"][i]),
                    int(r["accepted"][i]),
                )
            )
    return {
        "name": "norm_ablation",
        "d": d,
        "N": N,
        "h": h,
        "eta": eta,
        "half_width": half_width,
        "modes": modes,
        "position_rows": position_rows,
    }
