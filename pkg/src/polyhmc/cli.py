"""Command-line front end: sample | experiment | check.

Configuration is one JSON document (--config) plus dotted-key overrides
(--set a.b=value, value parsed as JSON when possible).  All CSV output is
RFC 4180 (CRLF, header row first) with floats at 17 significant digits so
64-bit values round-trip exactly.  meta.json always records the fully
resolved configuration, package version, and wall time, making every run
replayable.  Replicates may run in parallel (--threads); files are written
by the parent process only after every replicate has finished.
"""

import argparse
import copy
import csv
import importlib.metadata
import json
import subprocess
import sys
import time
from pathlib import Path

import numpy as np

from . import baselines, barrier, checks, diagnostics, experiments
from .sampler import AdaptConfig, ChainConfig, run_chain
from .targets import GaussianTarget, UniformTarget

SAMPLERS = ("bhmc", "bhmc_no_involution", "mala", "imh")
EXPERIMENTS = ("hypercube_bias", "simplex_bias", "norm_ablation")

SAMPLE_DEFAULTS = {
    "sampler": "bhmc",
    "polytope": "hypercube",
    "d": 5,
    "half_width": 0.5,
    "target": "uniform",
    "mu": "paper_mu",
    "replicates": 1,
    "n_iters": 1000,
    "h0": 0.1,
    "beta": 1.0,
    "eta": None,
    "K": 30,
    "fp_tol": 1e-10,
    "blow_up": 1e6,
    "norm_mode": "self_concordant",
    "adapt": {"target_accept": 0.5, "rate_exponent": 0.7, "burn_in": 0.2},
    "seed": 20240801,
    "threads": 1,
    "out": "out",
    "mala": {"h": 0.05, "parameterization": "step_sd"},
    "include_burn_in": False,
}

EXPERIMENT_DEFAULTS = {
    "name": "hypercube_bias",
    "d": 5,
    "N": 100_000,
    "R": 10,
    "seed": 20240801,
    "threads": 1,
    "out": "out",
    "h0": 0.1,
    "eta": None,
    "K": 30,
    "beta": 1.0,
    "ablation_K": 5,
    "fp_tol": 1e-10,
    "stride": 100,
    "include_burn_in": False,
    "mala_h": 0.05,
    "imh_factor": 10,
    # norm-ablation specific
    "h": 0.8,
    "ablation_d": 2,
    "ablation_eta": 1e-3,
    "ablation_fp_tol": 1e-4,
    "ablation_N": 25_000,
    "half_width": 1.0,
}


class ConfigError(ValueError):
    pass


def _version():
    try:
        base = importlib.metadata.version("polyhmc")
    except importlib.metadata.PackageNotFoundError:
        base = "unknown"
    try:
        rev = subprocess.run(
            ["git", "rev-parse", "--short", "HEAD"],
            capture_output=True,
            text=True,
            timeout=5,
            cwd=Path(__file__).parent,
        )
        if rev.returncode == 0 and rev.stdout.strip():
            return f"{base}+g{rev.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return base


def _parse_set(expr):
    if "=" not in expr:
        raise ConfigError(f"--set expects key=value, got {expr!r}")
    key, raw = expr.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip(), value


def _apply_override(cfg, key, value):
    parts = key.split(".")
    node = cfg
    for part in parts[:-1]:
        if not isinstance(node.get(part), dict):
            node[part] = {}
        node = node[part]
    node[parts[-1]] = value


def resolve_config(defaults, config_path=None, sets=(), seed=None, out=None, threads=None):
    """Defaults <- config file <- --set overrides <- direct flags."""
    cfg = copy.deepcopy(defaults)
    if config_path is not None:
        try:
            loaded = json.loads(Path(config_path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {config_path}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError("config file must contain a JSON object")
        for k, v in loaded.items():
            if isinstance(v, dict) and isinstance(cfg.get(k), dict):
                cfg[k].update(v)
            else:
                cfg[k] = v
    for expr in sets:
        key, value = _parse_set(expr)
        _apply_override(cfg, key, value)
    if seed is not None:
        cfg["seed"] = seed
    if out is not None:
        cfg["out"] = out
    if threads is not None:
        cfg["threads"] = threads
    return cfg


def _fmt(value):
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17g}"
    return value


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    raise TypeError(f"not JSON serializable: {type(obj)}")


def write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _build_polytope(cfg):
    name = cfg["polytope"]
    if name == "hypercube":
        return barrier.make_preset("hypercube", int(cfg["d"]), float(cfg["half_width"])), "hypercube"
    if name == "simplex":
        return barrier.make_preset("simplex", int(cfg["d"])), "simplex"
    path = Path(name)
    if not path.exists():
        raise ConfigError(f"polytope {name!r} is neither a preset nor an existing file")
    return barrier.load_polytope(path), "file"


def _build_target(cfg, d):
    target = cfg["target"]
    if target == "uniform":
        return UniformTarget(), None
    if target == "gaussian":
        mu = cfg.get("mu", "paper_mu")
        if isinstance(mu, str):
            if mu != "paper_mu":
                raise ConfigError(f"unknown mu spec {mu!r}")
            mu = diagnostics.mu_vector(d)
        mu = np.asarray(mu, dtype=np.float64)
        if mu.shape != (d,):
            raise ConfigError(f"mu must have length {d}")
        return GaussianTarget(mu), mu
    raise ConfigError(f"unknown target {target!r}")


def _chain_config(cfg, seed, involution):
    adapt = cfg.get("adapt")
    adapt_cfg = AdaptConfig(**adapt) if isinstance(adapt, dict) else None
    eta = cfg["eta"]
    if eta is None:
        kind = cfg["polytope"] if cfg["polytope"] in ("hypercube", "simplex") else None
        eta = experiments.default_eta(kind, int(cfg["d"])) if kind else 10.0
    return ChainConfig(
        n_iters=int(cfg["n_iters"]),
        h0=float(cfg["h0"]),
        beta=float(cfg["beta"]),
        eta=float(eta),
        K=int(cfg["K"]),
        fp_tol=float(cfg["fp_tol"]),
        blow_up=float(cfg["blow_up"]),
        seed=seed,
        involution=involution,
        norm_mode=cfg["norm_mode"],
        adapt=adapt_cfg,
    )


def _sample_chain_worker(args):
    cfg, replicate = args
    P, _ = _build_polytope(cfg)
    V, mu = _build_target(cfg, P.d)
    chain_cfg = _chain_config(cfg, int(cfg["seed"]) + replicate, cfg["sampler"] == "bhmc")
    trace, stats = run_chain(V, P, chain_cfg)
    burn = 0 if cfg["include_burn_in"] else chain_cfg.burn_in_iters
    series = trace.xs @ mu if mu is not None else trace.xs[:, 0]
    stats_dict = {
        "acceptance_rate": stats.acceptance_rate,
        "involution_rejection_rate": stats.involution_rejection_rate,
        "dom_failure_rate": stats.dom_failure_rate,
        "move_rate": stats.move_rate,
        "final_h": stats.final_h,
        "n_iters": stats.n_iters,
        "burn_in_iters": stats.burn_in_iters,
        "mean_x": stats.mean_x.tolist(),
    }
    return {
        "replicate": replicate,
        "xs": trace.xs,
        "stats": stats_dict,
        "functional_mean": float(series[burn:].mean()),
    }


def _sample_mala_worker(args):
    cfg, replicate = args
    P, _ = _build_polytope(cfg)
    V, mu = _build_target(cfg, P.d)
    mcfg = baselines.MalaConfig(
        h=float(cfg["mala"]["h"]),
        N=int(cfg["n_iters"]),
        seed=int(cfg["seed"]) + replicate,
        parameterization=cfg["mala"]["parameterization"],
    )
    xs, acc = baselines.run_mala(V, P, mcfg)
    series = xs @ mu if mu is not None else xs[:, 0]
    stats_dict = {
        "acceptance_rate": acc,
        "n_iters": mcfg.N,
        "mean_x": xs.mean(axis=0).tolist(),
    }
    return {
        "replicate": replicate,
        "xs": xs,
        "stats": stats_dict,
        "functional_mean": float(series.mean()),
    }


def _sample_imh_worker(args):
    cfg, replicate = args
    d = int(cfg["d"])
    V, mu = _build_target(cfg, d)
    icfg = baselines.ImhConfig(N=int(cfg["n_iters"]), seed=int(cfg["seed"]) + replicate)
    xs, acc = baselines.run_imh(V, d, icfg)
    series = xs @ mu if mu is not None else xs[:, 0]
    stats_dict = {
        "acceptance_rate": acc,
        "n_iters": icfg.N,
        "mean_x": xs.mean(axis=0).tolist(),
    }
    return {
        "replicate": replicate,
        "xs": xs,
        "stats": stats_dict,
        "functional_mean": float(series.mean()),
    }


def cmd_sample(cfg):
    if cfg["sampler"] not in SAMPLERS:
        raise ConfigError(f"unknown sampler {cfg['sampler']!r} (choose from {SAMPLERS})")
    if cfg["sampler"] == "imh" and cfg["polytope"] != "simplex":
        raise ConfigError("the independence sampler is defined on the simplex preset only")
    t0 = time.perf_counter()
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)

    if cfg["eta"] is None:
        kind = cfg["polytope"] if cfg["polytope"] in ("hypercube", "simplex") else None
        cfg["eta"] = experiments.default_eta(kind, int(cfg["d"])) if kind else 10.0

    worker = {
        "bhmc": _sample_chain_worker,
        "bhmc_no_involution": _sample_chain_worker,
        "mala": _sample_mala_worker,
        "imh": _sample_imh_worker,
    }[cfg["sampler"]]
    R = int(cfg["replicates"])
    if R < 1:
        raise ConfigError("replicates must be >= 1")
    jobs = [(cfg, i) for i in range(R)]
    results = experiments._map_jobs(worker, jobs, int(cfg["threads"]))
    results.sort(key=lambda r: r["replicate"])

    d = results[0]["xs"].shape[1]
    header = ["replicate", "iter"] + [f"x_{j + 1}" for j in range(d)]
    rows = []
    for r in results:
        for i in range(r["xs"].shape[0]):
            rows.append([r["replicate"], i + 1, *r["xs"][i]])
    write_csv(out / "samples.csv", header, rows)

    stats_payload = {"replicates": [r["stats"] for r in results]}
    if R >= 2:
        summary = diagnostics.replicate_ci([r["functional_mean"] for r in results])
        stats_payload["summary"] = {
            "means": list(summary.means),
            "pooled_mean": summary.pooled_mean,
            "standard_error": summary.standard_error,
            "ci_half_width": summary.ci_half_width,
        }
    else:
        stats_payload["summary"] = {"means": [results[0]["functional_mean"]]}
    write_json(out / "stats.json", stats_payload)

    meta = {
        "command": "sample",
        "config": cfg,
        "version": _version(),
        "wall_time_seconds": time.perf_counter() - t0,
    }
    write_json(out / "meta.json", meta)
    return 0


def cmd_experiment(cfg):
    name = cfg["name"]
    if name not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {name!r} (choose from {EXPERIMENTS})")
    t0 = time.perf_counter()
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)

    if name in ("hypercube_bias", "simplex_bias"):
        kind = "hypercube" if name == "hypercube_bias" else "simplex"
        if cfg["eta"] is None:
            cfg["eta"] = experiments.default_eta(kind, int(cfg["d"]))
        result = experiments.bias_experiment(
            kind=kind,
            d=int(cfg["d"]),
            N=int(cfg["N"]),
            R=int(cfg["R"]),
            base_seed=int(cfg["seed"]),
            threads=int(cfg["threads"]),
            h0=float(cfg["h0"]),
            eta=None if cfg["eta"] is None else float(cfg["eta"]),
            K=int(cfg["K"]),
            beta=float(cfg["beta"]),
            ablation_K=int(cfg["ablation_K"]),
            fp_tol=float(cfg["fp_tol"]),
            stride=int(cfg["stride"]),
            include_burn_in=bool(cfg["include_burn_in"]),
            mala_h=float(cfg["mala_h"]),
            imh_factor=int(cfg["imh_factor"]),
        )
        trace_rows = result.pop("trace_rows")
        write_csv(out / "trace.csv", ["sampler", "iter", "replicate", "estimate"], trace_rows)
    else:
        result = experiments.norm_ablation_experiment(
            d=int(cfg["ablation_d"]),
            N=int(cfg["ablation_N"]),
            h=float(cfg["h"]),
            eta=float(cfg["ablation_eta"]),
            K=int(cfg["K"]),
            fp_tol=float(cfg["ablation_fp_tol"]),
            half_width=float(cfg["half_width"]),
            base_seed=int(cfg["seed"]),
            threads=int(cfg["threads"]),
        )
        rows = result.pop("position_rows")
        header = (
            ["mode", "iter"]
            + [f"x_{j + 1}" for j in range(result["d"])]
            + ["involution_rejected", "accepted"]
        )
        write_csv(out / "trace.csv", header, rows)

    write_json(out / "stats.json", result)
    meta = {
        "command": "experiment",
        "config": cfg,
        "version": _version(),
        "wall_time_seconds": time.perf_counter() - t0,
    }
    write_json(out / "meta.json", meta)
    return 0


def cmd_check(seed=0, stream=None):
    stream = stream if stream is not None else sys.stdout
    rows, ok = checks.run_all_checks(seed=seed)
    width = max(len(f"{r['suite']}:{r['name']}") for r in rows)
    for r in rows:
        label = f"{r['suite']}:{r['name']}"
        status = "PASS" if r["passed"] else "FAIL"
        print(f"{label:<{width}}  {status}  {r['detail']}", file=stream)
    n_fail = sum(not r["passed"] for r in rows)
    print(
        f"{len(rows) - n_fail}/{len(rows)} checks passed"
        + (f", {n_fail} FAILED" if n_fail else ""),
        file=stream,
    )
    return 0 if ok else 1


def build_parser():
    parser = argparse.ArgumentParser(
        prog="polyhmc",
        description="Polytope sampling with metric HMC: sample, experiment, self-check.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument(
        "--set",
        action="append",
        default=[],
        metavar="K=V",
        dest="sets",
        help="override a config key (dotted paths, JSON values)",
    )
    common.add_argument("--out", help="output directory")
    common.add_argument("--seed", type=int, help="base RNG seed")
    common.add_argument("--threads", type=int, help="parallel replicate workers")

    sub.add_parser("sample", parents=[common], help="run replicated sampling chains")
    p_exp = sub.add_parser("experiment", parents=[common], help="run a named experiment")
    p_exp.add_argument(
        "name", nargs="?", choices=EXPERIMENTS, help="experiment name (or set in config)"
    )
    p_check = sub.add_parser("check", help="run property self-checks")
    p_check.add_argument("--seed", type=int, default=0, help="suite RNG seed")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "check":
            return cmd_check(seed=args.seed)
        if args.command == "sample":
            cfg = resolve_config(
                SAMPLE_DEFAULTS, args.config, args.sets, args.seed, args.out, args.threads
            )
            return cmd_sample(cfg)
        cfg = resolve_config(
            EXPERIMENT_DEFAULTS, args.config, args.sets, args.seed, args.out, args.threads
        )
        if args.name is not None:
            cfg["name"] = args.name
        return cmd_experiment(cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
