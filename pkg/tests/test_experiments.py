"""Bias and norm-comparison experiment drivers (scaled-down runs)."""

import numpy as np
import pytest

import polyhmc as ph
from polyhmc import experiments


def test_running_mean_basic():
    idx, vals = experiments.running_mean(np.array([1.0, 2.0, 3.0, 4.0, 5.0]), 2)
    np.testing.assert_array_equal(idx, [2, 4, 5])
    np.testing.assert_allclose(vals, [1.5, 2.5, 3.0])
    # a stride longer than the series still reports the final mean
    idx, vals = experiments.running_mean(np.array([2.0, 4.0]), 10)
    np.testing.assert_array_equal(idx, [2])
    np.testing.assert_allclose(vals, [3.0])


def test_running_mean_matches_cumulative():
    rng = np.random.default_rng(1)
    q = rng.standard_normal(307)
    idx, vals = experiments.running_mean(q, 50)
    assert idx[-1] == 307
    for i, v in zip(idx, vals):
        np.testing.assert_allclose(v, q[:i].mean())


def test_default_eta_table():
    assert experiments.default_eta("hypercube", 5) == 5.0
    assert experiments.default_eta("hypercube", 10) == 10.0
    assert experiments.default_eta("simplex", 5) == 10.0
    assert experiments.default_eta("simplex", 10) == 200.0
    assert experiments.default_eta("hypercube", 7) == 10.0  # fallback


def test_hypercube_bias_structure():
    res = experiments.bias_experiment(
        "hypercube", d=2, N=1200, R=2, base_seed=99, stride=400, mala_h=0.05
    )
    assert res["oracle"]["kind"] == "closed_form"
    np.testing.assert_allclose(
        res["oracle"]["Q_star"],
        10.0 * ph.truncated_box_gaussian_mean(np.array([10.0]), -0.5, 0.5)[0],
        rtol=1e-12,
    )
    assert set(res["samplers"]) == {"bhmc", "bhmc_no_involution", "mala"}
    for name, summary in res["samplers"].items():
        assert len(summary["estimates"]) == 2
        assert np.isfinite(summary["pooled_mean"])
        assert np.isfinite(summary["abs_bias"])
        assert summary["ci_half_width"] >= 0.0
        np.testing.assert_allclose(
            summary["abs_bias"],
            abs(summary["pooled_mean"] - res["oracle"]["Q_star"]),
            rtol=1e-12,
        )
    assert res["mala_parameterization"] == "step_sd"
    samplers_in_trace = {row[0] for row in res["trace_rows"]}
    assert samplers_in_trace == {"bhmc", "bhmc_no_involution", "mala"}
    # each replicate reports the running mean at every stride plus the end
    rows_b = [r for r in res["trace_rows"] if r[0] == "bhmc" and r[2] == 0]
    assert [r[1] for r in rows_b] == [400, 800, 1200]


def test_simplex_bias_structure():
    res = experiments.bias_experiment(
        "simplex", d=2, N=800, R=2, base_seed=5, stride=400, imh_factor=2
    )
    assert res["oracle"]["kind"] == "imh_reference"
    assert np.isfinite(res["oracle"]["Q_ref"])
    assert res["oracle"]["iterations"] == 2 * 800  # imh_factor times N
    assert set(res["samplers"]) == {"bhmc", "bhmc_no_involution", "imh"}


def test_bias_experiment_deterministic():
    kw = dict(d=2, N=600, R=2, base_seed=17, stride=300)
    a = experiments.bias_experiment("hypercube", **kw)
    b = experiments.bias_experiment("hypercube", **kw)
    for name in a["samplers"]:
        np.testing.assert_array_equal(
            a["samplers"][name]["estimates"], b["samplers"][name]["estimates"]
        )


def test_bias_experiment_threads_match_serial():
    kw = dict(d=2, N=500, R=2, base_seed=23, stride=250)
    serial = experiments.bias_experiment("hypercube", threads=1, **kw)
    parallel = experiments.bias_experiment("hypercube", threads=2, **kw)
    for name in serial["samplers"]:
        np.testing.assert_array_equal(
            serial["samplers"][name]["estimates"],
            parallel["samplers"][name]["estimates"],
        )
    assert serial["trace_rows"] == parallel["trace_rows"]


def test_norm_ablation_structure_and_determinism():
    res = experiments.norm_ablation_experiment(N=1500, base_seed=31)
    assert set(res["modes"]) == {"euclidean", "self_concordant"}
    for mode, summary in res["modes"].items():
        assert 0.0 <= summary["involution_rejection_rate"] <= 1.0
        assert summary["rejected_count"] + summary["accepted_count"] <= 1500
    # position rows: (mode, iter, x_1, x_2, involution_rejected, accepted)
    assert len(res["position_rows"]) == 2 * 1500
    row = res["position_rows"][0]
    assert row[0] in {"euclidean", "self_concordant"} and len(row) == 6
    again = experiments.norm_ablation_experiment(N=1500, base_seed=31)
    assert again["position_rows"] == res["position_rows"]
    for mode in res["modes"]:
        assert (
            res["modes"][mode]["involution_rejection_rate"]
            == again["modes"][mode]["involution_rejection_rate"]
        )
