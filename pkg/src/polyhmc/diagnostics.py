"""Estimators and oracles for the sampling experiments.

Provides the benchmark linear functional and its mean direction, the exact
mean of an isotropic Gaussian truncated to a box (the ground-truth oracle
for the hypercube experiments, exact because the box-truncated isotropic
Gaussian factorizes across coordinates), Geyer-style effective sample size,
and across-replicate confidence intervals.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri


@dataclass(frozen=True)
class FunctionalSeries:
    """A scalar series f(x_n) along a chain, with a label for reports."""

    values: np.ndarray
    label: str = ""

    def __post_init__(self):
        v = np.ascontiguousarray(self.values, dtype=np.float64)
        if v.ndim != 1:
            raise ValueError("series must be one-dimensional")
        if not np.all(np.isfinite(v)):
            raise ValueError("series contains non-finite values")
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.values.shape[0]


@dataclass(frozen=True)
class ReplicateSummary:
    """Across-replicate pooled mean with a normal-theory 95% interval."""

    means: tuple
    pooled_mean: float
    standard_error: float
    ci_half_width: float

    @property
    def ci(self):
        return (self.pooled_mean - self.ci_half_width, self.pooled_mean + self.ci_half_width)


def mu_vector(d):
    """Mean direction of the benchmark Gaussian: (0, 10, c, ..., c), c = 10/sqrt(d-1)."""
    if d < 2:
        raise ValueError("d must be >= 2")
    mu = np.full(d, 10.0 / np.sqrt(d - 1.0))
    mu[0] = 0.0
    mu[1] = 10.0
    return mu


def q_functional(x, mu):
    """The benchmark linear functional <x, mu>."""
    x = np.asarray(x, dtype=np.float64)
    mu = np.asarray(mu, dtype=np.float64)
    if x.shape != mu.shape:
        raise ValueError("x and mu must have the same length")
    return float(x @ mu)


def _truncated_mean_quadrature(mu_j, lo, hi, n_nodes=400):
    """Tilted Gauss-Legendre fallback for means of extreme truncations.

    Factors the largest exponent out of the integrand so the ratio
    int x w(x) dx / int w(x) dx survives even when both integrals underflow.
    """
    nodes, weights = np.polynomial.legendre.leggauss(n_nodes)
    mid, half = 0.5 * (hi + lo), 0.5 * (hi - lo)
    x = mid + half * nodes
    log_w = -0.5 * (x - mu_j) ** 2
    log_w -= log_w.max()
    w = weights * np.exp(log_w)
    return float(np.sum(x * w) / np.sum(w))


def truncated_box_gaussian_mean(mu, lo, hi):
    """Per-coordinate means of N(mu, I) truncated to the box [lo, hi]^d.

    Uses the standard truncated-normal moment formula
    m = mu_j + (pdf(alpha) - pdf(beta)) / (cdf(beta) - cdf(alpha)) with
    alpha = lo - mu_j, beta = hi - mu_j, switching to a tilted quadrature
    when the cdf difference underflows (both endpoints deep in one tail).
    """
    if not lo < hi:
        raise ValueError("need lo < hi")
    mu = np.atleast_1d(np.asarray(mu, dtype=np.float64))
    out = np.empty_like(mu)
    inv_sqrt_2pi = 1.0 / np.sqrt(2.0 * np.pi)
    for j, mu_j in enumerate(mu):
        alpha, beta = lo - mu_j, hi - mu_j
        # evaluate the cdf difference in whichever tail keeps both terms
        # representable: ndtr(z) saturates at 1 long before ndtr(-z) underflows
        if alpha + beta > 0.0:
            z = ndtr(-alpha) - ndtr(-beta)
        else:
            z = ndtr(beta) - ndtr(alpha)
        pdf_alpha = inv_sqrt_2pi * np.exp(-0.5 * alpha * alpha)
        pdf_beta = inv_sqrt_2pi * np.exp(-0.5 * beta * beta)
        if z <= 0.0 or not np.isfinite(z):
            out[j] = _truncated_mean_quadrature(mu_j, lo, hi)
            continue
        m = mu_j + (pdf_alpha - pdf_beta) / z
        if not (lo <= m <= hi):
            m = _truncated_mean_quadrature(mu_j, lo, hi)
        out[j] = m
    return out


def sample_box_gaussian(mu, lo, hi, n, rng):
    """n exact draws from N(mu, I) truncated to [lo, hi]^d by inverse cdf.

    Per-coordinate: u uniform on (cdf(alpha), cdf(beta)) mapped through the
    inverse normal cdf.  Exact and fast for any mu, including coordinates
    whose acceptance probability under naive rejection would be tiny.
    """
    mu = np.atleast_1d(np.asarray(mu, dtype=np.float64))
    d = mu.shape[0]
    out = np.empty((n, d))
    for j in range(d):
        a, b = ndtr(lo - mu[j]), ndtr(hi - mu[j])
        u = a + (b - a) * rng.random(n)
        out[:, j] = mu[j] + ndtri(u)
    return out


def _autocorrelations(v):
    """Normalized autocorrelations rho_0..rho_{N-1} via FFT."""
    n = v.shape[0]
    centered = v - v.mean()
    size = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(centered, size)
    acov = np.fft.irfft(f * np.conjugate(f), size)[:n].real / n
    if acov[0] <= 0.0:
        return None
    return acov / acov[0]


def ess(series):
    """Effective sample size N / (1 + 2 sum rho_k) with Geyer's truncation.

    Autocorrelations enter through the paired sums Gamma_m = rho_{2m} +
    rho_{2m+1}, summed while positive (the initial positive sequence).  A
    zero-variance series has ESS defined as N.  Anticorrelated series can
    legitimately return ESS > N; the value is not clamped.
    """
    v = series.values if isinstance(series, FunctionalSeries) else None
    if v is None:
        v = np.ascontiguousarray(series, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError("series must be one-dimensional")
    n = v.shape[0]
    if n < 2:
        return float(n)
    rho = _autocorrelations(v)
    if rho is None:
        return float(n)
    gamma_sum = 0.0
    m = 0
    while 2 * m + 1 < n:
        gamma = rho[2 * m] + rho[2 * m + 1]
        if gamma <= 0.0:
            break
        gamma_sum += gamma
        m += 1
    tau = -1.0 + 2.0 * gamma_sum
    tau = max(tau, 1.0 / n)
    return float(n / tau)


def replicate_ci(means):
    """Pooled mean with SE = sample std / sqrt(R) and a 1.96-SE interval."""
    means = [float(m) for m in means]
    r = len(means)
    if r < 2:
        raise ValueError("need at least 2 replicate means")
    arr = np.asarray(means)
    pooled = float(arr.mean())
    se = float(arr.std(ddof=1) / np.sqrt(r))
    return ReplicateSummary(
        means=tuple(means),
        pooled_mean=pooled,
        standard_error=se,
        ci_half_width=1.96 * se,
    )
