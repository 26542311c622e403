"""Target potentials V with densities proportional to exp(-V) on the polytope."""

import numpy as np


class UniformTarget:
    """V identically zero: the uniform distribution on the polytope."""

    kind = "uniform"

    def value(self, x):
        return 0.0

    def gradient(self, x):
        return np.zeros_like(np.asarray(x, dtype=np.float64))


class GaussianTarget:
    """V(x) = ½‖x − mu‖²: a unit-covariance Gaussian truncated to the polytope."""

    kind = "gaussian"

    def __init__(self, mu):
        self.mu = np.ascontiguousarray(mu, dtype=np.float64)

    def value(self, x):
        diff = np.asarray(x, dtype=np.float64) - self.mu
        return 0.5 * float(diff @ diff)

    def gradient(self, x):
        return np.asarray(x, dtype=np.float64) - self.mu
