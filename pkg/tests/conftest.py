"""Shared generators and independent numerical oracles.

The oracles here deliberately avoid the ratio-system solver's machinery:
the 1-d oracle is plain sign-change bisection on the log-density slope,
and the n-d oracle is damped Newton on the gradient in the original
coordinates from a dense grid.  Agreement between these and the library
solver is what the solver tests certify.
"""

import numpy as np
import pytest
from scipy.optimize import brentq
from scipy.special import logsumexp

from modecount import Mixture


def random_mixture_1d(rng, k_max=4):
    k = int(rng.integers(2, k_max + 1))
    means = rng.uniform(-5.0, 5.0, size=(k, 1))
    sigmas = rng.uniform(0.3, 2.0, size=k)
    covariances = np.array([[[s ** 2]] for s in sigmas])
    weights = rng.uniform(0.2, 1.0, size=k)
    return Mixture.from_arrays(weights, means, covariances)


def random_spd(rng, d, scale=1.0):
    a = rng.standard_normal((d, d))
    return scale * (a @ a.T + d * np.eye(d))


def log_slope_1d(mixture):
    """Scalar d/dx log Phi(x) independent of the library evaluation path."""
    mu = mixture.means[:, 0]
    var = mixture.covariances[:, 0, 0]
    logw = np.log(mixture.weights)

    def value(x):
        lp = -0.5 * (x - mu) ** 2 / var - 0.5 * np.log(2.0 * np.pi * var) + logw
        r = np.exp(lp - logsumexp(lp))
        return float((r * (mu - x) / var).sum())

    return value


def oracle_critical_points_1d(mixture, n_grid=20001):
    """All zeros of Phi' by grid sign changes plus bisection refinement."""
    mu = mixture.means[:, 0]
    var = mixture.covariances[:, 0, 0]
    sd = float(np.sqrt(var.max()))
    lo, hi = float(mu.min()) - 6.0 * sd, float(mu.max()) + 6.0 * sd
    xs = np.linspace(lo, hi, n_grid)
    lp = (-0.5 * (xs[None, :] - mu[:, None]) ** 2 / var[:, None]
          - 0.5 * np.log(2.0 * np.pi * var[:, None])
          + np.log(mixture.weights)[:, None])
    resp = np.exp(lp - logsumexp(lp, axis=0))
    vals = (resp * (mu[:, None] - xs[None, :]) / var[:, None]).sum(axis=0)
    f = log_slope_1d(mixture)
    roots = []
    for i in range(n_grid - 1):
        if vals[i] == 0.0:
            roots.append(float(xs[i]))
        elif vals[i + 1] != 0.0 and vals[i] * vals[i + 1] < 0.0:
            roots.append(float(brentq(f, xs[i], xs[i + 1], xtol=1e-13)))
    if vals[-1] == 0.0:
        roots.append(float(xs[-1]))
    return np.array(sorted(roots))


def oracle_critical_points_nd(mixture, lo, hi, per_axis=15, tol=1e-10):
    """Critical points by direct-space damped Newton from a dense grid.

    Newton runs on g(x) = grad Phi / Phi with Jacobian H/Phi - g g^T; the
    iteration variable and start geometry share nothing with the reduced
    ratio system.
    """
    d = mixture.dim
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    axes = [np.linspace(lo[i], hi[i], per_axis) for i in range(d)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    found = []
    for x0 in grid:
        x = x0.copy()
        _, g, h = mixture.relative_derivatives(x)
        gn = np.linalg.norm(g)
        converged = False
        for _ in range(100):
            if gn <= tol:
                converged = True
                break
            jac = h - np.outer(g, g)
            try:
                step = np.linalg.solve(jac, -g)
            except np.linalg.LinAlgError:
                break
            scale, improved = 1.0, False
            for _ in range(40):
                cand = x + scale * step
                _, gc, hc = mixture.relative_derivatives(cand)
                gcn = float(np.linalg.norm(gc))
                if np.isfinite(gcn) and gcn < gn:
                    x, g, h, gn = cand, gc, hc, gcn
                    improved = True
                    break
                scale *= 0.5
            if not improved:
                break
        if converged and np.all(x >= lo - 1.0) and np.all(x <= hi + 1.0):
            found.append(x)
    reps = []
    for x in sorted(found, key=tuple):
        if not any(np.linalg.norm(x - r) <= 1e-6 * (1.0 + np.linalg.norm(r)) for r in reps):
            reps.append(x)
    return reps


@pytest.fixture
def pair_mixture():
    """The well-separated symmetric pair: modes near +-1.9986514, dip at 0."""
    return Mixture.from_arrays(
        [0.5, 0.5], np.array([[-2.0], [2.0]]), shared_covariance=np.eye(1)
    )
