"""Independent reference computations shared by the test modules.

Everything here deliberately avoids the library's windowed/optimized code
paths: plain O(n) sums, direct linear-algebra solves, and brute-force
enumeration, so that agreement is meaningful.
"""

from __future__ import annotations

import math

import numpy as np

from condcopula.kernels import BIWEIGHT, TRIWEIGHT, SmoothedIndicator


def naive_p_hat(x_obs, k, x, h1, deriv=0):
    """Full-sum window moment, no sorting or windowing."""
    u = (x - np.asarray(x_obs)) / h1
    from condcopula.kernels import moment_weight

    return float(np.sum(moment_weight(TRIWEIGHT, k, u, deriv))) / (len(x_obs) * h1 ** (1 + deriv))


def naive_Q_hat(x_obs, y_obs, k, y, x, h1, h2):
    si = SmoothedIndicator(BIWEIGHT, h2)
    u = (x - np.asarray(x_obs)) / h1
    from condcopula.kernels import moment_weight

    w = moment_weight(TRIWEIGHT, k, u)
    return float(np.sum(si(y, np.asarray(y_obs)) * w)) / (len(x_obs) * h1)


def naive_q_hat(x_obs, y_obs, k, y, x, h1, h2):
    u = (x - np.asarray(x_obs)) / h1
    from condcopula.kernels import moment_weight

    w = moment_weight(TRIWEIGHT, k, u)
    dens = BIWEIGHT((y - np.asarray(y_obs)) / h2) / h2
    return float(np.sum(dens * w)) / (len(x_obs) * h1)


def wls_intercept(x_obs, y_obs, y, x, h1, h2):
    """Direct weighted-least-squares solve of the defining minimisation.

    Fits a + b (X_i - x) to the smoothed indicators with triweight
    x-weights and returns the intercept, or None if the 2x2 normal system
    is singular.
    """
    x_obs = np.asarray(x_obs, dtype=float)
    y_obs = np.asarray(y_obs, dtype=float)
    si = SmoothedIndicator(BIWEIGHT, h2)
    w = TRIWEIGHT((x - x_obs) / h1)
    design = np.column_stack([np.ones_like(x_obs), x_obs - x])
    weighted = design * w[:, None]
    normal = design.T @ weighted
    rhs = weighted.T @ si(y, y_obs)
    try:
        sol = np.linalg.solve(normal, rhs)
    except np.linalg.LinAlgError:
        return None
    return float(sol[0])


def step_sup_distance(ecdf_f, ecdf_g):
    """Exact sup |F - G| for two ECDFs, by scanning all jump points."""
    pts = np.union1d(ecdf_f.sorted_values, ecdf_g.sorted_values)
    sup = 0.0
    for p in pts:
        sup = max(sup, abs(ecdf_f(p) - ecdf_g(p)))
        # value just left of the jump
        sup = max(sup, abs(ecdf_f(p - 1e-12) - ecdf_g(p - 1e-12)))
    return sup


def step_generalized_inverse(values, u):
    """inf{v in sample : fraction(<= v) >= u} by direct enumeration."""
    vs = sorted(values)
    n = len(vs)
    for v in vs:
        if sum(1 for w in vs if w <= v) / n >= u:
            return v
    raise AssertionError("u must be <= 1")


def brute_force_empirical_copula(v1, v2, u1, u2):
    """Empirical copula by pure-Python enumeration, no numpy ranking."""
    n = len(v1)
    t1 = step_generalized_inverse(v1, u1)
    t2 = step_generalized_inverse(v2, u2)
    return sum(1 for a, b in zip(v1, v2) if a <= t1 and b <= t2) / n


def gauss_legendre_integral(fn, a, b, nodes=64):
    x, w = np.polynomial.legendre.leggauss(nodes)
    t = 0.5 * (b - a) * (x + 1.0) + a
    return 0.5 * (b - a) * float(np.sum(w * fn(t)))


def central_difference(fn, t, step):
    return (fn(t + step) - fn(t - step)) / (2.0 * step)


def second_difference(fn, t, step):
    return (fn(t + step) - 2.0 * fn(t) + fn(t - step)) / step**2
