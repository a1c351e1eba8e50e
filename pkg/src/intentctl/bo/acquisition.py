"""Acquisition functions over GP posteriors, maximization-oriented.

Everything here takes plain (mu, sigma) arrays so the closed forms can be
tested against Monte Carlo without touching a model. The constrained
acquisition used by the optimizer is log-EI plus summed log feasibility —
a product in log space, immune to underflow when either factor is tiny.
"""

from __future__ import annotations

import numpy as np
from scipy.special import erfcx, log_ndtr, ndtr

LOG_FLOOR = -1e12  # stand-in for -inf that keeps argmax arithmetic finite
_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)
_LOG_SQRT_2PI = 0.5 * np.log(2.0 * np.pi)


def _normal_pdf(z):
    return _INV_SQRT_2PI * np.exp(-0.5 * np.square(z))


def ei(mu, sigma, f_best):
    """Expected improvement of N(mu, sigma^2) over f_best (maximization)."""
    mu_a, sigma_a = np.broadcast_arrays(np.asarray(mu, float), np.asarray(sigma, float))
    scalar = mu_a.ndim == 0
    mu_a = np.atleast_1d(mu_a).astype(float)
    sigma_a = np.atleast_1d(sigma_a).astype(float)
    if np.any(sigma_a < 0):
        raise ValueError("sigma must be nonnegative")
    out = np.maximum(mu_a - f_best, 0.0)  # deterministic limit
    pos = sigma_a > 0
    z = (mu_a[pos] - f_best) / sigma_a[pos]
    out[pos] = sigma_a[pos] * (z * ndtr(z) + _normal_pdf(z))
    return float(out[0]) if scalar else out


def log_ei(mu, sigma, f_best):
    """log(EI), stable far into the no-improvement tail.

    For z = (mu - f_best)/sigma the bracket h(z) = z*Phi(z) + phi(z) decays
    like phi(z)/z^2; computing it via the scaled complementary error
    function keeps full precision where the direct form underflows.
    Returns LOG_FLOOR where EI is exactly zero.
    """
    mu, sigma = np.broadcast_arrays(np.asarray(mu, float), np.asarray(sigma, float))
    if np.any(sigma < 0):
        raise ValueError("sigma must be nonnegative")
    mu = np.atleast_1d(mu)
    sigma = np.atleast_1d(sigma)
    out = np.full(mu.shape, LOG_FLOOR)

    det = sigma == 0
    impr = mu[det] - f_best
    out[det] = np.where(impr > 0, np.log(np.maximum(impr, 1e-300)), LOG_FLOOR)

    pos = ~det
    if np.any(pos):
        z = (mu[pos] - f_best) / sigma[pos]
        val = np.empty_like(z)
        hi = z >= 8.0
        # h(z) ~ z for large z; the phi term is below float resolution
        val[hi] = np.log(z[hi])
        lo = ~hi
        zl = z[lo]
        bracket = _INV_SQRT_2PI + 0.5 * zl * erfcx(-zl / np.sqrt(2.0))
        val[lo] = -0.5 * zl**2 + np.log(np.maximum(bracket, 1e-300))
        out[pos] = np.log(sigma[pos]) + val
    return out if out.shape != (1,) else float(out[0])


def pi(mu, sigma, f_best):
    """Probability of improvement; sigma=0 collapses to an indicator."""
    mu_a, sigma_a = np.broadcast_arrays(np.asarray(mu, float), np.asarray(sigma, float))
    scalar = mu_a.ndim == 0
    mu_a = np.atleast_1d(mu_a).astype(float)
    sigma_a = np.atleast_1d(sigma_a).astype(float)
    if np.any(sigma_a < 0):
        raise ValueError("sigma must be nonnegative")
    out = np.where(mu_a > f_best, 1.0, 0.0)
    pos = sigma_a > 0
    out[pos] = ndtr((mu_a[pos] - f_best) / sigma_a[pos])
    return float(out[0]) if scalar else out


def ucb(mu, sigma, beta: float = 2.0):
    """Upper confidence bound mu + beta * sigma."""
    return np.asarray(mu, float) + beta * np.asarray(sigma, float)


def feasibility_prob(constraint_mus, constraint_sigmas):
    """prod_i Phi(-mu_i / sigma_i) for residual constraints c_i <= 0.

    Args:
        constraint_mus/constraint_sigmas: (p, n) stacked per-constraint
            posteriors (or (p,) for a single point).
    """
    return np.exp(log_feasibility(constraint_mus, constraint_sigmas))


def log_feasibility(constraint_mus, constraint_sigmas):
    mus = np.atleast_2d(np.asarray(constraint_mus, float))
    sigmas = np.atleast_2d(np.asarray(constraint_sigmas, float))
    if np.any(sigmas < 0):
        raise ValueError("sigma must be nonnegative")
    terms = np.empty_like(mus)
    det = sigmas == 0
    terms[det] = np.where(mus[det] <= 0, 0.0, LOG_FLOOR)  # hard indicator
    pos = ~det
    terms[pos] = log_ndtr(-mus[pos] / sigmas[pos])
    total = np.maximum(terms.sum(axis=0), LOG_FLOOR)
    return total if total.shape != (1,) else float(total[0])


def constrained_log_acquisition(x, objective_gp, constraint_gps, f_best, kind: str = "logei", ucb_beta: float = 2.0):
    """Score candidate rows under a fitted objective GP and constraint GPs.

    Returns log(EI * prod_i P(c_i <= 0)) by default; `kind` in
    {"logei", "pi", "ucb"} swaps the improvement factor for the ablation
    variants (pi/ucb enter the sum through their logs, floored).
    """
    x = np.atleast_2d(np.asarray(x, float))
    mu, sigma = objective_gp.predict(x)
    if kind == "logei":
        base = np.atleast_1d(log_ei(mu, sigma, f_best))
    elif kind == "pi":
        p = np.atleast_1d(pi(mu, sigma, f_best))
        base = np.where(p > 0, np.log(np.maximum(p, 1e-300)), LOG_FLOOR)
    elif kind == "ucb":
        u = np.atleast_1d(ucb(mu, sigma, ucb_beta))
        base = np.where(u > 0, np.log(np.maximum(u, 1e-300)), LOG_FLOOR)
    else:
        raise ValueError(f"unknown acquisition kind {kind!r}")
    if constraint_gps:
        stats = [g.predict(x) for g in constraint_gps]
        mus = np.stack([m for m, _ in stats])
        sigmas = np.stack([s for _, s in stats])
        base = base + np.atleast_1d(log_feasibility(mus, sigmas))
    return np.maximum(base, LOG_FLOOR)
