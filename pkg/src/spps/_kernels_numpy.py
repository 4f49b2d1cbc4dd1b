"""Vectorised numpy implementations of the hot fitting kernels.

This is the fallback backend; :mod:`spps._kernels_numba` provides the
JIT-compiled twin with identical signatures and semantics. Keep the two in
sync — the test suite and ``benchmarks/bench_backends.py`` compare them.

Status codes returned by :func:`newton_beta`:
    0  converged (gradient max-norm <= tol)
    1  iteration budget exhausted
    2  iterate norm cap exceeded (separation)
    3  stalled: no ascent step found and gradient still above tol
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import ndtr

PHI_FLOOR = 1e-12

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0
_INVPHI2 = (3.0 - math.sqrt(5.0)) / 2.0


def link_cdf(eta, link_id):
    """Link CDF values, clamped to [PHI_FLOOR, 1 - PHI_FLOOR]."""
    if link_id == 0:
        out = np.empty_like(eta)
        pos = eta >= 0.0
        out[pos] = 1.0 / (1.0 + np.exp(-eta[pos]))
        eu = np.exp(eta[~pos])
        out[~pos] = eu / (1.0 + eu)
    else:
        out = ndtr(eta)
    return np.clip(out, PHI_FLOOR, 1.0 - PHI_FLOOR)


def link_terms(eta, link_id):
    """(clamped CDF, density, density derivative) of the link at ``eta``."""
    if link_id == 0:
        phi = link_cdf(eta, 0)
        dphi = phi * (1.0 - phi)
        d2phi = dphi * (1.0 - 2.0 * phi)
    else:
        phi = link_cdf(eta, 1)
        dphi = np.exp(-0.5 * eta * eta) / math.sqrt(2.0 * math.pi)
        d2phi = -eta * dphi
    return phi, dphi, d2phi


def spps_loglik(phi, a, eps, delta):
    """Bernoulli log likelihood with success probability eps + (1-delta-eps)*phi."""
    pi = eps + (1.0 - delta - eps) * phi
    return float(np.sum(a * np.log(pi) + (1.0 - a) * np.log1p(-pi)))


def golden_max_scalar(phi, a, fixed, lo, hi, tol, vary_delta):
    """Golden-section maximisation of the log likelihood in one bound parameter.

    Varies epsilon over [lo, hi] with delta = ``fixed`` when ``vary_delta`` is
    False, and delta with epsilon = ``fixed`` otherwise. Returns (x, f(x))
    once the bracket is narrower than ``tol``. The likelihood is concave in
    each bound parameter, so the bracket always contains the maximum.
    """
    if vary_delta:
        f = lambda x: spps_loglik(phi, a, fixed, x)
    else:
        f = lambda x: spps_loglik(phi, a, x, fixed)
    h = hi - lo
    if h <= tol:
        x = 0.5 * (lo + hi)
        return x, f(x)
    n_steps = int(math.ceil(math.log(tol / h) / math.log(_INVPHI)))
    c = lo + _INVPHI2 * h
    d = lo + _INVPHI * h
    yc = f(c)
    yd = f(d)
    for _ in range(n_steps - 1):
        if yc > yd:
            hi = d
            d = c
            yd = yc
            h *= _INVPHI
            c = lo + _INVPHI2 * h
            yc = f(c)
        else:
            lo = c
            c = d
            yc = yd
            h *= _INVPHI
            d = lo + _INVPHI * h
            yd = f(d)
    x = 0.5 * (lo + d) if yc > yd else 0.5 * (c + hi)
    return x, f(x)


def _try_cholesky_solve(m, g):
    try:
        c = np.linalg.cholesky(m)
    except np.linalg.LinAlgError:
        return False, g
    d = np.linalg.solve(c.T, np.linalg.solve(c, g))
    return True, d


def newton_beta(x_mat, a, eps, delta, beta0, link_id, tol, max_iter, max_halvings, cap):
    """Maximise the log likelihood in beta with (eps, delta) held fixed.

    Newton ascent with step halving; the direction falls back to the gradient
    whenever the damped negative Hessian is not positive definite or does not
    give an ascent direction. Returns (beta, loglik, iterations, status).
    """
    beta = beta0.copy()
    scale = 1.0 - delta - eps
    phi, dphi, d2phi = link_terms(x_mat @ beta, link_id)
    pi = eps + scale * phi
    ll = spps_loglik(phi, a, eps, delta)
    status = 1
    it = 0
    for it in range(1, max_iter + 1):
        lp = (a - pi) / (pi * (1.0 - pi))
        lpp = -(a / (pi * pi) + (1.0 - a) / ((1.0 - pi) * (1.0 - pi)))
        g = (lp * scale * dphi) @ x_mat
        if np.max(np.abs(g)) <= tol:
            status = 0
            break
        w = lpp * (scale * dphi) ** 2 + lp * scale * d2phi
        neg_h = (x_mat * (-w)[:, None]).T @ x_mat
        ridge = 1e-12 * max(1.0, np.trace(neg_h) / neg_h.shape[0])
        d = g
        found = False
        for _ in range(6):
            ok, cand = _try_cholesky_solve(neg_h + ridge * np.eye(neg_h.shape[0]), g)
            if ok and cand @ g > 0.0:
                d = cand
                found = True
                break
            ridge *= 100.0
        if not found:
            d = g / max(1.0, np.max(np.abs(g)))
        step = 1.0
        accepted = False
        for _ in range(max_halvings + 1):
            beta_new = beta + step * d
            phi_n, dphi_n, d2phi_n = link_terms(x_mat @ beta_new, link_id)
            ll_new = spps_loglik(phi_n, a, eps, delta)
            if ll_new > ll:
                accepted = True
                phi, dphi, d2phi = phi_n, dphi_n, d2phi_n
                break
            step *= 0.5
        if not accepted:
            status = 0 if np.max(np.abs(g)) <= tol else 3
            break
        beta = beta_new
        pi = eps + scale * phi
        ll = ll_new
        if np.max(np.abs(beta)) > cap:
            status = 2
            break
    if status == 1:
        lp = (a - pi) / (pi * (1.0 - pi))
        g = (lp * scale * dphi) @ x_mat
        if np.max(np.abs(g)) <= tol:
            status = 0
    return beta, ll, it, status
