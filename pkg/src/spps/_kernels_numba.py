"""JIT-compiled twins of the hot fitting kernels.

Same signatures, semantics, and status codes as :mod:`spps._kernels_numpy`;
written with explicit loops so numba can fuse them. fastmath stays off so the
two backends agree to floating-point noise.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

PHI_FLOOR = 1e-12

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0
_INVPHI2 = (3.0 - math.sqrt(5.0)) / 2.0
_INV_SQRT2 = 1.0 / math.sqrt(2.0)
_INV_SQRT2PI = 1.0 / math.sqrt(2.0 * math.pi)

_JIT = {"cache": True, "nogil": True}


@njit(**_JIT)
def _phi_scalar(u, link_id):
    if link_id == 0:
        if u >= 0.0:
            p = 1.0 / (1.0 + math.exp(-u))
        else:
            e = math.exp(u)
            p = e / (1.0 + e)
    else:
        p = 0.5 * (1.0 + math.erf(u * _INV_SQRT2))
    if p < PHI_FLOOR:
        p = PHI_FLOOR
    elif p > 1.0 - PHI_FLOOR:
        p = 1.0 - PHI_FLOOR
    return p


@njit(**_JIT)
def link_cdf(eta, link_id):
    n = eta.shape[0]
    out = np.empty(n)
    for i in range(n):
        out[i] = _phi_scalar(eta[i], link_id)
    return out


@njit(**_JIT)
def link_terms(eta, link_id):
    n = eta.shape[0]
    phi = np.empty(n)
    dphi = np.empty(n)
    d2phi = np.empty(n)
    for i in range(n):
        p = _phi_scalar(eta[i], link_id)
        phi[i] = p
        if link_id == 0:
            d = p * (1.0 - p)
            dphi[i] = d
            d2phi[i] = d * (1.0 - 2.0 * p)
        else:
            d = _INV_SQRT2PI * math.exp(-0.5 * eta[i] * eta[i])
            dphi[i] = d
            d2phi[i] = -eta[i] * d
    return phi, dphi, d2phi


@njit(**_JIT)
def spps_loglik(phi, a, eps, delta):
    scale = 1.0 - delta - eps
    s = 0.0
    for i in range(phi.shape[0]):
        pi = eps + scale * phi[i]
        if a[i] > 0.5:
            s += math.log(pi)
        else:
            s += math.log1p(-pi)
    return s


@njit(**_JIT)
def golden_max_scalar(phi, a, fixed, lo, hi, tol, vary_delta):
    h = hi - lo
    if h <= tol:
        x = 0.5 * (lo + hi)
        if vary_delta:
            return x, spps_loglik(phi, a, fixed, x)
        return x, spps_loglik(phi, a, x, fixed)
    n_steps = int(math.ceil(math.log(tol / h) / math.log(_INVPHI)))
    c = lo + _INVPHI2 * h
    d = lo + _INVPHI * h
    if vary_delta:
        yc = spps_loglik(phi, a, fixed, c)
        yd = spps_loglik(phi, a, fixed, d)
    else:
        yc = spps_loglik(phi, a, c, fixed)
        yd = spps_loglik(phi, a, d, fixed)
    for _ in range(n_steps - 1):
        if yc > yd:
            hi = d
            d = c
            yd = yc
            h *= _INVPHI
            c = lo + _INVPHI2 * h
            yc = spps_loglik(phi, a, fixed, c) if vary_delta else spps_loglik(phi, a, c, fixed)
        else:
            lo = c
            c = d
            yc = yd
            h *= _INVPHI
            d = lo + _INVPHI * h
            yd = spps_loglik(phi, a, fixed, d) if vary_delta else spps_loglik(phi, a, d, fixed)
    x = 0.5 * (lo + d) if yc > yd else 0.5 * (c + hi)
    if vary_delta:
        return x, spps_loglik(phi, a, fixed, x)
    return x, spps_loglik(phi, a, x, fixed)


@njit(**_JIT)
def _cholesky_solve(m, g, d):
    """In-place Cholesky solve of m d = g; returns False if m is not PD."""
    p = m.shape[0]
    c = np.zeros((p, p))
    for j in range(p):
        s = m[j, j]
        for k in range(j):
            s -= c[j, k] * c[j, k]
        if s <= 0.0:
            return False
        c[j, j] = math.sqrt(s)
        for i in range(j + 1, p):
            s = m[i, j]
            for k in range(j):
                s -= c[i, k] * c[j, k]
            c[i, j] = s / c[j, j]
    for i in range(p):
        s = g[i]
        for k in range(i):
            s -= c[i, k] * d[k]
        d[i] = s / c[i, i]
    for i in range(p - 1, -1, -1):
        s = d[i]
        for k in range(i + 1, p):
            s -= c[k, i] * d[k]
        d[i] = s / c[i, i]
    return True


@njit(**_JIT)
def newton_beta(x_mat, a, eps, delta, beta0, link_id, tol, max_iter, max_halvings, cap):
    n, p = x_mat.shape
    beta = beta0.copy()
    scale = 1.0 - delta - eps
    eta = x_mat @ beta
    phi, dphi, d2phi = link_terms(eta, link_id)
    ll = spps_loglik(phi, a, eps, delta)
    g = np.zeros(p)
    neg_h = np.zeros((p, p))
    d = np.zeros(p)
    status = 1
    it = 0
    for it in range(1, max_iter + 1):
        g[:] = 0.0
        neg_h[:] = 0.0
        for i in range(n):
            pi = eps + scale * phi[i]
            q = pi * (1.0 - pi)
            lp = (a[i] - pi) / q
            lpp = -(a[i] / (pi * pi) + (1.0 - a[i]) / ((1.0 - pi) * (1.0 - pi)))
            gi = lp * scale * dphi[i]
            wi = lpp * (scale * dphi[i]) ** 2 + lp * scale * d2phi[i]
            for j in range(p):
                g[j] += gi * x_mat[i, j]
                for k in range(j + 1):
                    neg_h[j, k] -= wi * x_mat[i, j] * x_mat[i, k]
        for j in range(p):
            for k in range(j):
                neg_h[k, j] = neg_h[j, k]
        gmax = 0.0
        for j in range(p):
            if abs(g[j]) > gmax:
                gmax = abs(g[j])
        if gmax <= tol:
            status = 0
            break
        tr = 0.0
        for j in range(p):
            tr += neg_h[j, j]
        ridge = 1e-12 * max(1.0, tr / p)
        found = False
        m = np.empty((p, p))
        for _ in range(6):
            m[:, :] = neg_h
            for j in range(p):
                m[j, j] += ridge
            if _cholesky_solve(m, g, d):
                dg = 0.0
                for j in range(p):
                    dg += d[j] * g[j]
                if dg > 0.0:
                    found = True
                    break
            ridge *= 100.0
        if not found:
            for j in range(p):
                d[j] = g[j] / max(1.0, gmax)
        step = 1.0
        accepted = False
        beta_new = np.empty(p)
        ll_new = ll
        for _ in range(max_halvings + 1):
            for j in range(p):
                beta_new[j] = beta[j] + step * d[j]
            eta = x_mat @ beta_new
            phi_n, dphi_n, d2phi_n = link_terms(eta, link_id)
            ll_new = spps_loglik(phi_n, a, eps, delta)
            if ll_new > ll:
                accepted = True
                phi, dphi, d2phi = phi_n, dphi_n, d2phi_n
                break
            step *= 0.5
        if not accepted:
            status = 0 if gmax <= tol else 3
            break
        beta[:] = beta_new
        ll = ll_new
        bmax = 0.0
        for j in range(p):
            if abs(beta[j]) > bmax:
                bmax = abs(beta[j])
        if bmax > cap:
            status = 2
            break
    if status == 1:
        g[:] = 0.0
        for i in range(n):
            pi = eps + scale * phi[i]
            lp = (a[i] - pi) / (pi * (1.0 - pi))
            gi = lp * scale * dphi[i]
            for j in range(p):
                g[j] += gi * x_mat[i, j]
        gmax = 0.0
        for j in range(p):
            if abs(g[j]) > gmax:
                gmax = abs(g[j])
        if gmax <= tol:
            status = 0
    return beta, ll, it, status
