"""Bounded-link Bernoulli propensity model.

The response (or treatment) indicator is Bernoulli with success probability

    pi(x) = epsilon + (1 - delta - epsilon) * phi(beta' x)

where ``phi`` is a strictly increasing CDF (logistic or probit). ``epsilon``
bounds the propensity away from 0 and ``delta`` away from 1, so inverse
probability weights stay finite by construction. In the missing-data setting
only the lower bound is used and ``delta`` is pinned to 0.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import ndtr

from .errors import InputError

MISSING_DATA = "missing_data"
TREATMENT = "treatment"

# phi is clamped to this band before entering any log term, so likelihoods
# stay finite at epsilon = delta = 0 under extreme linear predictors.
PHI_FLOOR = 1e-12

LOGISTIC_ID = 0
PROBIT_ID = 1


def _sigmoid(u):
    u = np.asarray(u, dtype=float)
    out = np.empty_like(u)
    pos = u >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-u[pos]))
    eu = np.exp(u[~pos])
    out[~pos] = eu / (1.0 + eu)
    return out


def _sigmoid_deriv(u):
    p = _sigmoid(u)
    return p * (1.0 - p)


def _norm_cdf(u):
    return ndtr(np.asarray(u, dtype=float))


def _norm_pdf(u):
    u = np.asarray(u, dtype=float)
    return np.exp(-0.5 * u * u) / np.sqrt(2.0 * np.pi)


@dataclass(frozen=True)
class LinkFunction:
    """Strictly increasing CDF with its density, used as the model link."""

    kind: str
    evaluate: Callable[[np.ndarray], np.ndarray]
    derivative: Callable[[np.ndarray], np.ndarray]
    kernel_id: int


LOGISTIC = LinkFunction("logistic", _sigmoid, _sigmoid_deriv, LOGISTIC_ID)
PROBIT = LinkFunction("probit", _norm_cdf, _norm_pdf, PROBIT_ID)

_LINKS = {"logistic": LOGISTIC, "probit": PROBIT}


def get_link(kind: str) -> LinkFunction:
    try:
        return _LINKS[kind]
    except KeyError:
        raise InputError(f"unknown link {kind!r}; expected one of {sorted(_LINKS)}") from None


@dataclass(frozen=True)
class Theta:
    """Parameter vector (epsilon, delta, beta) plus the setting it belongs to.

    ``mode`` is :data:`MISSING_DATA` (delta pinned to 0) or :data:`TREATMENT`.
    """

    epsilon: float
    delta: float
    beta: np.ndarray
    mode: str = TREATMENT

    def __post_init__(self):
        beta = np.asarray(self.beta, dtype=float)
        if beta.ndim != 1:
            raise InputError("beta must be a 1-d vector")
        beta = beta.copy()
        beta.setflags(write=False)
        object.__setattr__(self, "beta", beta)
        if not (0.0 <= self.epsilon < 1.0):
            raise InputError(f"epsilon must lie in [0, 1), got {self.epsilon}")
        if not (0.0 <= self.delta < 1.0):
            raise InputError(f"delta must lie in [0, 1), got {self.delta}")
        if self.epsilon + self.delta >= 1.0:
            raise InputError(
                f"epsilon + delta must be < 1, got {self.epsilon} + {self.delta}"
            )
        if self.mode not in (MISSING_DATA, TREATMENT):
            raise InputError(f"unknown mode {self.mode!r}")
        if self.mode == MISSING_DATA and self.delta != 0.0:
            raise InputError("missing-data mode requires delta = 0")

    @property
    def p(self) -> int:
        return self.beta.shape[0]


@dataclass(frozen=True)
class Dataset:
    """Design matrix (first column all ones), binary indicator, optional outcome.

    The indicator is the response indicator A in the missing-data setting and
    the treatment T in the causal setting. Outcome entries may be NaN only on
    indicator-0 rows (missing-data setting).
    """

    design: np.ndarray
    indicator: np.ndarray
    outcome: np.ndarray | None = None

    def __post_init__(self):
        design = np.ascontiguousarray(self.design, dtype=float)
        indicator = np.asarray(self.indicator, dtype=float).ravel()
        if design.ndim != 2:
            raise InputError("design must be a 2-d matrix")
        n, p = design.shape
        if n < p:
            raise InputError(f"need at least as many rows as columns, got {n} x {p}")
        if not np.all(design[:, 0] == 1.0):
            raise InputError("first design column must be the all-ones intercept")
        if not np.isfinite(design).all():
            raise InputError("design contains non-finite values")
        if indicator.shape[0] != n:
            raise InputError("indicator length does not match design rows")
        if not np.all((indicator == 0.0) | (indicator == 1.0)):
            raise InputError("indicator entries must be 0 or 1")
        if indicator.min() == indicator.max():
            warnings.warn(
                "indicator takes a single value; fitting is degenerate",
                stacklevel=2,
            )
        outcome = self.outcome
        if outcome is not None:
            outcome = np.asarray(outcome, dtype=float).ravel()
            if outcome.shape[0] != n:
                raise InputError("outcome length does not match design rows")
        for name, arr in (("design", design), ("indicator", indicator), ("outcome", outcome)):
            if arr is not None:
                arr.setflags(write=False)
                object.__setattr__(self, name, arr)

    @property
    def n(self) -> int:
        return self.design.shape[0]

    @property
    def p(self) -> int:
        return self.design.shape[1]


def build_dataset(covariates, indicator, outcome=None) -> Dataset:
    """Prepend the intercept column to ``covariates`` and wrap as a Dataset."""
    cov = np.asarray(covariates, dtype=float)
    if cov.ndim == 1:
        cov = cov[:, None]
    design = np.column_stack([np.ones(cov.shape[0]), cov])
    return Dataset(design, indicator, outcome)


def _check_theta_matches(theta: Theta, p: int):
    if theta.p != p:
        raise InputError(f"beta has length {theta.p} but design has {p} columns")


def evaluate_propensity(x, theta: Theta, link: LinkFunction = LOGISTIC):
    """Propensity ``epsilon + (1 - delta - epsilon) * phi(beta' x)``.

    ``x`` may be a single row (1-d) or a design matrix (2-d); the result is a
    scalar or a vector accordingly, always inside (epsilon, 1 - delta) for
    finite linear predictors.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        _check_theta_matches(theta, x.shape[0])
        eta = float(x @ theta.beta)
        return float(theta.epsilon + (1.0 - theta.delta - theta.epsilon) * link.evaluate(eta))
    if x.ndim == 2:
        _check_theta_matches(theta, x.shape[1])
        eta = x @ theta.beta
        return theta.epsilon + (1.0 - theta.delta - theta.epsilon) * link.evaluate(eta)
    raise InputError("x must be 1-d or 2-d")


def _clamped_phi(eta, link: LinkFunction):
    return np.clip(link.evaluate(eta), PHI_FLOOR, 1.0 - PHI_FLOOR)


def log_likelihood(data: Dataset, theta: Theta, link: LinkFunction = LOGISTIC) -> float:
    """Bernoulli log likelihood of the indicator under the bounded-link model."""
    _check_theta_matches(theta, data.p)
    phi = _clamped_phi(data.design @ theta.beta, link)
    pi = theta.epsilon + (1.0 - theta.delta - theta.epsilon) * phi
    a = data.indicator
    return float(np.sum(a * np.log(pi) + (1.0 - a) * np.log1p(-pi)))


def score(data: Dataset, theta: Theta, link: LinkFunction = LOGISTIC) -> np.ndarray:
    """Gradient of :func:`log_likelihood` in (epsilon, delta, beta) order.

    Length p + 2. The delta coordinate is computed in both modes; callers that
    hold delta fixed simply ignore it.
    """
    _check_theta_matches(theta, data.p)
    eta = data.design @ theta.beta
    phi = _clamped_phi(eta, link)
    dphi = link.derivative(eta)
    scale = 1.0 - theta.delta - theta.epsilon
    pi = theta.epsilon + scale * phi
    resid = (data.indicator - pi) / (pi * (1.0 - pi))
    g_eps = float(np.sum(resid * (1.0 - phi)))
    g_delta = float(np.sum(resid * (-phi)))
    g_beta = data.design.T @ (resid * scale * dphi)
    return np.concatenate([[g_eps, g_delta], g_beta])
