"""Single-block likelihood maximisers used by the full fitting cycle.

Three building blocks: a Newton solver for beta with the bound parameters
held fixed (the plain GLM fit is the epsilon = delta = 0 special case), and
bounded golden-section maximisations for epsilon and delta with everything
else fixed. Each step is an exact coordinate maximisation, so the outer
coordinate-ascent loop in :mod:`spps.fit` is monotone by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import InputError, NonConvergenceError
from .model import LOGISTIC, Dataset, LinkFunction

_STATUS_MESSAGES = {
    1: "iteration budget exhausted before reaching the gradient tolerance",
    2: "iterate norm cap exceeded; data are likely separated",
    3: "no ascent step found while the gradient is still above tolerance",
}


@dataclass(frozen=True)
class SolverControls:
    """Knobs for the Newton and scalar searches.

    ``bound_margin`` is the distance kept from the (epsilon, delta) parameter
    boundary; ``scalar_opt_tol`` is the final bracket width of the 1-d search;
    ``beta_norm_cap`` flags separation when any beta coordinate passes it.
    """

    max_newton_iters: int = 50
    newton_tol: float = 1e-8
    max_step_halvings: int = 30
    bound_margin: float = 1e-6
    scalar_opt_tol: float = 1e-9
    beta_norm_cap: float = 1e3

    def __post_init__(self):
        for name in (
            "max_newton_iters",
            "newton_tol",
            "max_step_halvings",
            "bound_margin",
            "scalar_opt_tol",
            "beta_norm_cap",
        ):
            if getattr(self, name) <= 0:
                raise InputError(f"{name} must be positive")
        if self.bound_margin >= 0.5:
            raise InputError("bound_margin must be below 0.5")


@dataclass(frozen=True)
class StepResult:
    """Outcome of one block maximisation.

    ``value`` is the updated parameter block (vector for beta, scalar for
    epsilon/delta), ``loglik`` the log likelihood at it. ``at_boundary`` marks
    scalar results pinned to an end of their search interval.
    """

    value: np.ndarray | float
    loglik: float
    iterations: int
    converged: bool
    at_boundary: bool = False


def _run_newton(data, link, eps, delta, beta_init, controls):
    k = kernels.active()
    beta, ll, it, status = k.newton_beta(
        data.design,
        data.indicator,
        float(eps),
        float(delta),
        np.asarray(beta_init, dtype=float),
        link.kernel_id,
        controls.newton_tol,
        controls.max_newton_iters,
        controls.max_step_halvings,
        controls.beta_norm_cap,
    )
    result = StepResult(value=beta, loglik=ll, iterations=it, converged=status == 0)
    if status != 0:
        raise NonConvergenceError(_STATUS_MESSAGES[status], result=result)
    return result


def fit_plain_glm(
    data: Dataset, link: LinkFunction = LOGISTIC, controls: SolverControls = SolverControls()
) -> StepResult:
    """Maximum likelihood fit of the unbounded model (epsilon = delta = 0).

    Raises :class:`InputError` on a rank-deficient design and
    :class:`NonConvergenceError` (carrying the last iterate) when the
    likelihood is unbounded, e.g. under complete separation.
    """
    if np.linalg.matrix_rank(data.design) < data.p:
        raise InputError("design matrix is rank deficient")
    return _run_newton(data, link, 0.0, 0.0, np.zeros(data.p), controls)


def beta_step(
    data: Dataset,
    link: LinkFunction,
    epsilon: float,
    delta: float,
    beta_init,
    controls: SolverControls = SolverControls(),
) -> StepResult:
    """Update beta with (epsilon, delta) fixed, warm-started at ``beta_init``.

    Step halving enforces monotone ascent; the achieved log likelihood never
    falls below the warm start. Non-convergence is surfaced as
    :class:`NonConvergenceError` so the caller can react.
    """
    if epsilon + delta >= 1.0:
        raise InputError("epsilon + delta must be < 1")
    if len(beta_init) != data.p:
        raise InputError("beta_init length does not match design columns")
    return _run_newton(data, link, epsilon, delta, beta_init, controls)


def _scalar_step(data, link, beta, fixed, controls, vary_delta):
    k = kernels.active()
    eta = data.design @ np.asarray(beta, dtype=float)
    phi = k.link_cdf(eta, link.kernel_id)
    lo = controls.bound_margin
    hi = 1.0 - fixed - controls.bound_margin
    if hi <= lo:
        raise InputError(
            "empty search interval: the fixed bound parameter leaves no room"
        )
    x, fx = k.golden_max_scalar(
        phi, data.indicator, float(fixed), lo, hi, controls.scalar_opt_tol, vary_delta
    )
    # The bracket midpoint can sit a hair inside the interval even when the
    # likelihood is monotone; the endpoints must never dominate the result.
    f_lo = k.spps_loglik(phi, data.indicator, *((fixed, lo) if vary_delta else (lo, fixed)))
    f_hi = k.spps_loglik(phi, data.indicator, *((fixed, hi) if vary_delta else (hi, fixed)))
    at_boundary = False
    if f_lo >= fx and f_lo >= f_hi:
        x, fx, at_boundary = lo, f_lo, True
    elif f_hi >= fx:
        x, fx, at_boundary = hi, f_hi, True
    width = hi - lo
    iters = 0
    if width > controls.scalar_opt_tol:
        iters = int(math.ceil(math.log(controls.scalar_opt_tol / width) / math.log((math.sqrt(5.0) - 1.0) / 2.0)))
    return StepResult(
        value=float(x),
        loglik=float(fx),
        iterations=iters,
        converged=True,
        at_boundary=at_boundary,
    )


def epsilon_step(
    data: Dataset,
    link: LinkFunction,
    beta,
    delta: float,
    controls: SolverControls = SolverControls(),
) -> StepResult:
    """Maximise the log likelihood over epsilon in [margin, 1 - delta - margin].

    The likelihood is concave in epsilon for fixed (beta, delta), so the
    golden-section search returns the global maximum of the interval; results
    pinned to an endpoint are flagged ``at_boundary``.
    """
    return _scalar_step(data, link, beta, float(delta), controls, vary_delta=False)


def delta_step(
    data: Dataset,
    link: LinkFunction,
    beta,
    epsilon: float,
    controls: SolverControls = SolverControls(),
) -> StepResult:
    """Mirror image of :func:`epsilon_step` over [margin, 1 - epsilon - margin]."""
    return _scalar_step(data, link, beta, float(epsilon), controls, vary_delta=True)
