"""Full fitting procedure for the bounded propensity model.

The algorithm: fit the plain GLM first, initialise the bounds from the range
of its fitted values (epsilon <- min, delta <- 1 - max), then coordinate-
ascend over (beta, epsilon, delta) until the log likelihood stops improving.
In the treatment setting a guard short-circuits to the plain GLM whenever the
initial bounds already satisfy epsilon + delta > 0.6: a fitted-value range
narrower than 0.4 means the plain model needs no bounding. Missing-data mode
pins delta to 0 and never runs the delta update.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import InputError, NonConvergenceError
from .model import (
    LOGISTIC,
    MISSING_DATA,
    TREATMENT,
    Dataset,
    LinkFunction,
    Theta,
    evaluate_propensity,
)
from .solvers import SolverControls, beta_step, delta_step, epsilon_step, fit_plain_glm

GUARD_THRESHOLD = 0.6

DEFAULT_MAX_OUTER_ITERS = 200
DEFAULT_OUTER_TOL = 1e-8

# Fitted-value ranges narrower than this (in logit units) earn a warning: the
# unbounded-support conditions behind identifiability cannot hold visibly.
NARROW_PREDICTOR_RANGE = 2.0


@dataclass(frozen=True)
class FitResult:
    """Fitted parameters, per-row propensities, and diagnostics.

    ``trace`` records (outer iteration, log likelihood) pairs and is
    non-decreasing. ``guard_triggered`` implies ``fallback_plain_glm``;
    fallback can also fire on its own when the bounded model ends below the
    plain GLM or the very first fit fails.
    """

    theta_hat: Theta
    fitted: np.ndarray
    trace: tuple
    guard_triggered: bool
    fallback_plain_glm: bool
    converged: bool
    assumption_diagnostics: dict = field(default_factory=dict)

    @property
    def loglik(self) -> float:
        return self.trace[-1][1]


def check_identifiability(
    data: Dataset,
    link: LinkFunction = LOGISTIC,
    controls: SolverControls = SolverControls(),
) -> dict:
    """Heuristic identifiability diagnostics; warnings, never hard errors.

    Reports the design rank and condition number (the covariates must not sit
    on a hyperplane) and the empirical range of the plain-GLM linear
    predictor. A narrow range is only a warning: unboundedness of the
    predictor support cannot be verified from finite data.
    """
    rank = int(np.linalg.matrix_rank(data.design))
    cond = float(np.linalg.cond(data.design))
    diag = {
        "design_rank": rank,
        "design_columns": data.p,
        "full_rank": rank == data.p,
        "condition_number": cond,
        "linpred_min": float("nan"),
        "linpred_max": float("nan"),
        "warnings": [],
    }
    if rank < data.p:
        diag["warnings"].append(
            "design matrix is rank deficient: covariates are concentrated on a hyperplane"
        )
        return diag
    try:
        step = fit_plain_glm(data, link, controls)
        beta = np.asarray(step.value)
    except NonConvergenceError as err:
        beta = np.asarray(err.result.value)
        diag["warnings"].append(
            "plain GLM fit did not converge; predictor range is indicative only"
        )
    eta = data.design @ beta
    diag["linpred_min"] = float(eta.min())
    diag["linpred_max"] = float(eta.max())
    if eta.max() - eta.min() < NARROW_PREDICTOR_RANGE:
        diag["warnings"].append(
            "linear predictor spans under "
            f"{NARROW_PREDICTOR_RANGE} logit units; bound parameters may be poorly identified"
        )
    return diag


def _diagnostics(data, eta):
    rank = int(np.linalg.matrix_rank(data.design))
    return {
        "design_rank": rank,
        "design_columns": data.p,
        "full_rank": rank == data.p,
        "condition_number": float(np.linalg.cond(data.design)),
        "linpred_min": float(eta.min()),
        "linpred_max": float(eta.max()),
        "epsilon_at_boundary": False,
        "delta_at_boundary": False,
    }


def _plain_result(data, link, mode, beta, trace, converged, guard, diagnostics):
    theta = Theta(0.0, 0.0, np.asarray(beta, dtype=float), mode=mode)
    fitted = evaluate_propensity(data.design, theta, link)
    return FitResult(
        theta_hat=theta,
        fitted=fitted,
        trace=tuple(trace),
        guard_triggered=guard,
        fallback_plain_glm=True,
        converged=converged,
        assumption_diagnostics=diagnostics,
    )


def fit_spps(
    data: Dataset,
    link: LinkFunction = LOGISTIC,
    mode: str = TREATMENT,
    controls: SolverControls = SolverControls(),
    max_outer_iters: int = DEFAULT_MAX_OUTER_ITERS,
    outer_tol: float = DEFAULT_OUTER_TOL,
    theta_init: Theta | None = None,
) -> FitResult:
    """Fit the bounded propensity model by coordinate ascent.

    Parameters
    ----------
    data, link, mode
        Sample, link function, and setting (``treatment`` or
        ``missing_data``; the latter holds delta at 0).
    controls
        Inner-solver knobs shared by all steps.
    max_outer_iters, outer_tol
        The outer loop stops when a full beta/epsilon/delta cycle improves
        the log likelihood by less than ``outer_tol``.
    theta_init
        Optional warm start. Skips the plain-GLM initialisation and the
        guard, entering the cycle directly at this point.

    Returns
    -------
    FitResult
        Non-convergence of an inner beta update is absorbed: after one retry
        (bounds halved back toward their previous accepted values) the best
        iterate so far is returned with ``converged=False``.
    """
    if mode not in (MISSING_DATA, TREATMENT):
        raise InputError(f"unknown mode {mode!r}")
    k = kernels.active()
    margin = controls.bound_margin

    glm_beta = None
    glm_loglik = None
    if theta_init is not None:
        if theta_init.mode != mode:
            raise InputError("theta_init mode does not match the requested mode")
        if theta_init.p != data.p:
            raise InputError("theta_init beta length does not match design columns")
        eps, delta = theta_init.epsilon, theta_init.delta
        beta = np.asarray(theta_init.beta, dtype=float).copy()
        diagnostics = _diagnostics(data, data.design @ beta)
    else:
        try:
            plain = fit_plain_glm(data, link, controls)
        except NonConvergenceError as err:
            beta = np.asarray(err.result.value)
            diagnostics = _diagnostics(data, data.design @ beta)
            return _plain_result(
                data, link, mode, beta, [(0, err.result.loglik)],
                converged=False, guard=False, diagnostics=diagnostics,
            )
        glm_beta = np.asarray(plain.value)
        glm_loglik = plain.loglik
        eta = data.design @ glm_beta
        diagnostics = _diagnostics(data, eta)
        fitted0 = link.evaluate(eta)

        eps = float(fitted0.min())
        delta = float(1.0 - fitted0.max()) if mode == TREATMENT else 0.0
        if fitted0.min() == fitted0.max():
            # Constant fitted values leave no range to bound; keep the scalar
            # search intervals non-empty.
            eps = margin
            delta = margin if mode == TREATMENT else 0.0

        if mode == TREATMENT and eps + delta > GUARD_THRESHOLD:
            return _plain_result(
                data, link, mode, glm_beta, [(0, glm_loglik)],
                converged=True, guard=True, diagnostics=diagnostics,
            )
        beta = glm_beta.copy()

    phi = k.link_cdf(data.design @ beta, link.kernel_id)
    loglik = float(k.spps_loglik(phi, data.indicator, eps, delta))
    trace = [(0, loglik)]
    prev_eps, prev_delta = eps, delta
    converged = False

    for it in range(1, max_outer_iters + 1):
        cycle_eps, cycle_delta, cycle_beta = eps, delta, beta
        try:
            bstep = beta_step(data, link, eps, delta, beta, controls)
        except NonConvergenceError:
            eps = 0.5 * (eps + prev_eps)
            delta = 0.5 * (delta + prev_delta)
            try:
                bstep = beta_step(data, link, eps, delta, beta, controls)
            except NonConvergenceError:
                eps, delta = cycle_eps, cycle_delta
                break
        beta = np.asarray(bstep.value)
        cycle_loglik = bstep.loglik

        # Scalar updates are accepted only when they do not lose likelihood;
        # the previous value is always inside the new search interval, so a
        # rejection can only come from the finite bracket width.
        estep = epsilon_step(data, link, beta, delta, controls)
        if estep.loglik >= cycle_loglik:
            eps = estep.value
            cycle_loglik = estep.loglik
            diagnostics["epsilon_at_boundary"] = estep.at_boundary

        if mode == TREATMENT:
            dstep = delta_step(data, link, beta, eps, controls)
            if dstep.loglik >= cycle_loglik:
                delta = dstep.value
                cycle_loglik = dstep.loglik
                diagnostics["delta_at_boundary"] = dstep.at_boundary

        if cycle_loglik < loglik:
            # Only reachable through the retry path, whose halved bounds may
            # sit below the last accepted iterate; keep the accepted one.
            eps, delta, beta = cycle_eps, cycle_delta, cycle_beta
            break

        prev_eps, prev_delta = cycle_eps, cycle_delta
        trace.append((it, cycle_loglik))
        improvement = cycle_loglik - loglik
        loglik = cycle_loglik
        if improvement < outer_tol:
            converged = True
            break

    if glm_loglik is not None and trace[-1][1] < glm_loglik:
        # The bound margins keep (epsilon, delta) off the boundary, so the
        # bounded fit can end a whisker below the plain GLM it nests; return
        # the plain fit in that case.
        trace.append((trace[-1][0] + 1, glm_loglik))
        return _plain_result(
            data, link, mode, glm_beta, trace,
            converged=converged, guard=False, diagnostics=diagnostics,
        )

    theta = Theta(eps, delta, beta, mode=mode)
    fitted = evaluate_propensity(data.design, theta, link)
    return FitResult(
        theta_hat=theta,
        fitted=fitted,
        trace=tuple(trace),
        guard_triggered=False,
        fallback_plain_glm=False,
        converged=converged,
        assumption_diagnostics=diagnostics,
    )
