"""Stratified nonparametric bootstrap for estimator standard errors.

Resampling is done separately within the indicator groups, preserving the
original group sizes, and the whole pipeline (propensity refit plus
estimation) reruns on every resample — reusing the original fitted
propensities would understate the spread. The interval is the normal one,
point estimate +/- z * SE.

Resample b uses the substream ``default_rng([seed, b])``; identical seeds give
identical resamples regardless of how the work is scheduled.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import (
    BootstrapUnreliableError,
    EstimationError,
    InputError,
    NonConvergenceError,
)
from .estimators import EstimateReport, estimate_ate_ipw, estimate_ate_ld, estimate_mean_ipw
from .fit import fit_spps
from .model import LOGISTIC, MISSING_DATA, Dataset, LinkFunction
from .solvers import SolverControls, fit_plain_glm

MAX_FAILURE_FRACTION = 0.2


@dataclass(frozen=True)
class BootstrapConfig:
    """Resample count, normal-interval critical value, and master seed."""

    n_boot: int = 1000
    z_value: float = 1.96
    seed: int = 0

    def __post_init__(self):
        if self.n_boot < 2:
            raise InputError("n_boot must be at least 2")
        if self.z_value <= 0:
            raise InputError("z_value must be positive")


def stratified_resample(data: Dataset, rng: np.random.Generator) -> Dataset:
    """Draw with replacement within each indicator group, keeping group sizes."""
    idx1 = np.flatnonzero(data.indicator == 1.0)
    idx0 = np.flatnonzero(data.indicator == 0.0)
    take = np.concatenate(
        [rng.choice(idx1, size=idx1.size, replace=True),
         rng.choice(idx0, size=idx0.size, replace=True)]
    )
    outcome = data.outcome[take] if data.outcome is not None else None
    return Dataset(data.design[take], data.indicator[take], outcome)


def _statistic_block(data, statistic, seed, start, stop):
    values = np.empty(stop - start)
    for b in range(start, stop):
        rng = np.random.default_rng([seed, b])
        resample = stratified_resample(data, rng)
        try:
            values[b - start] = statistic(resample)
        except (EstimationError, NonConvergenceError, InputError):
            values[b - start] = np.nan
    return start, values


def bootstrap_statistic(
    data: Dataset,
    statistic: Callable[[Dataset], float],
    config: BootstrapConfig = BootstrapConfig(),
    workers: int = 1,
) -> dict:
    """Bootstrap any scalar statistic of a dataset.

    Returns the point estimate on the original data, the resample standard
    error with the (count - 1) denominator, the normal interval, and failure
    accounting. Raises :class:`BootstrapUnreliableError` (with the partial
    report attached) when more than 20% of resamples fail.
    """
    if not (data.indicator == 1.0).any() or not (data.indicator == 0.0).any():
        raise InputError("both indicator groups must be nonempty to stratify")
    point = float(statistic(data))
    n_boot = config.n_boot
    values = np.empty(n_boot)
    if workers <= 1 or n_boot < 4:
        values[:] = _statistic_block(data, statistic, config.seed, 0, n_boot)[1]
    else:
        block = max(1, n_boot // (workers * 8))
        starts = list(range(0, n_boot, block))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_statistic_block, data, statistic, config.seed, s, min(s + block, n_boot))
                for s in starts
            ]
            for fut in futures:
                start, vals = fut.result()
                values[start : start + vals.size] = vals
    ok = np.isfinite(values)
    n_eff = int(ok.sum())
    n_fail = n_boot - n_eff
    if n_eff < 2:
        raise BootstrapUnreliableError(
            f"only {n_eff} of {n_boot} resamples produced an estimate", report=None
        )
    kept = values[ok]
    se = float(math.sqrt(np.sum((kept - kept.mean()) ** 2) / (n_eff - 1)))
    ci = (point - config.z_value * se, point + config.z_value * se)
    report = {
        "estimate": point,
        "se": se,
        "ci_low": ci[0],
        "ci_high": ci[1],
        "n_boot_effective": n_eff,
        "n_fail": n_fail,
    }
    if n_fail > MAX_FAILURE_FRACTION * n_boot:
        raise BootstrapUnreliableError(
            f"{n_fail} of {n_boot} resamples failed", report=report
        )
    return report


class VariantEstimator:
    """Full pipeline for one variant: refit the propensity model, estimate.

    Variants O and LD weight by the plain GLM fit, P and PLD by the bounded
    model fit. In missing-data mode the estimand is the population mean and
    only O and P apply. Instances are picklable, so they can cross process
    boundaries during a parallel bootstrap.
    """

    def __init__(
        self,
        variant: str,
        link: LinkFunction = LOGISTIC,
        mode: str = "treatment",
        controls: SolverControls = SolverControls(),
    ):
        if mode == MISSING_DATA:
            if variant not in ("O", "P"):
                raise InputError("missing-data mode supports variants O and P only")
        elif variant not in ("O", "P", "LD", "PLD"):
            raise InputError(f"unknown variant {variant!r}")
        self.variant = variant
        self.link = link
        self.mode = mode
        self.controls = controls

    def report(self, data: Dataset) -> EstimateReport:
        if self.variant in ("O", "LD"):
            step = fit_plain_glm(data, self.link, self.controls)
            fitted = self.link.evaluate(data.design @ np.asarray(step.value))
        else:
            fitted = fit_spps(data, self.link, self.mode, self.controls).fitted
        if self.mode == MISSING_DATA:
            return estimate_mean_ipw(data, fitted, self.variant)
        if self.variant in ("O", "P"):
            return estimate_ate_ipw(data, fitted, self.variant)
        return estimate_ate_ld(data, fitted, self.variant)

    def __call__(self, data: Dataset) -> float:
        return self.report(data).value


def bootstrap_estimate(
    data: Dataset,
    variant: str,
    link: LinkFunction = LOGISTIC,
    mode: str = "treatment",
    config: BootstrapConfig = BootstrapConfig(),
    controls: SolverControls = SolverControls(),
    workers: int = 1,
) -> EstimateReport:
    """Bootstrap SE and normal CI for one estimator variant."""
    estimator = VariantEstimator(variant, link, mode, controls)
    stats = bootstrap_statistic(data, estimator, config, workers=workers)
    return estimator.report(data).with_bootstrap(
        se=stats["se"],
        ci=(stats["ci_low"], stats["ci_high"]),
        n_boot_effective=stats["n_boot_effective"],
        n_fail=stats["n_fail"],
    )
