"""Inverse probability weighted estimators of a population mean and the ATE.

Four ATE variants: plain-GLM weights (O), bounded-model weights (P), and both
with the residual-based weight correction (LD, PLD) that divides each arm by
its corrected weight sum. No weight trimming anywhere: the bounded propensity
model is the stabilisation mechanism, and trimming would contaminate any
comparison against it.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np

from .errors import DegenerateFitError, EstimationError, InputError
from .model import Dataset

POPULATION_MEAN = "population_mean"
ATE = "ate"

IPW_VARIANTS = ("O", "P")
LD_VARIANTS = ("LD", "PLD")


@dataclass(frozen=True)
class EstimateReport:
    """Point estimate with weight diagnostics and optional bootstrap spread.

    ``c1``/``c0`` are set only for the corrected variants; ``se``/``ci`` only
    when the estimate went through the bootstrap.
    """

    estimand: str
    variant: str
    value: float
    weights_summary: dict
    c1: float | None = None
    c0: float | None = None
    se: float | None = None
    ci: tuple[float, float] | None = None
    n_boot_effective: int | None = None
    n_fail: int | None = None

    def with_bootstrap(self, se, ci, n_boot_effective, n_fail) -> "EstimateReport":
        return replace(
            self, se=se, ci=ci, n_boot_effective=n_boot_effective, n_fail=n_fail
        )


def _as_fitted(data: Dataset, fitted) -> np.ndarray:
    fitted = np.asarray(fitted, dtype=float).ravel()
    if fitted.shape[0] != data.n:
        raise InputError("fitted propensities length does not match the data")
    return fitted


def _summary(values) -> dict:
    return {
        "min": float(values.min()),
        "max": float(values.max()),
        "sum": float(values.sum()),
    }


def estimate_mean_ipw(data: Dataset, fitted, variant: str = "O") -> EstimateReport:
    """Weighted mean of observed outcomes, n^-1 sum_i A_i Y_i / pi_i.

    Rows with A = 0 contribute nothing, so their outcomes may be missing.
    All observed rows need strictly positive fitted propensities.
    """
    if variant not in IPW_VARIANTS:
        raise InputError(f"variant must be one of {IPW_VARIANTS}, got {variant!r}")
    fitted = _as_fitted(data, fitted)
    if data.outcome is None:
        raise InputError("outcome column required to estimate a mean")
    a = data.indicator
    observed = a == 1.0
    if np.any(fitted[observed] <= 0.0):
        raise EstimationError("fitted propensity <= 0 on an observed row")
    if np.any(~np.isfinite(data.outcome[observed])):
        raise InputError("outcome missing on an observed row")
    if not observed.any():
        warnings.warn("no observed outcomes; returning 0", stacklevel=2)
        return EstimateReport(
            POPULATION_MEAN, variant, 0.0,
            {"inv_p": {"min": float("nan"), "max": float("nan"), "sum": 0.0}},
        )
    inv_p = 1.0 / fitted[observed]
    value = float(np.sum(data.outcome[observed] * inv_p) / data.n)
    return EstimateReport(POPULATION_MEAN, variant, value, {"inv_p": _summary(inv_p)})


def _check_ate_inputs(data: Dataset, fitted):
    if data.outcome is None or np.any(~np.isfinite(data.outcome)):
        raise InputError("treatment-effect estimation needs a fully observed outcome")
    t = data.indicator
    if not (t == 1.0).any() or not (t == 0.0).any():
        raise EstimationError("both treated and control units are required")
    if np.any((fitted <= 0.0) | (fitted >= 1.0)):
        raise EstimationError("fitted propensities must lie strictly inside (0, 1)")


def _weight_summaries(t, fitted):
    return {
        "inv_p": _summary(1.0 / fitted[t == 1.0]),
        "inv_q": _summary(1.0 / (1.0 - fitted[t == 0.0])),
    }


def estimate_ate_ipw(data: Dataset, fitted, variant: str = "O") -> EstimateReport:
    """Difference of the two weighted arms, each averaged over all n rows."""
    if variant not in IPW_VARIANTS:
        raise InputError(f"variant must be one of {IPW_VARIANTS}, got {variant!r}")
    fitted = _as_fitted(data, fitted)
    _check_ate_inputs(data, fitted)
    t = data.indicator
    y = data.outcome
    value = float(np.mean(t * y / fitted) - np.mean((1.0 - t) * y / (1.0 - fitted)))
    return EstimateReport(ATE, variant, value, _weight_summaries(t, fitted))


def ld_correction_constants(indicator, fitted) -> tuple[float, float]:
    """Residual-based correction constants (c1, c0) for the weighted arms.

    c1 = Pn{(T - pi)/pi} / Pn{((T - pi)/pi)^2} and c0 is its mirror on the
    control arm with the opposite sign.
    """
    t = np.asarray(indicator, dtype=float).ravel()
    fitted = np.asarray(fitted, dtype=float).ravel()
    r1 = (t - fitted) / fitted
    r0 = (t - fitted) / (1.0 - fitted)
    d1 = np.mean(r1 * r1)
    d0 = np.mean(r0 * r0)
    if d1 == 0.0 or d0 == 0.0:
        raise DegenerateFitError("all weight residuals are zero; correction undefined")
    return float(np.mean(r1) / d1), float(-np.mean(r0) / d0)


def estimate_ate_ld(data: Dataset, fitted, variant: str = "LD") -> EstimateReport:
    """Corrected-weight estimator: per-arm ratios with multiplier 1 - c/weight-term.

    With c1 = c0 = 0 this reduces exactly to the ratio-normalised difference
    of weighted means.
    """
    if variant not in LD_VARIANTS:
        raise InputError(f"variant must be one of {LD_VARIANTS}, got {variant!r}")
    fitted = _as_fitted(data, fitted)
    _check_ate_inputs(data, fitted)
    t = data.indicator
    y = data.outcome
    c1, c0 = ld_correction_constants(t, fitted)
    m1 = (t / fitted) * (1.0 - c1 / fitted)
    m0 = ((1.0 - t) / (1.0 - fitted)) * (1.0 - c0 / (1.0 - fitted))
    denom1 = float(np.mean(m1))
    denom0 = float(np.mean(m0))
    if denom1 == 0.0 or denom0 == 0.0:
        raise DegenerateFitError("corrected weight sum is zero in one arm")
    value = float(np.mean(m1 * y) / denom1 - np.mean(m0 * y) / denom0)
    return EstimateReport(
        ATE, variant, value, _weight_summaries(t, fitted), c1=c1, c0=c0
    )
