"""Synthetic data generator and Monte Carlo comparison of the ATE estimators.

The generating process mixes continuous and binary covariates, some tied to
both treatment assignment and outcome, others to the outcome only. Treatment
follows the bounded propensity

    pi(x) = eps0 + (1 - delta0 - eps0) * {1 + exp(sign * b0' x)}^(-1)

with ``sign = +1`` by default; at eps0 = delta0 = 0 this is a plain logistic
model (in the decreasing orientation, which the fitted slope absorbs). The
true average treatment effect equals the treatment coefficient of the linear
outcome equation, 2.

Reproducibility contract: replicate r of grid cell c draws from the dedicated
substream ``default_rng([seed, c, r])`` (PCG64 seeded via SeedSequence, normal
deviates by ziggurat), so results are bit-identical for a given seed no matter
how replicates are scheduled across workers.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .errors import EstimationError, InputError, NonConvergenceError
from .estimators import estimate_ate_ipw, estimate_ate_ld
from .fit import fit_spps
from .model import LOGISTIC, TREATMENT, Dataset, LinkFunction, _sigmoid
from .solvers import SolverControls, fit_plain_glm

VARIANTS = ("O", "P", "LD", "PLD")

GRID_VALUES = (0.0, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5)


def _default_beta0():
    return np.array([0.0, 0.6, -0.6, 0.6, 0.0, 0.0, 0.0])


def _default_nu():
    return np.array([0.0, -1.0, 1.0, -1.0, 2.0])


def _default_xi():
    return np.array([-1.0, 1.0, 1.0])


def _default_rho0():
    return np.array([1.0, 1.0, -1.0, -1.0])


def _default_rho1():
    return np.array([-1.0, -1.0, 1.0, 1.0])


def _default_sigma():
    return np.array(
        [
            [1.0, 0.5, -0.5, -0.5],
            [0.5, 1.0, -0.5, -0.5],
            [-0.5, -0.5, 1.0, 0.5],
            [-0.5, -0.5, 0.5, 1.0],
        ]
    )


@dataclass(frozen=True)
class SimulationConfig:
    """All generator constants plus run size and seeding.

    ``beta0`` orders coefficients as (intercept, X1, X2, X3, V1, V2, V3);
    ``nu`` as (intercept, X1, X2, X3, T); ``xi`` as (V1, V2, V3). ``rho0`` and
    ``rho1`` are the means of (X1, V1, X2, V2) given X3 = 0 and 1; ``sigma``
    is their shared covariance. ``exp_sign`` is the sign of the linear
    predictor inside the exponential of the assignment probability: +1 is the
    default generator, -1 flips to the increasing-CDF convention.
    """

    epsilon0: float = 0.0
    delta0: float = 0.0
    beta0: np.ndarray = field(default_factory=_default_beta0)
    nu: np.ndarray = field(default_factory=_default_nu)
    xi: np.ndarray = field(default_factory=_default_xi)
    rho0: np.ndarray = field(default_factory=_default_rho0)
    rho1: np.ndarray = field(default_factory=_default_rho1)
    sigma: np.ndarray = field(default_factory=_default_sigma)
    x3_prob: float = 0.2
    v3_given_x3: tuple[float, float] = (0.75, 0.25)
    n: int = 1000
    nrep: int = 1000
    seed: int = 0
    tau_true: float = 2.0
    exp_sign: int = 1

    def __post_init__(self):
        if not (0.0 <= self.epsilon0 < 1.0 and 0.0 <= self.delta0 < 1.0):
            raise InputError("epsilon0 and delta0 must lie in [0, 1)")
        if self.epsilon0 + self.delta0 >= 1.0:
            raise InputError("epsilon0 + delta0 must be < 1")
        for name, size in (("beta0", 7), ("nu", 5), ("xi", 3), ("rho0", 4), ("rho1", 4)):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (size,):
                raise InputError(f"{name} must have length {size}")
            object.__setattr__(self, name, arr)
        sigma = np.asarray(self.sigma, dtype=float)
        if sigma.shape != (4, 4) or not np.allclose(sigma, sigma.T):
            raise InputError("sigma must be a symmetric 4 x 4 matrix")
        np.linalg.cholesky(sigma)  # raises if not positive definite
        object.__setattr__(self, "sigma", sigma)
        if self.exp_sign not in (1, -1):
            raise InputError("exp_sign must be +1 or -1")
        if self.n < 8 or self.nrep < 1:
            raise InputError("n must be at least 8 and nrep at least 1")


def true_propensity(design: np.ndarray, config: SimulationConfig) -> np.ndarray:
    """Assignment probability of each design row under the generator."""
    u = design @ config.beta0
    base = _sigmoid(-config.exp_sign * u)
    return config.epsilon0 + (1.0 - config.delta0 - config.epsilon0) * base


def generate_sample(config: SimulationConfig, rng: np.random.Generator) -> Dataset:
    """Draw one sample of size ``config.n``.

    Draw order is fixed (X3, V3 | X3, the four jointly normal covariates,
    T | X, outcome noise) so a given generator state maps to one sample.
    """
    n = config.n
    x3 = rng.binomial(1, config.x3_prob, n).astype(float)
    p_v3 = config.v3_given_x3[0] * x3 + config.v3_given_x3[1] * (1.0 - x3)
    v3 = rng.binomial(1, p_v3).astype(float)
    chol = np.linalg.cholesky(config.sigma)
    mean = np.where(x3[:, None] == 1.0, config.rho1, config.rho0)
    quad = mean + rng.standard_normal((n, 4)) @ chol.T
    x1, v1, x2, v2 = quad.T
    design = np.column_stack([np.ones(n), x1, x2, x3, v1, v2, v3])
    pi = true_propensity(design, config)
    t = rng.binomial(1, pi).astype(float)
    noise = rng.standard_normal(n)
    nu = config.nu
    xi = config.xi
    y = (
        nu[0]
        + nu[1] * x1
        + nu[2] * x2
        + nu[3] * x3
        + nu[4] * t
        + xi[0] * v1
        + xi[1] * v2
        + xi[2] * v3
        + noise
    )
    return Dataset(design, t, y)


def compute_ate_estimates(
    data: Dataset,
    link: LinkFunction = LOGISTIC,
    controls: SolverControls = SolverControls(),
) -> np.ndarray:
    """All four ATE estimates for one sample, NaN where a variant failed."""
    out = np.full(4, np.nan)
    try:
        plain = fit_plain_glm(data, link, controls)
        fitted_o = link.evaluate(data.design @ np.asarray(plain.value))
    except (NonConvergenceError, InputError):
        fitted_o = None
    if fitted_o is not None:
        try:
            out[0] = estimate_ate_ipw(data, fitted_o, "O").value
        except EstimationError:
            pass
        try:
            out[2] = estimate_ate_ld(data, fitted_o, "LD").value
        except EstimationError:
            pass
    result = fit_spps(data, link, TREATMENT, controls)
    try:
        out[1] = estimate_ate_ipw(data, result.fitted, "P").value
    except EstimationError:
        pass
    try:
        out[3] = estimate_ate_ld(data, result.fitted, "PLD").value
    except EstimationError:
        pass
    return out


def _replicate_block(config, cell_index, start, stop):
    block = np.empty((stop - start, 4))
    for rep in range(start, stop):
        rng = np.random.default_rng([config.seed, cell_index, rep])
        data = generate_sample(config, rng)
        block[rep - start] = compute_ate_estimates(data)
    return start, block


def run_replicates(
    config: SimulationConfig,
    cell_index: int = 0,
    workers: int = 1,
    estimator_fns: dict[str, Callable[[Dataset], float]] | None = None,
) -> np.ndarray:
    """Per-replicate estimates for one grid cell, shape (nrep, 4), NaN = failed.

    ``estimator_fns`` substitutes a callable ``dataset -> value`` for chosen
    variants (testing hook); substitution forces single-worker execution.
    """
    nrep = config.nrep
    values = np.empty((nrep, 4))
    if estimator_fns is not None:
        for rep in range(nrep):
            rng = np.random.default_rng([config.seed, cell_index, rep])
            data = generate_sample(config, rng)
            base = None
            for j, variant in enumerate(VARIANTS):
                fn = estimator_fns.get(variant)
                if fn is not None:
                    values[rep, j] = fn(data)
                else:
                    if base is None:
                        base = compute_ate_estimates(data)
                    values[rep, j] = base[j]
        return values
    if workers <= 1:
        values[:] = _replicate_block(config, cell_index, 0, nrep)[1]
        return values
    block_size = max(1, nrep // (workers * 8))
    starts = list(range(0, nrep, block_size))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [
            pool.submit(_replicate_block, config, cell_index, s, min(s + block_size, nrep))
            for s in starts
        ]
        for fut in futures:
            start, block = fut.result()
            values[start : start + block.shape[0]] = block
    return values


@dataclass(frozen=True)
class MseRow:
    delta0: float
    epsilon0: float
    variant: str
    mse: float
    mc_se: float
    n_fail: int


@dataclass(frozen=True)
class MseTable:
    """Empirical mean squared errors per grid cell and estimator variant."""

    rows: tuple
    nrep: int

    def lookup(self, delta0: float, epsilon0: float, variant: str) -> MseRow:
        for row in self.rows:
            if row.delta0 == delta0 and row.epsilon0 == epsilon0 and row.variant == variant:
                return row
        raise KeyError((delta0, epsilon0, variant))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["delta0", "epsilon0", "variant", "mse", "mc_se", "n_fail"])
            for row in self.rows:
                writer.writerow(
                    [repr(row.delta0), repr(row.epsilon0), row.variant,
                     repr(row.mse), repr(row.mc_se), row.n_fail]
                )

    def to_json(self, path) -> None:
        payload = {
            "nrep": self.nrep,
            "rows": [
                {
                    "delta0": row.delta0,
                    "epsilon0": row.epsilon0,
                    "variant": row.variant,
                    "mse": row.mse,
                    "mc_se": row.mc_se,
                    "n_fail": row.n_fail,
                }
                for row in self.rows
            ],
        }
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")


def summarize_cell(values: np.ndarray, tau: float) -> list[tuple[float, float, int]]:
    """(mse, mc_se, n_fail) per variant from a (nrep, 4) estimate array.

    The MSE divides by the achieved replicate count; its Monte Carlo SE is the
    sample SD of the squared errors over sqrt of that count.
    """
    out = []
    for j in range(values.shape[1]):
        col = values[:, j]
        ok = np.isfinite(col)
        n_ok = int(ok.sum())
        n_fail = col.shape[0] - n_ok
        if n_ok == 0:
            out.append((float("nan"), float("nan"), n_fail))
            continue
        sq = (col[ok] - tau) ** 2
        mse = float(np.sum(sq) / n_ok)
        mc_se = float(np.std(sq, ddof=1) / np.sqrt(n_ok)) if n_ok > 1 else float("nan")
        out.append((mse, mc_se, n_fail))
    return out


def run_monte_carlo(
    configs: Sequence[SimulationConfig], workers: int = 1
) -> MseTable:
    """Run every grid cell and collect the per-variant MSE table."""
    rows = []
    nrep = 0
    for cell_index, config in enumerate(configs):
        nrep = max(nrep, config.nrep)
        values = run_replicates(config, cell_index, workers)
        for variant, (mse, mc_se, n_fail) in zip(
            VARIANTS, summarize_cell(values, config.tau_true)
        ):
            rows.append(
                MseRow(config.delta0, config.epsilon0, variant, mse, mc_se, n_fail)
            )
    return MseTable(rows=tuple(rows), nrep=nrep)


def table_grid(
    nrep: int = 1000, n: int = 1000, seed: int = 0, **overrides
) -> list[SimulationConfig]:
    """The full (delta0, epsilon0) grid of valid cells, row-major in delta0."""
    base = SimulationConfig(n=n, nrep=nrep, seed=seed, **overrides)
    grid = []
    for delta0 in GRID_VALUES:
        for epsilon0 in GRID_VALUES:
            if epsilon0 + delta0 >= 1.0:
                continue
            grid.append(replace(base, delta0=delta0, epsilon0=epsilon0))
    return grid
