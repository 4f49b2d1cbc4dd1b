"""Batch command-line front end.

Subcommands: ``fit``, ``estimate-mean``, ``estimate-ate``, ``simulate``,
``bootstrap``. Every option can come from four places, strongest first:
explicit flag, manifest JSON (``--manifest``), environment variable
(``SPPS_<FLAG>`` with dashes as underscores), built-in default. All outputs
are deterministic functions of the inputs and the seed.

Exit codes: 0 success, 2 input error, 3 non-convergence, 4 degenerate
estimation, 5 unreliable bootstrap. Failures print a structured error JSON to
stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .bootstrap import BootstrapConfig, bootstrap_estimate
from .data_io import parse_csv, write_dataset_csv
from .errors import SPPSError, InputError
from .estimators import estimate_ate_ipw, estimate_ate_ld, estimate_mean_ipw
from .fit import fit_spps
from .model import MISSING_DATA, TREATMENT, get_link
from .simulation import generate_sample, run_monte_carlo, table_grid
from .solvers import SolverControls, fit_plain_glm

ENV_PREFIX = "SPPS_"

_MODES = {"missing": MISSING_DATA, "treatment": TREATMENT}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spps",
        description="Bounded propensity score fitting and IPW estimation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, *, data=True):
        p.add_argument("--manifest", default=None, help="JSON file with option values")
        p.add_argument("--output", default=None, help="output directory")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--workers", type=int, default=None)
        p.add_argument("--link", choices=["logistic", "probit"], default=None)
        if data:
            p.add_argument("--input", default=None, help="input CSV path")
            p.add_argument("--indicator-col", default=None)
            p.add_argument("--outcome-col", default=None)
            p.add_argument("--covariates", default=None, help="comma-separated column names")
            p.add_argument("--mode", choices=["missing", "treatment"], default=None)

    p_fit = sub.add_parser("fit", help="fit the bounded propensity model")
    add_common(p_fit)

    p_mean = sub.add_parser("estimate-mean", help="IPW estimate of the outcome mean")
    add_common(p_mean)
    p_mean.add_argument("--variant", default=None, help="comma-separated subset of O,P")

    p_ate = sub.add_parser("estimate-ate", help="IPW estimates of the ATE")
    add_common(p_ate)
    p_ate.add_argument("--variant", default=None, help="comma-separated subset of O,P,LD,PLD")

    p_sim = sub.add_parser("simulate", help="Monte Carlo MSE comparison over the default grid")
    add_common(p_sim, data=False)
    p_sim.add_argument("--nrep", type=int, default=None)
    p_sim.add_argument("--n", type=int, default=None)
    p_sim.add_argument(
        "--emit-samples", action="store_true", default=None,
        help="also write every generated sample as CSV (use with a small --nrep)",
    )

    p_boot = sub.add_parser("bootstrap", help="stratified bootstrap SE and CI")
    add_common(p_boot)
    p_boot.add_argument("--variant", default=None, help="comma-separated subset of O,P,LD,PLD")
    p_boot.add_argument("--nboot", type=int, default=None)

    return parser


class _Options:
    """Resolves option values: flag > manifest > environment > default."""

    def __init__(self, args: argparse.Namespace):
        self.args = vars(args)
        manifest_path = self.args.get("manifest") or os.environ.get(ENV_PREFIX + "MANIFEST")
        self.manifest = {}
        if manifest_path:
            try:
                with open(manifest_path) as fh:
                    self.manifest = json.load(fh)
            except OSError as err:
                raise InputError(f"cannot read manifest: {err}") from None
            except json.JSONDecodeError as err:
                raise InputError(f"malformed manifest JSON: {err}") from None
            if not isinstance(self.manifest, dict):
                raise InputError("manifest must be a JSON object")

    def get(self, name, default=None, cast=None):
        value = self.args.get(name.replace("-", "_"))
        if value is None:
            value = self.manifest.get(name.replace("-", "_"), self.manifest.get(name))
        if value is None:
            value = os.environ.get(ENV_PREFIX + name.replace("-", "_").upper())
        if value is None:
            return default
        if cast is not None:
            try:
                value = cast(value)
            except (TypeError, ValueError):
                raise InputError(f"invalid value for --{name}: {value!r}") from None
        return value

    def require(self, name, cast=None):
        value = self.get(name, None, cast)
        if value is None:
            raise InputError(f"--{name} is required (flag, manifest, or {ENV_PREFIX}{name.replace('-', '_').upper()})")
        return value

    def controls(self) -> SolverControls:
        overrides = self.manifest.get("controls", {})
        if not isinstance(overrides, dict):
            raise InputError("manifest 'controls' must be an object")
        try:
            return replace(SolverControls(), **overrides)
        except TypeError as err:
            raise InputError(f"unknown solver control: {err}") from None


def _as_bool(value) -> bool:
    if isinstance(value, bool):
        return value
    return str(value).strip().lower() in ("1", "true", "yes", "on")


def _variant_list(opts, default, allowed):
    raw = opts.get("variant", default)
    if isinstance(raw, str):
        variants = [v.strip() for v in raw.split(",") if v.strip()]
    else:
        variants = list(raw)
    for v in variants:
        if v not in allowed:
            raise InputError(f"variant {v!r} not in {allowed}")
    if not variants:
        raise InputError("no variants requested")
    return variants


def _load_dataset(opts, mode):
    path = opts.require("input")
    if not Path(path).exists():
        raise InputError(f"input file not found: {path}")
    covariates = opts.require("covariates")
    if isinstance(covariates, str):
        covariates = [c.strip() for c in covariates.split(",") if c.strip()]
    return parse_csv(
        path,
        indicator=opts.require("indicator-col"),
        covariates=covariates,
        outcome=opts.get("outcome-col"),
        mode=mode,
    )


def _out_dir(opts) -> Path:
    out = Path(opts.get("output", "."))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, payload) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _report_payload(report):
    return {
        "estimand": report.estimand,
        "variant": report.variant,
        "value": report.value,
        "weights_summary": report.weights_summary,
        "c1": report.c1,
        "c0": report.c0,
        "se": report.se,
        "ci_low": None if report.ci is None else report.ci[0],
        "ci_high": None if report.ci is None else report.ci[1],
        "n_boot_effective": report.n_boot_effective,
        "n_fail": report.n_fail,
    }


def _cmd_fit(opts) -> None:
    mode = _MODES[opts.get("mode", "treatment")]
    link = get_link(opts.get("link", "logistic"))
    data = _load_dataset(opts, mode)
    result = fit_spps(data, link, mode, opts.controls())
    out = _out_dir(opts)
    _write_json(out / "fit.json", {
        "theta": {
            "epsilon": result.theta_hat.epsilon,
            "delta": result.theta_hat.delta,
            "beta": list(result.theta_hat.beta),
            "mode": result.theta_hat.mode,
        },
        "loglik": result.loglik,
        "converged": result.converged,
        "guard_triggered": result.guard_triggered,
        "fallback_plain_glm": result.fallback_plain_glm,
        "trace": [[it, ll] for it, ll in result.trace],
        "assumption_diagnostics": result.assumption_diagnostics,
    })
    with open(out / "fitted.csv", "w") as fh:
        fh.write("fitted\n")
        for value in result.fitted:
            fh.write(repr(float(value)) + "\n")


def _fitted_for_variant(variant, data, link, mode, controls):
    if variant in ("O", "LD"):
        step = fit_plain_glm(data, link, controls)
        return link.evaluate(data.design @ np.asarray(step.value))
    return fit_spps(data, link, mode, controls).fitted


def _cmd_estimate(opts, estimand) -> None:
    if estimand == "mean":
        mode = _MODES[opts.get("mode", "missing")]
        variants = _variant_list(opts, "O,P", ("O", "P"))
    else:
        mode = _MODES[opts.get("mode", "treatment")]
        variants = _variant_list(opts, "O,P,LD,PLD", ("O", "P", "LD", "PLD"))
    link = get_link(opts.get("link", "logistic"))
    controls = opts.controls()
    data = _load_dataset(opts, mode)
    fitted_cache = {}
    reports = []
    for variant in variants:
        family = "plain" if variant in ("O", "LD") else "spps"
        if family not in fitted_cache:
            fitted_cache[family] = _fitted_for_variant(variant, data, link, mode, controls)
        fitted = fitted_cache[family]
        if estimand == "mean":
            reports.append(estimate_mean_ipw(data, fitted, variant))
        elif variant in ("O", "P"):
            reports.append(estimate_ate_ipw(data, fitted, variant))
        else:
            reports.append(estimate_ate_ld(data, fitted, variant))
    out = _out_dir(opts)
    _write_json(out / "estimates.json", [_report_payload(r) for r in reports])


def _cmd_simulate(opts) -> None:
    seed = int(opts.get("seed", 0, int))
    nrep = int(opts.get("nrep", 1000, int))
    n = int(opts.get("n", 1000, int))
    workers = int(opts.get("workers", 1, int))
    grid = table_grid(nrep=nrep, n=n, seed=seed)
    out = _out_dir(opts)
    if _as_bool(opts.get("emit-samples", False)):
        samples_dir = out / "samples"
        samples_dir.mkdir(exist_ok=True)
        for cell_index, config in enumerate(grid):
            for rep in range(config.nrep):
                rng = np.random.default_rng([config.seed, cell_index, rep])
                sample = generate_sample(config, rng)
                write_dataset_csv(
                    sample, samples_dir / f"cell{cell_index:02d}_rep{rep:04d}.csv"
                )
    table = run_monte_carlo(grid, workers=workers)
    table.to_csv(out / "mse.csv")
    table.to_json(out / "mse.json")


def _cmd_bootstrap(opts) -> None:
    mode = _MODES[opts.get("mode", "treatment")]
    link = get_link(opts.get("link", "logistic"))
    allowed = ("O", "P") if mode == MISSING_DATA else ("O", "P", "LD", "PLD")
    variants = _variant_list(opts, "O", allowed)
    config = BootstrapConfig(
        n_boot=int(opts.get("nboot", 1000, int)),
        seed=int(opts.get("seed", 0, int)),
    )
    workers = int(opts.get("workers", 1, int))
    controls = opts.controls()
    data = _load_dataset(opts, mode)
    reports = [
        bootstrap_estimate(data, v, link, mode, config, controls, workers=workers)
        for v in variants
    ]
    out = _out_dir(opts)
    _write_json(out / "bootstrap.json", [_report_payload(r) for r in reports])


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        opts = _Options(args)
        if args.command == "fit":
            _cmd_fit(opts)
        elif args.command == "estimate-mean":
            _cmd_estimate(opts, "mean")
        elif args.command == "estimate-ate":
            _cmd_estimate(opts, "ate")
        elif args.command == "simulate":
            _cmd_simulate(opts)
        elif args.command == "bootstrap":
            _cmd_bootstrap(opts)
    except SPPSError as err:
        json.dump(
            {"error": {"type": type(err).__name__, "message": str(err),
                       "exit_code": err.exit_code}},
            sys.stderr, indent=2, sort_keys=True,
        )
        sys.stderr.write("\n")
        return err.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
