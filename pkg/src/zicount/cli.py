"""Command-line front end.

Subcommands: ``fit``, ``simulate``, ``curves``, ``diagnose``, and
``trajan-repro``.  Every run creates the output directory, writes a
``manifest.json`` echoing the configuration and library version, and exits
0 on success, 2 on usage errors, 3 on data errors, 4 on convergence
failures (1 otherwise), printing a machine-readable error JSON on failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .data import CountDataset, cell_summaries, load_trajan, read_csv, write_csv
from .diagnostics import (
    GridSpec,
    aic_table,
    empirical_zero_diagnostic,
    fitted_vs_observed,
    write_aic_csv,
    write_curve_csv,
    write_diagnostic_csv,
    write_fitted_observed_csv,
    zero_curve,
)
from .distributions import Family
from .exceptions import ConvergenceError, DataError
from .fit import FitOptions, FitResult, fit_mle, standard_errors
from .likelihood import DesignSpec, ModelSpec, loglik
from .links import ZiType, match_dispersion_through_point, zi_gamma_from_point
from .simulate import SimPlan, simulate

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_CONVERGENCE = 4


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="zicount",
        description="Zero-inflated and over-dispersed count regression.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_model_flags(p):
        p.add_argument("--zi", choices=[z.value for z in ZiType], default="none",
                       help="zero-alteration link (default: none)")
        p.add_argument("--base", choices=[f.value for f in Family],
                       default="poisson", help="base family (default: poisson)")
        p.add_argument("--phi-free", action="store_true",
                       help="estimate the NB dispersion (otherwise --phi is fixed)")
        p.add_argument("--phi", type=float, default=0.0,
                       help="fixed dispersion value (NB families)")
        p.add_argument("--allow-deflation", action="store_true",
                       help="type C only: allow gamma > 0 (zero deflation)")

    p_fit = sub.add_parser("fit", help="maximum-likelihood fit of one model")
    p_fit.add_argument("--input", required=True, help="input CSV")
    p_fit.add_argument("--response", required=True, help="response column name")
    p_fit.add_argument("--cell", help="replicate-cell column (saturated mean design)")
    p_fit.add_argument("--mean-covariates",
                       help="comma-separated mean covariates (instead of --cell)")
    p_fit.add_argument("--gamma-covariates",
                       help="comma-separated covariates for the gamma predictor")
    add_model_flags(p_fit)
    p_fit.add_argument("--seed", type=int, default=1)
    p_fit.add_argument("--out", required=True, help="output directory")

    p_sim = sub.add_parser("simulate", help="draw an iid dataset from one model")
    add_model_flags(p_sim)
    p_sim.add_argument("--lam", type=float, required=True, help="base mean")
    p_sim.add_argument("--gamma", type=float, default=0.0,
                       help="alteration parameter")
    p_sim.add_argument("--n", type=int, required=True)
    p_sim.add_argument("--seed", type=int, default=1)
    p_sim.add_argument("--response", default="y", help="response column name")
    p_sim.add_argument("--out", required=True)

    p_curves = sub.add_parser(
        "curves", help="matched zero-alteration curves through one point")
    p_curves.add_argument("--point", nargs=2, type=float, default=(0.2, 0.4),
                          metavar=("PI0", "PIT0"),
                          help="common point (default: 0.2 0.4)")
    p_curves.add_argument("--grid-n", type=int, default=512)
    p_curves.add_argument("--grid-eps", type=float, default=1e-4)
    p_curves.add_argument("--out", required=True)

    p_diag = sub.add_parser(
        "diagnose", help="fit a model and run the binned zero diagnostic")
    p_diag.add_argument("--input", required=True)
    p_diag.add_argument("--response", required=True)
    p_diag.add_argument("--cell")
    p_diag.add_argument("--mean-covariates")
    p_diag.add_argument("--gamma-covariates")
    add_model_flags(p_diag)
    p_diag.add_argument("--bins", type=int, default=4)
    p_diag.add_argument("--seed", type=int, default=1)
    p_diag.add_argument("--out", required=True)

    p_repro = sub.add_parser(
        "trajan-repro",
        help="fit the seven reference models to the packaged rooting data "
             "and check the expected fitted-value structure")
    p_repro.add_argument("--seed", type=int, default=1)
    p_repro.add_argument("--out", required=True)
    return parser


def _prepare_out(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    config = {k: v for k, v in vars(args).items() if k != "func"}
    manifest = {"schema_version": SCHEMA_VERSION, "version": __version__,
                "config": config}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n",
                                       encoding="utf-8")
    return out


def _spec_from_args(args) -> ModelSpec:
    if args.cell and args.mean_covariates:
        raise DataError("--cell and --mean-covariates are mutually exclusive")
    if args.cell:
        mean = DesignSpec(saturated_on=args.cell)
    elif args.mean_covariates:
        mean = DesignSpec(terms=tuple(t.strip() for t in
                                      args.mean_covariates.split(",") if t.strip()))
    else:
        mean = DesignSpec()
    gamma = None
    if args.zi != "none" and args.gamma_covariates:
        gamma = DesignSpec(terms=tuple(t.strip() for t in
                                       args.gamma_covariates.split(",") if t.strip()))
    return ModelSpec(
        family=Family(args.base),
        zi=ZiType(args.zi),
        mean_design=mean,
        gamma_design=gamma,
        phi_mode="free" if args.phi_free else "fixed",
        phi_fixed=args.phi,
        allow_deflation=args.allow_deflation,
    )


def _fit_payload(fit: FitResult, data: CountDataset, cell: str | None) -> dict:
    ses = standard_errors(fit)
    payload = {
        "schema_version": SCHEMA_VERSION,
        "model": fit.spec.to_dict(),
        "n_obs": data.n,
        "params": {name: float(v) for name, v in zip(fit.param_names, fit.params)},
        "standard_errors": None if ses is None else
        {name: float(v) for name, v in zip(fit.param_names, ses)},
        "loglik": fit.loglik_value,
        "aic": fit.aic,
        "converged": fit.converged,
        "iterations": fit.iterations,
        "overall_fitted_zero_prob": float(np.mean(fit.fitted_pit0)),
        "vcov": None if fit.vcov is None else fit.vcov.tolist(),
        "message": fit.message,
    }
    if cell:
        payload["cells"] = [
            {"cell": r.cell, "n": r.n, "mean_obs": r.mean_obs,
             "mean_fit": r.mean_fit, "zero_prop_obs": r.zero_prop_obs,
             "zero_prob_fit": r.zero_prob_fit, "pi0_fit": r.pi0_fit}
            for r in fitted_vs_observed(fit, data, cell)
        ]
    return payload


def _cmd_fit(args) -> int:
    data = read_csv(args.input, response=args.response, cell=args.cell)
    spec = _spec_from_args(args)
    out = _prepare_out(args)
    fit = fit_mle(spec, data, FitOptions(seed=args.seed))
    payload = _fit_payload(fit, data, args.cell)
    (out / "fit.json").write_text(json.dumps(payload, indent=2) + "\n",
                                  encoding="utf-8")
    if args.cell:
        write_fitted_observed_csv(fitted_vs_observed(fit, data, args.cell),
                                  out / "fitted_observed.csv")
    print(f"loglik={fit.loglik_value:.6f} aic={fit.aic:.6f} -> {out / 'fit.json'}")
    return EXIT_OK


def _cmd_simulate(args) -> int:
    spec = _spec_from_args(argparse.Namespace(
        cell=None, mean_covariates=None, gamma_covariates=None, **{
            k: getattr(args, k)
            for k in ("zi", "base", "phi_free", "phi", "allow_deflation")}))
    params = [float(np.log(args.lam))]
    if spec.zi is not ZiType.NONE:
        gamma = args.gamma
        if spec.gamma_is_log_negated:
            if gamma >= 0:
                raise DataError("type C without --allow-deflation needs gamma < 0")
            gamma = float(np.log(-gamma))
        params.append(gamma)
    if spec.phi_mode == "free":
        if args.phi <= 0:
            raise DataError("--phi-free simulation needs --phi > 0 as the true value")
        params.append(float(np.log(args.phi)))
    out = _prepare_out(args)
    data = simulate(SimPlan(spec, tuple(params), args.n, args.seed))
    write_csv(data, out / "dataset.csv", response=args.response)
    print(f"wrote {args.n} rows -> {out / 'dataset.csv'}")
    return EXIT_OK


_CURVE_MODELS = (
    ("type A", ZiType.A),
    ("type B", ZiType.B),
    ("type C", ZiType.C),
    ("type D", ZiType.D),
    ("NB-lin", Family.NBLIN),
    ("NB-quad", Family.NBQUAD),
)


def _cmd_curves(args) -> int:
    from .plots import render_curves

    pi0, pit0 = args.point
    grid = GridSpec(args.grid_n, args.grid_eps)
    out = _prepare_out(args)
    tables = []
    for label, model in _CURVE_MODELS:
        if isinstance(model, ZiType):
            param = zi_gamma_from_point(model, pi0, pit0, allow_deflation=True)
        else:
            param = match_dispersion_through_point(model, pi0, pit0)
        table = zero_curve(f"{label} ({param:.3f})", model, param, grid,
                           points=[(pi0, pit0)])
        tables.append(table)
        slug = label.lower().replace(" ", "_").replace("-", "_")
        write_curve_csv(table, out / f"curve_{slug}.csv")
    render_curves(tables, out / "curves.svg",
                  title=f"curves through ({pi0:g}, {pit0:g})")
    print(f"wrote {len(tables)} curves -> {out / 'curves.svg'}")
    return EXIT_OK


def _cmd_diagnose(args) -> int:
    from .plots import render_zero_diagnostic

    data = read_csv(args.input, response=args.response, cell=args.cell)
    spec = _spec_from_args(args)
    out = _prepare_out(args)
    fit = fit_mle(spec, data, FitOptions(seed=args.seed))
    diag = empirical_zero_diagnostic(fit, data, args.bins)
    write_diagnostic_csv(diag, out / "diagnostic.csv")
    render_zero_diagnostic(diag, out / "diagnostic.svg",
                           title=f"{args.base} / zi={args.zi}")
    print(f"max |obs - fitted| over {args.bins} bins: "
          f"{diag.max_abs_deviation:.4f} -> {out / 'diagnostic.csv'}")
    return EXIT_OK


def _trajan_specs() -> dict[str, ModelSpec]:
    sat = DesignSpec(saturated_on="cell")
    return {
        "poisson": ModelSpec(Family.POISSON, ZiType.NONE, sat),
        "nbquad": ModelSpec(Family.NBQUAD, ZiType.NONE, sat, phi_mode="free"),
        "nblin": ModelSpec(Family.NBLIN, ZiType.NONE, sat, phi_mode="free"),
        "zi-a": ModelSpec(Family.POISSON, ZiType.A, sat),
        "zi-b": ModelSpec(Family.POISSON, ZiType.B, sat),
        "zi-c": ModelSpec(Family.POISSON, ZiType.C, sat),
        "zi-d": ModelSpec(Family.POISSON, ZiType.D, sat),
    }


# Models whose saturated fit must reproduce every cell mean (1e-6 relative)
# versus those that must miss at least one (by more than 1e-4 relative).
_REPRODUCING = ("poisson", "nbquad", "zi-d")
_NON_REPRODUCING = ("nblin", "zi-a", "zi-b", "zi-c")


def _cmd_trajan_repro(args) -> int:
    from .plots import render_curve_panels, render_fitted_vs_observed

    data = load_trajan()
    table = cell_summaries(data)
    out = _prepare_out(args)

    fits, rows = {}, {}
    for label, spec in _trajan_specs().items():
        fits[label] = fit_mle(spec, data, FitOptions(seed=args.seed))
        rows[label] = fitted_vs_observed(fits[label], data, "cell")
        slug = label.replace("-", "_")
        write_fitted_observed_csv(rows[label], out / f"fitted_observed_{slug}.csv")

    checks = []

    def check(name, passed, detail):
        checks.append({"name": name, "pass": bool(passed), "detail": detail})

    check("fixture_zero_proportion",
          abs(table.zero_prop - 0.237) <= 0.002,
          f"overall observed zero proportion {table.zero_prop:.6f} vs 0.237")
    for label in _REPRODUCING:
        dev = max(abs(r.mean_fit - r.mean_obs) / r.mean_obs for r in rows[label])
        check(f"{label}_cell_means_reproduced", dev <= 1e-6,
              f"max relative deviation {dev:.3e}")
    for label in _NON_REPRODUCING:
        dev = max(abs(r.mean_fit - r.mean_obs) / r.mean_obs for r in rows[label])
        check(f"{label}_cell_means_not_reproduced", dev > 1e-4,
              f"max relative deviation {dev:.3e}")
    zero_a = float(np.mean(fits["zi-a"].fitted_pit0))
    check("zi-a_overall_zero_prop", abs(zero_a - 0.237) <= 0.002,
          f"fitted overall zero probability {zero_a:.6f} vs 0.237")
    zero_d = float(np.mean(fits["zi-d"].fitted_pit0))
    check("zi-d_overall_zero_prop", abs(zero_d - table.zero_prop) <= 1e-6,
          f"fitted overall zero probability {zero_d:.8f} vs observed "
          f"{table.zero_prop:.8f}")

    aic_rows = aic_table(list(fits.values()), labels=list(fits))
    write_aic_csv(aic_rows, out / "aic.csv")

    render_fitted_vs_observed({k: rows[k] for k in ("poisson", "nbquad", "nblin")},
                              out / "fitted_vs_observed_base.svg")
    render_fitted_vs_observed({k: rows[k] for k in ("zi-a", "zi-b", "zi-c", "zi-d")},
                              out / "fitted_vs_observed_zi.svg")

    curve_tables = []
    for label, model in _CURVE_MODELS:
        slug = label.lower().replace(" ", "_").replace("-", "_")
        fit_key = {"type A": "zi-a", "type B": "zi-b", "type C": "zi-c",
                   "type D": "zi-d", "NB-lin": "nblin", "NB-quad": "nbquad"}[label]
        fit = fits[fit_key]
        if isinstance(model, ZiType):
            idx = next(i for i, n in enumerate(fit.param_names)
                       if n.startswith("zi"))
            param = float(fit.params[idx])
            if fit.spec.gamma_is_log_negated:
                param = -float(np.exp(param))
        else:
            param = float(np.exp(fit.params[-1]))
        points = np.array([[r.pi0_fit, r.zero_prop_obs] for r in rows[fit_key]])
        table_c = zero_curve(f"{label} ({param:.3f})", model, param,
                             GridSpec(512, 1e-4), points=points)
        curve_tables.append(table_c)
        write_curve_csv(table_c, out / f"curve_{slug}.csv")
    render_curve_panels(curve_tables, out / "zero_alteration.svg")

    report = {
        "schema_version": SCHEMA_VERSION,
        "n_obs": data.n,
        "overall_zero_proportion": table.zero_prop,
        "models": {label: _fit_payload(fits[label], data, "cell")
                   for label in fits},
        "aic": [{"label": r.label, "aic": r.aic, "delta_aic": r.delta_aic}
                for r in aic_rows],
        "checks": checks,
        "all_pass": all(c["pass"] for c in checks),
    }
    (out / "report.json").write_text(json.dumps(report, indent=2) + "\n",
                                     encoding="utf-8")
    for c in checks:
        print(f"[{'PASS' if c['pass'] else 'FAIL'}] {c['name']}: {c['detail']}")
    if not report["all_pass"]:
        raise RuntimeError("reference-structure checks failed; see report.json")
    print(f"all checks passed -> {out / 'report.json'}")
    return EXIT_OK


def reevaluate_fit_json(path, data: CountDataset) -> float:
    """Log-likelihood recomputed at the parameters stored in a fit.json."""
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    spec = ModelSpec.from_dict(payload["model"])
    params = np.array(list(payload["params"].values()), dtype=float)
    return loglik(spec, data, params)


_COMMANDS = {
    "fit": _cmd_fit,
    "simulate": _cmd_simulate,
    "curves": _cmd_curves,
    "diagnose": _cmd_diagnose,
    "trajan-repro": _cmd_trajan_repro,
}


def _emit_error(args, kind: str, message: str) -> None:
    payload = {"error": kind, "message": message}
    print(json.dumps(payload), file=sys.stderr)
    out = getattr(args, "out", None)
    if out and Path(out).is_dir():
        (Path(out) / "error.json").write_text(json.dumps(payload, indent=2) + "\n",
                                              encoding="utf-8")


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except DataError as exc:
        _emit_error(args, "data", str(exc))
        return EXIT_DATA
    except ConvergenceError as exc:
        _emit_error(args, "convergence", str(exc))
        return EXIT_CONVERGENCE
    except Exception as exc:  # noqa: BLE001 - single CLI failure funnel
        _emit_error(args, type(exc).__name__, str(exc))
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
