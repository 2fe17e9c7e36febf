"""Comparison artifacts: fitted-vs-observed tables, zero-probability curves,
the empirical zero diagnostic, and AIC ranking.

Every artifact is a plain table with a CSV writer, so the numbers stay
testable independent of any rendering; figure emission lives in
:mod:`zicount.plots`.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .data import CountDataset, cell_summaries
from .distributions import Family
from .exceptions import DataError
from .links import ZiType, implicit_zi_curve, zi_zero_prob


@dataclass(frozen=True)
class GridSpec:
    """Evaluation grid for zero-probability curves: ``n`` points spanning
    ``[eps, 1 - eps]``."""

    n: int = 512
    eps: float = 1e-4

    def values(self) -> np.ndarray:
        if self.n < 2 or not 0 < self.eps < 0.5:
            raise ValueError(f"bad grid spec {self!r}")
        return np.linspace(self.eps, 1.0 - self.eps, self.n)


@dataclass
class CurveTable:
    """One altered-zero-probability curve over a base-probability grid,
    with optional observed overlay points ``(pi0_hat, p0_observed)``."""

    label: str
    grid: np.ndarray
    pit0: np.ndarray
    points: np.ndarray | None = None

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.pit0 = np.asarray(self.pit0, dtype=float)
        if self.grid.shape != self.pit0.shape or self.grid.ndim != 1:
            raise ValueError("grid and pit0 must be matching 1-d arrays")
        if np.any(np.diff(self.grid) <= 0):
            raise ValueError("grid must be strictly increasing")
        if np.any((self.pit0 <= 0) | (self.pit0 >= 1)):
            raise ValueError("pit0 must lie in (0, 1)")
        if self.points is not None:
            self.points = np.atleast_2d(np.asarray(self.points, dtype=float))


def zero_curve(label: str, model, param: float,
               grid: GridSpec | None = None, points=None) -> CurveTable:
    """Evaluate one zero-alteration curve over a grid of base probabilities.

    ``model`` is a :class:`ZiType` (with ``param`` = gamma; NONE draws the
    identity diagonal) or an NB :class:`Family` (with ``param`` = phi).
    """
    values = (grid or GridSpec()).values()
    if isinstance(model, ZiType):
        if model is ZiType.NONE:
            pit0 = values.copy()
        else:
            pit0 = zi_zero_prob(model, values, float(param))
    elif isinstance(model, Family) and model is not Family.POISSON:
        pit0 = implicit_zi_curve(model, values, float(param))
    else:
        raise ValueError(f"model must be a ZiType or NB Family, got {model!r}")
    return CurveTable(label, values, pit0, points)


@dataclass(frozen=True)
class CellFitRow:
    """Observed and fitted per-cell quantities.

    ``pi0_fit`` is the base (unaltered) zero probability under the model's
    own fitted mean rate, the x-coordinate for curve overlays.
    """

    cell: str
    n: int
    mean_obs: float
    mean_fit: float
    zero_prop_obs: float
    zero_prob_fit: float
    pi0_fit: float


def fitted_vs_observed(fit, data: CountDataset, cell_column: str) -> list[CellFitRow]:
    """Per-cell fitted means/zero probabilities next to the sample values."""
    if fit.fitted_mu.shape != data.y.shape:
        raise DataError("fit and data have different numbers of rows")
    labels = data.column(cell_column)
    table = cell_summaries(data, cell_column)
    rows = []
    for cell, level in zip(table.cells, data.levels(cell_column)):
        mask = labels == level
        rows.append(CellFitRow(
            cell=cell.cell,
            n=cell.n,
            mean_obs=cell.mean,
            mean_fit=float(np.mean(fit.fitted_mu[mask])),
            zero_prop_obs=cell.zero_prop,
            zero_prob_fit=float(np.mean(fit.fitted_pit0[mask])),
            pi0_fit=float(np.mean(fit.fitted_pi0[mask])),
        ))
    return rows


@dataclass(frozen=True)
class ZeroDiagnosticBin:
    pi0_fit_mean: float
    zero_frac: float
    n: int


@dataclass(frozen=True)
class ZeroDiagnostic:
    """Binned comparison of observed zero fractions against fitted zero
    probabilities; on-the-unit-line means the zeros are well modelled."""

    bins: tuple[ZeroDiagnosticBin, ...]

    @property
    def max_abs_deviation(self) -> float:
        return max(abs(b.zero_frac - b.pi0_fit_mean) for b in self.bins)


def empirical_zero_diagnostic(fit, data: CountDataset, bins: int) -> ZeroDiagnostic:
    """Group observations into equal-count bins by fitted zero probability
    and compare each bin's observed zero fraction with its mean fitted value.
    """
    if bins < 2:
        raise ValueError("need at least 2 bins")
    if fit.fitted_pit0.shape != data.y.shape:
        raise DataError("fit and data have different numbers of rows")
    order = np.argsort(fit.fitted_pit0, kind="stable")
    chunks = np.array_split(order, bins)
    if min(len(c) for c in chunks) < 5:
        raise DataError(f"{bins} bins over {data.n} rows leaves a bin with "
                        "fewer than 5 observations")
    out = []
    for chunk in chunks:
        out.append(ZeroDiagnosticBin(
            pi0_fit_mean=float(np.mean(fit.fitted_pit0[chunk])),
            zero_frac=float(np.mean(data.y[chunk] == 0)),
            n=len(chunk),
        ))
    return ZeroDiagnostic(tuple(out))


@dataclass(frozen=True)
class AicRow:
    label: str
    n_params: int
    loglik: float
    aic: float
    delta_aic: float


def aic_table(fits, labels=None) -> list[AicRow]:
    """Rank converged fits by AIC (ascending, stable under ties)."""
    fits = list(fits)
    if labels is None:
        labels = [f"{f.spec.family.value}/zi={f.spec.zi.value}" for f in fits]
    if any(not f.converged for f in fits):
        raise ValueError("aic_table requires converged fits")
    best = min(f.aic for f in fits)
    rows = [AicRow(label, f.n_params, f.loglik_value, f.aic, f.aic - best)
            for label, f in zip(labels, fits)]
    return sorted(rows, key=lambda r: r.aic)


def _fmt(value: float) -> str:
    return repr(float(value))


def write_curve_csv(table: CurveTable, path) -> None:
    """Write a curve as ``pi0,pit0`` rows, with overlay-point columns when
    points are present (fixed column order)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        if table.points is None:
            writer.writerow(["pi0", "pit0"])
            for g, p in zip(table.grid, table.pit0):
                writer.writerow([_fmt(g), _fmt(p)])
            return
        writer.writerow(["pi0", "pit0", "point_pi0", "point_p0"])
        for i, (g, p) in enumerate(zip(table.grid, table.pit0)):
            row = [_fmt(g), _fmt(p)]
            if i < len(table.points):
                row += [_fmt(table.points[i, 0]), _fmt(table.points[i, 1])]
            else:
                row += ["", ""]
            writer.writerow(row)


def write_fitted_observed_csv(rows, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["cell", "n", "mean_obs", "mean_fit",
                         "zero_prop_obs", "zero_prob_fit", "pi0_fit"])
        for r in rows:
            writer.writerow([r.cell, r.n, _fmt(r.mean_obs), _fmt(r.mean_fit),
                             _fmt(r.zero_prop_obs), _fmt(r.zero_prob_fit),
                             _fmt(r.pi0_fit)])


def write_diagnostic_csv(diag: ZeroDiagnostic, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["pi0_fit_mean", "zero_frac", "n"])
        for b in diag.bins:
            writer.writerow([_fmt(b.pi0_fit_mean), _fmt(b.zero_frac), b.n])


def write_aic_csv(rows, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["label", "n_params", "loglik", "aic", "delta_aic"])
        for r in rows:
            writer.writerow([r.label, r.n_params, _fmt(r.loglik),
                             _fmt(r.aic), _fmt(r.delta_aic)])
