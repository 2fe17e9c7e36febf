"""Dataset container, CSV ingestion, and per-cell summaries.

The CSV dialect is deliberately minimal: comma separated, UTF-8, one header
row, no quoting of numerics.  The response column must hold non-negative
integers; every other column is a covariate, numeric when every entry parses
as a float and categorical (strings, first-appearance level order) otherwise.
"""

from __future__ import annotations

import csv
import importlib.resources
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DataError


@dataclass
class CountDataset:
    """Response counts plus named covariate columns.

    ``cell_column`` optionally names the covariate holding replicate-cell
    labels (used by saturated designs and per-cell summaries).
    """

    y: np.ndarray
    covariates: dict[str, np.ndarray] = field(default_factory=dict)
    cell_column: str | None = None

    def __post_init__(self):
        y = np.asarray(self.y)
        if y.ndim != 1 or y.size == 0:
            raise DataError("response must be a non-empty 1-d array")
        if not np.issubdtype(y.dtype, np.number) or np.any(y != np.floor(y)):
            raise DataError("response counts must be integers")
        if np.any(y < 0):
            raise DataError("response counts must be non-negative")
        self.y = y.astype(np.int64)
        for name, col in self.covariates.items():
            col = np.asarray(col)
            if col.shape != self.y.shape:
                raise DataError(f"column {name!r} has length {col.size}, "
                                f"expected {self.y.size}")
            self.covariates[name] = col
        if self.cell_column is not None and self.cell_column not in self.covariates:
            raise DataError(f"cell column {self.cell_column!r} not present")

    @property
    def n(self) -> int:
        return self.y.size

    def column(self, name: str) -> np.ndarray:
        if name not in self.covariates:
            raise DataError(f"column {name!r} not present")
        return self.covariates[name]

    def levels(self, name: str) -> list:
        """Distinct values of a column in first-appearance order."""
        return list(dict.fromkeys(self.column(name).tolist()))

    def is_numeric(self, name: str) -> bool:
        return np.issubdtype(self.column(name).dtype, np.number)


@dataclass(frozen=True)
class CellSummary:
    """Replicate-cell summary: size, zeros, mean, and zero-truncated mean."""

    cell: str
    n: int
    n_zero: int
    mean: float
    zero_prop: float
    trunc_mean: float


@dataclass(frozen=True)
class CellSummaryTable:
    """Per-cell summaries plus the pooled zero proportion."""

    cells: tuple[CellSummary, ...]
    n: int
    n_zero: int

    @property
    def zero_prop(self) -> float:
        return self.n_zero / self.n


def cell_summaries(data: CountDataset, cell_column: str | None = None) -> CellSummaryTable:
    """Summaries for each distinct cell, in first-appearance order."""
    column = cell_column or data.cell_column
    if column is None:
        raise DataError("no cell column given")
    labels = data.column(column)
    out = []
    for level in data.levels(column):
        mask = labels == level
        y = data.y[mask]
        n = int(mask.sum())
        n_zero = int(np.sum(y == 0))
        mean = float(np.mean(y))
        trunc_mean = float(np.mean(y[y > 0])) if n_zero < n else math.nan
        out.append(CellSummary(str(level), n, n_zero, mean, n_zero / n, trunc_mean))
    return CellSummaryTable(tuple(out), data.n, int(np.sum(data.y == 0)))


def _parse_rows(lines, response: str, cell: str | None, source: str) -> CountDataset:
    reader = csv.reader(lines)
    try:
        header = next(reader)
    except StopIteration:
        raise DataError(f"{source}: empty file") from None
    header = [h.strip() for h in header]
    if response not in header:
        raise DataError(f"{source}: response column {response!r} not in header {header}")
    if cell is not None and cell not in header:
        raise DataError(f"{source}: cell column {cell!r} not in header {header}")

    columns: dict[str, list[str]] = {name: [] for name in header}
    y = []
    for lineno, row in enumerate(reader, start=2):
        if len(row) != len(header):
            raise DataError(f"{source}: row {lineno} has {len(row)} fields, "
                            f"expected {len(header)}")
        for name, raw in zip(header, row):
            columns[name].append(raw.strip())
    for lineno, raw in enumerate(columns[response], start=2):
        try:
            value = int(raw)
        except ValueError:
            raise DataError(f"{source}: row {lineno}, column {response!r}: "
                            f"{raw!r} is not an integer count") from None
        if value < 0:
            raise DataError(f"{source}: row {lineno}, column {response!r}: "
                            f"negative count {value}")
        y.append(value)

    covariates: dict[str, np.ndarray] = {}
    for name in header:
        if name == response:
            continue
        values = columns[name]
        try:
            covariates[name] = np.array([float(v) for v in values])
        except ValueError:
            covariates[name] = np.array(values, dtype=object)
    return CountDataset(np.array(y), covariates, cell_column=cell)


def read_csv(path, response: str, cell: str | None = None) -> CountDataset:
    """Read a dataset from ``path``; see the module docstring for the dialect."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            return _parse_rows(fh, response, cell, source=str(path))
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc


def write_csv(data: CountDataset, path, response: str = "y") -> None:
    """Write a dataset back out in the same dialect (response column first)."""
    names = list(data.covariates)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([response, *names])
        for i in range(data.n):
            row = [int(data.y[i])]
            for name in names:
                value = data.covariates[name][i]
                row.append(repr(float(value)) if data.is_numeric(name) else str(value))
            writer.writerow(row)


def load_trajan() -> CountDataset:
    """The packaged apple micropropagation rooting dataset.

    270 shoots of the cultivar Trajan; the response is the number of roots
    per shoot under a 2 (photoperiod) x 4 (BAP concentration) factorial with
    replication.  Transcribed from the frequency table published by Ridout,
    Demetrio & Hinde (1998), "Models for count data with many zeros".
    """
    text = (importlib.resources.files("zicount")
            .joinpath("data_files/trajan.csv").read_text(encoding="utf-8"))
    return _parse_rows(io.StringIO(text), response="roots", cell="cell",
                       source="trajan.csv")
