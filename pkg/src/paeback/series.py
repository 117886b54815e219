"""Core data model: time series container, CSV ingestion, transforms, and
forecast-error criteria.

Everything here is a pure function over immutable inputs; a ``TimeSeries``
never changes after construction.
"""

from __future__ import annotations

import csv
import enum
import json
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .errors import DataError

__all__ = [
    "TimeSeries",
    "Criterion",
    "SplitSpec",
    "load_csv",
    "log_return",
    "evaluate",
]


class TimeSeries:
    """Ordered sequence of finite real observations with optional string labels.

    Parameters
    ----------
    values : sequence of float
        Observations in time order. Must be non-empty and finite.
    labels : sequence of str, optional
        One label (e.g. a date) per observation.
    """

    __slots__ = ("_values", "_labels")

    def __init__(self, values: Iterable[float], labels: Optional[Sequence[str]] = None):
        arr = np.asarray(list(values) if not isinstance(values, np.ndarray) else values,
                         dtype=float)
        if arr.ndim != 1:
            raise DataError("time series values must be one-dimensional")
        if arr.size == 0:
            raise DataError("time series must be non-empty")
        if not np.all(np.isfinite(arr)):
            bad = int(np.flatnonzero(~np.isfinite(arr))[0])
            raise DataError(f"non-finite value at position {bad}")
        arr = arr.copy()
        arr.setflags(write=False)
        self._values = arr
        if labels is not None:
            labels = tuple(str(s) for s in labels)
            if len(labels) != arr.size:
                raise DataError(
                    f"labels length {len(labels)} != values length {arr.size}"
                )
        self._labels = labels

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def labels(self) -> Optional[tuple]:
        return self._labels

    def __len__(self) -> int:
        return self._values.size

    def __repr__(self) -> str:
        n = len(self)
        head = ", ".join(f"{v:g}" for v in self._values[:4])
        tail = ", ..." if n > 4 else ""
        return f"TimeSeries(n={n}, [{head}{tail}])"

    def slice(self, start: int, stop: int) -> "TimeSeries":
        """Contiguous sub-series (labels carried along when present)."""
        labels = self._labels[start:stop] if self._labels is not None else None
        return TimeSeries(self._values[start:stop], labels)

    def to_json(self) -> str:
        """JSON array of values (the plotting contract)."""
        return json.dumps([float(v) for v in self._values])

    def to_csv(self, path) -> None:
        """Write as two columns ``label,value``; row index stands in for
        missing labels."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["label", "value"])
            for i, v in enumerate(self._values):
                label = self._labels[i] if self._labels is not None else str(i)
                writer.writerow([label, repr(float(v))])


class Criterion(enum.Enum):
    """Forecast discrepancy criteria."""

    MSE = "mse"
    MAE = "mae"
    MAPE = "mape"
    RMSE = "rmse"
    SMAPE = "smape"

    @classmethod
    def parse(cls, name: Union[str, "Criterion"]) -> "Criterion":
        if isinstance(name, cls):
            return name
        try:
            return cls(name.strip().lower())
        except ValueError:
            options = ", ".join(c.value for c in cls)
            raise DataError(f"unknown criterion {name!r} (expected one of {options})")


@dataclass(frozen=True)
class SplitSpec:
    """History/development/validation split sizes.

    ``n`` observations of history are available, the most recent ``k`` form
    the development set, and the following ``h`` points are the validation
    set.
    """

    n: int
    k: int
    h: int

    def __post_init__(self):
        if not 1 <= self.k <= self.n:
            raise DataError(f"need 1 <= k <= n, got k={self.k}, n={self.n}")
        if self.h < 1:
            raise DataError(f"horizon must be >= 1, got {self.h}")

    def check_length(self, series_length: int) -> None:
        if self.n + self.h > series_length:
            raise DataError(
                f"insufficient data: need n + h = {self.n + self.h} observations, "
                f"series has {series_length}"
            )


def load_csv(path, column: Union[str, int], label_column: Union[str, int, None] = None) -> TimeSeries:
    """Read one numeric column (by header name or 0-based index) from a CSV file.

    The file must have a header row; values must parse as finite floats.
    Errors cite the offending 1-based data row.
    """
    try:
        fh = open(path, "r", newline="")
    except OSError as exc:
        raise DataError(f"cannot open {path}: {exc.strerror}")
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file (header row required)")

        def resolve(col) -> int:
            if isinstance(col, int) or (isinstance(col, str) and col.lstrip("-").isdigit()):
                idx = int(col)
                if not 0 <= idx < len(header):
                    raise DataError(f"{path}: column index {idx} out of range")
                return idx
            if col not in header:
                raise DataError(f"{path}: no column named {col!r} in header {header}")
            return header.index(col)

        vi = resolve(column)
        li = resolve(label_column) if label_column is not None else None

        values = []
        labels = [] if li is not None else None
        for row_no, row in enumerate(reader, start=1):
            if not row:
                continue
            if vi >= len(row):
                raise DataError(f"{path}: row {row_no} has no column {column!r}")
            cell = row[vi]
            try:
                v = float(cell)
            except ValueError:
                raise DataError(
                    f"{path}: unparseable value {cell!r} in column {column!r} at row {row_no}"
                )
            if not math.isfinite(v):
                raise DataError(
                    f"{path}: non-finite value {cell!r} in column {column!r} at row {row_no}"
                )
            values.append(v)
            if labels is not None:
                labels.append(row[li] if li < len(row) else "")
        if not values:
            raise DataError(f"{path}: no data rows")
    return TimeSeries(values, labels)


def log_return(prices: TimeSeries) -> TimeSeries:
    """Log returns ln(p_{t+1}) - ln(p_t); output is one shorter than the input."""
    p = prices.values
    if p.size < 2:
        raise DataError("need at least two prices to form returns")
    if np.any(p <= 0):
        bad = int(np.flatnonzero(p <= 0)[0])
        raise DataError(f"non-positive price {p[bad]!r} at position {bad}")
    lp = np.log(p)
    labels = prices.labels[1:] if prices.labels is not None else None
    return TimeSeries(np.diff(lp), labels)


def evaluate(actual, predicted, criterion: Union[str, Criterion]) -> float:
    """Score forecasts against realized values with the given criterion.

    MAPE is a fraction, SMAPE is on the 0-100 percent scale. Both reject
    actual vectors containing exact zeros rather than silently dropping
    terms, which would change the divisor and corrupt comparisons.
    """
    criterion = Criterion.parse(criterion)
    a = np.asarray(actual, dtype=float).ravel()
    p = np.asarray(predicted, dtype=float).ravel()
    if a.size == 0:
        raise DataError("cannot evaluate empty vectors")
    if a.size != p.size:
        raise DataError(f"length mismatch: actual {a.size} vs predicted {p.size}")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(p))):
        raise DataError("inputs must be finite")
    if criterion in (Criterion.MAPE, Criterion.SMAPE) and np.any(a == 0.0):
        raise DataError(f"{criterion.value} undefined for actual values equal to zero")

    err = a - p
    if criterion is Criterion.MSE:
        return float(np.mean(err**2))
    if criterion is Criterion.RMSE:
        return float(np.sqrt(np.mean(err**2)))
    if criterion is Criterion.MAE:
        return float(np.mean(np.abs(err)))
    if criterion is Criterion.MAPE:
        return float(np.mean(np.abs(err / a)))
    # SMAPE
    denom = (np.abs(a) + np.abs(p)) / 2.0
    return float(100.0 * np.mean(np.abs(err) / denom))
