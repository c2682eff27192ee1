"""Battery telemetry ingestion, cleaning, standardization and windowing.

A :class:`RawTable` is a column-major float matrix plus a boolean mask of
originally-absent cells. Rows are kept sorted by ``(cycle_number, time_s)``.
Every operation here returns a new object; inputs are never mutated.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Mapping, Sequence

import numpy as np

from .errors import (
    CsvParseError,
    DegenerateSplitError,
    EmptyInputError,
    EmptySeriesError,
    OverAggressiveThresholdError,
    ParameterError,
    SchemaError,
    UnimputableColumnError,
    UnknownFeatureError,
    ZeroVarianceError,
)

CYCLE = "cycle_number"
TIME = "time_s"
VOLTAGE = "voltage_V"
CURRENT = "current_A"
TEMPERATURE = "temperature_C"

REQUIRED_COLUMNS = (CYCLE, TIME, VOLTAGE, CURRENT, TEMPERATURE)
KEY_COLUMNS = (CYCLE, TIME)
TARGET = VOLTAGE

DEFAULT_WINDOW = 16
DEFAULT_HORIZON = 1
DEFAULT_OUTLIER_Z = 4.0


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class CycleRecord:
    cycle_number: int
    time_s: float
    voltage_V: float
    current_A: float
    temperature_C: float
    extras: Mapping[str, float] = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class RawTable:
    """Ordered telemetry rows.

    ``values`` is ``(n_rows, n_columns)`` float64; ``mask[i, j]`` is True when
    the cell was absent in the source. Masked cells hold NaN until imputed.
    """

    columns: tuple[str, ...]
    values: np.ndarray
    mask: np.ndarray
    metadata: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        mask = np.asarray(self.mask, dtype=bool)
        if values.ndim != 2 or values.shape[1] != len(self.columns):
            raise SchemaError(
                f"values shape {values.shape} does not match {len(self.columns)} columns"
            )
        if mask.shape != values.shape:
            raise SchemaError(f"mask shape {mask.shape} != values shape {values.shape}")
        for name in REQUIRED_COLUMNS:
            if name not in self.columns:
                raise SchemaError(f"missing required column {name!r}", column=name)
        object.__setattr__(self, "columns", tuple(self.columns))
        object.__setattr__(self, "values", _frozen(values))
        object.__setattr__(self, "mask", _frozen(mask))
        object.__setattr__(self, "metadata", dict(self.metadata))

    @classmethod
    def from_columns(cls, data: Mapping[str, Sequence[float]], mask=None, metadata=None, sort=True):
        columns = list(data)
        for name in REQUIRED_COLUMNS:
            if name not in columns:
                raise SchemaError(f"missing required column {name!r}", column=name)
        # required columns first, extras after in their given order
        ordered = list(REQUIRED_COLUMNS) + [c for c in columns if c not in REQUIRED_COLUMNS]
        values = np.column_stack([np.asarray(data[c], dtype=np.float64) for c in ordered])
        if mask is None:
            m = np.isnan(values)
        else:
            m = np.column_stack([np.asarray(mask[c], dtype=bool) for c in ordered])
        table = cls(tuple(ordered), values, m, metadata or {})
        return table.sorted() if sort else table

    def __len__(self) -> int:
        return self.values.shape[0]

    @property
    def feature_columns(self) -> tuple[str, ...]:
        return tuple(c for c in self.columns if c not in KEY_COLUMNS)

    def index(self, name: str) -> int:
        try:
            return self.columns.index(name)
        except ValueError:
            raise UnknownFeatureError(f"unknown column {name!r}") from None

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.index(name)]

    @property
    def cycles(self) -> np.ndarray:
        return self.column(CYCLE)

    def take(self, rows) -> "RawTable":
        rows = np.asarray(rows)
        return RawTable(self.columns, self.values[rows], self.mask[rows], self.metadata)

    def replace(self, values=None, mask=None, metadata=None) -> "RawTable":
        return RawTable(
            self.columns,
            self.values if values is None else values,
            self.mask if mask is None else mask,
            self.metadata if metadata is None else metadata,
        )

    def sorted(self) -> "RawTable":
        order = np.lexsort((self.column(TIME), self.column(CYCLE)))
        if np.array_equal(order, np.arange(len(self))):
            return self
        return self.take(order)

    def records(self) -> Iterator[CycleRecord]:
        extra_names = [c for c in self.columns if c not in REQUIRED_COLUMNS]
        for row in self.values:
            d = dict(zip(self.columns, row.tolist()))
            yield CycleRecord(
                cycle_number=int(d[CYCLE]) if math.isfinite(d[CYCLE]) else d[CYCLE],
                time_s=d[TIME],
                voltage_V=d[VOLTAGE],
                current_A=d[CURRENT],
                temperature_C=d[TEMPERATURE],
                extras={k: d[k] for k in extra_names},
            )

    def cycle_bounds(self) -> list[tuple[int, int]]:
        """Half-open ``(start, stop)`` row ranges of each cycle, in order."""
        c = self.cycles
        if len(c) == 0:
            return []
        breaks = np.flatnonzero(c[1:] != c[:-1]) + 1
        starts = np.concatenate([[0], breaks])
        stops = np.concatenate([breaks, [len(c)]])
        return list(zip(starts.tolist(), stops.tolist()))


# --------------------------------------------------------------------- I/O


def load_csv(path) -> RawTable:
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyInputError(f"{path}: file is empty") from None
        header = [h.strip() for h in header]
        for name in REQUIRED_COLUMNS:
            if name not in header:
                raise SchemaError(f"{path}: missing required column {name!r}", column=name)
        if len(set(header)) != len(header):
            raise SchemaError(f"{path}: duplicate column names in header")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise CsvParseError(
                    f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}", row=lineno
                )
            parsed = []
            for col, cell in zip(header, row):
                cell = cell.strip()
                if cell == "":
                    parsed.append(math.nan)
                    continue
                try:
                    parsed.append(float(cell))
                except ValueError:
                    raise CsvParseError(
                        f"{path}:{lineno}: column {col!r}: cannot parse {cell!r} as a number",
                        row=lineno,
                        column=col,
                    ) from None
            rows.append(parsed)
    if not rows:
        raise EmptyInputError(f"{path}: no data rows")
    values = np.array(rows, dtype=np.float64)
    mask = np.isnan(values)
    for key in KEY_COLUMNS:
        j = header.index(key)
        if mask[:, j].any():
            bad = int(np.flatnonzero(mask[:, j])[0]) + 2
            raise CsvParseError(f"{path}:{bad}: key column {key!r} may not be empty", row=bad, column=key)
    if np.isinf(values).any():
        i, j = map(int, np.argwhere(np.isinf(values))[0])
        raise CsvParseError(f"{path}:{i + 2}: column {header[j]!r} is not finite", row=i + 2, column=header[j])
    data = {name: values[:, j] for j, name in enumerate(header)}
    mdata = {name: mask[:, j] for j, name in enumerate(header)}
    table = RawTable.from_columns(data, mask=mdata)
    _check_keys(table)
    return table


def _check_keys(table: RawTable) -> None:
    c = table.cycles
    if (c < 1).any() or (c != np.floor(c)).any():
        raise SchemaError("cycle_number must be a positive integer", column=CYCLE)
    t = table.column(TIME)
    if (t < 0).any():
        raise SchemaError("time_s must be non-negative", column=TIME)
    same = c[1:] == c[:-1]
    if (np.diff(t)[same] <= 0).any():
        raise SchemaError("time_s must be strictly increasing within a cycle", column=TIME)


def format_float(x: float) -> str:
    """Shortest repr that round-trips exactly."""
    return repr(float(x))


def write_csv(table: RawTable, path) -> None:
    path = Path(path)
    cyc = table.index(CYCLE)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(table.columns)
        for row, mrow in zip(table.values, table.mask):
            out = []
            for j, (v, m) in enumerate(zip(row.tolist(), mrow.tolist())):
                if m:
                    out.append("")
                elif j == cyc:
                    out.append(str(int(v)))
                else:
                    out.append(format_float(v))
            writer.writerow(out)


# ------------------------------------------------------------- cleaning


IMPUTE_STRATEGIES = ("forward_fill_then_mean", "drop_row")


def impute_missing(table: RawTable, strategy: str = "forward_fill_then_mean") -> RawTable:
    """Fill or drop masked cells; the returned mask is all-false.

    ``forward_fill_then_mean`` carries the previous value within the same
    cycle; gaps at the start of a cycle take the column mean of unmasked cells.
    """
    if len(table) == 0:
        raise EmptyInputError("cannot impute an empty table")
    if strategy not in IMPUTE_STRATEGIES:
        raise ParameterError(f"unknown impute strategy {strategy!r}; expected one of {IMPUTE_STRATEGIES}")
    mask = table.mask
    for j, name in enumerate(table.columns):
        if mask[:, j].all():
            raise UnimputableColumnError(f"column {name!r} has no observed values")
    if strategy == "drop_row":
        keep = ~mask.any(axis=1)
        if not keep.any():
            raise EmptyInputError("drop_row removed every row")
        out = table.take(np.flatnonzero(keep))
        return out.replace(mask=np.zeros_like(out.mask))

    values = np.array(table.values, copy=True)
    cycles = table.cycles
    for j in np.flatnonzero(mask.any(axis=0)):
        col = values[:, j]
        m = mask[:, j]
        mean = float(np.mean(col[~m]))
        for i in np.flatnonzero(m):
            if i > 0 and cycles[i - 1] == cycles[i]:
                col[i] = col[i - 1]  # already filled if it was masked too
            else:
                col[i] = mean
    return table.replace(values=values, mask=np.zeros_like(mask))


def _zscores(table: RawTable, features: Sequence[str]) -> np.ndarray:
    cols = np.column_stack([table.column(f) for f in features])
    mu = cols.mean(axis=0)
    sd = cols.std(axis=0, ddof=1) if len(table) > 1 else np.zeros(len(features))
    z = np.zeros_like(cols)
    ok = sd > 0
    z[:, ok] = (cols[:, ok] - mu[ok]) / sd[ok]
    return z


def outlier_rows(table: RawTable, z_threshold: float, features: Sequence[str] | None = None) -> np.ndarray:
    """Boolean mask of rows with any ``|z| > z_threshold``.

    Z-scores use the sample mean and standard deviation of the given table;
    constant columns never flag a row.
    """
    if not z_threshold > 0:
        raise ParameterError(f"z_threshold must be > 0, got {z_threshold}")
    if np.isnan(table.values).any():
        raise ParameterError("remove_outliers requires an imputed table")
    features = list(features) if features is not None else list(table.feature_columns)
    return (np.abs(_zscores(table, features)) > z_threshold).any(axis=1)


def remove_outliers(
    table: RawTable, z_threshold: float = DEFAULT_OUTLIER_Z, features: Sequence[str] | None = None
) -> tuple[RawTable, int]:
    flagged = outlier_rows(table, z_threshold, features)
    removed = int(flagged.sum())
    if len(table) - removed < 2:
        raise OverAggressiveThresholdError(
            f"z_threshold={z_threshold} would leave {len(table) - removed} rows (need at least 2)"
        )
    if removed == 0:
        return table, 0
    return table.take(np.flatnonzero(~flagged)), removed


# -------------------------------------------------------- standardization


@dataclass(frozen=True)
class StandardizationParams:
    feature_names: tuple[str, ...]
    mean: tuple[float, ...]
    std: tuple[float, ...]

    def __post_init__(self):
        if not (len(self.feature_names) == len(self.mean) == len(self.std)):
            raise ParameterError("standardization parameter count mismatch")
        if any(not s > 0 for s in self.std):
            raise ParameterError("standard deviations must be positive")

    def lookup(self, feature: str) -> tuple[float, float]:
        try:
            j = self.feature_names.index(feature)
        except ValueError:
            raise UnknownFeatureError(f"feature {feature!r} not in standardization params") from None
        return self.mean[j], self.std[j]

    def to_dict(self) -> dict:
        return {"feature_names": list(self.feature_names), "mean": list(self.mean), "std": list(self.std)}

    @classmethod
    def from_dict(cls, d) -> "StandardizationParams":
        return cls(tuple(d["feature_names"]), tuple(map(float, d["mean"])), tuple(map(float, d["std"])))


def fit_standardizer(table: RawTable, features: Sequence[str]) -> StandardizationParams:
    """Column mean and sample (n-1) standard deviation per feature."""
    if len(table) < 2:
        raise ParameterError("need at least 2 rows to fit a standardizer")
    means, stds = [], []
    for f in features:
        col = table.column(f)
        if np.isnan(col).any():
            raise ParameterError(f"feature {f!r} has missing values; impute first")
        sd = float(np.std(col, ddof=1))
        if not sd > 0:
            raise ZeroVarianceError(f"feature {f!r} is constant; cannot standardize", feature=f)
        means.append(float(np.mean(col)))
        stds.append(sd)
    return StandardizationParams(tuple(features), tuple(means), tuple(stds))


def apply_standardizer(table: RawTable, params: StandardizationParams) -> RawTable:
    values = np.array(table.values, copy=True)
    for f, mu, sd in zip(params.feature_names, params.mean, params.std):
        j = table.index(f) if f in table.columns else None
        if j is None:
            raise UnknownFeatureError(f"feature {f!r} absent from table")
        values[:, j] = (values[:, j] - mu) / sd
    return table.replace(values=values)


def invert_standardizer(value, feature: str, params: StandardizationParams):
    mu, sd = params.lookup(feature)
    return np.asarray(value) * sd + mu if np.ndim(value) else float(value) * sd + mu


# ------------------------------------------------------------- windowing


@dataclass(frozen=True, eq=False)
class WindowedSeries:
    """Sliding windows over a source table.

    Window ``k`` covers rows ``starts[k] .. starts[k] + L - 1``; its target is
    the voltage at row ``starts[k] + L - 1 + H``. Keeping row indices rather
    than copies lets preprocessing be refitted on exactly the rows a subset of
    windows touches.
    """

    source: RawTable
    starts: np.ndarray
    window_length: int
    horizon: int
    feature_names: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "starts", _frozen(np.asarray(self.starts, dtype=np.int64)))
        object.__setattr__(self, "feature_names", tuple(self.feature_names))

    def __len__(self) -> int:
        return len(self.starts)

    @property
    def target_rows(self) -> np.ndarray:
        return self.starts + self.window_length - 1 + self.horizon

    @property
    def X(self) -> np.ndarray:
        """``(n, L, d)`` input sequences."""
        cols = [self.source.index(f) for f in self.feature_names]
        feats = self.source.values[:, cols]
        idx = self.starts[:, None] + np.arange(self.window_length)[None, :]
        return feats[idx]

    @property
    def y(self) -> np.ndarray:
        return self.source.column(TARGET)[self.target_rows]

    def flat(self) -> np.ndarray:
        """Timestep-major flattening to ``(n, L*d)``."""
        X = self.X
        return X.reshape(len(X), -1)

    def rows_touched(self) -> np.ndarray:
        """Sorted unique source rows used as inputs or targets."""
        if len(self) == 0:
            return np.zeros(0, dtype=np.int64)
        idx = self.starts[:, None] + np.arange(self.window_length)[None, :]
        # rows between the window end and the target are unused when H > 1
        used = np.concatenate([idx.ravel(), self.target_rows])
        return np.unique(used)

    def subset(self, index) -> "WindowedSeries":
        return WindowedSeries(self.source, self.starts[np.asarray(index, dtype=np.int64)],
                              self.window_length, self.horizon, self.feature_names)

    def with_source(self, source: RawTable, feature_names: Sequence[str] | None = None) -> "WindowedSeries":
        return WindowedSeries(source, self.starts, self.window_length, self.horizon,
                              self.feature_names if feature_names is None else feature_names)


def make_windows(
    table: RawTable,
    L: int = DEFAULT_WINDOW,
    H: int = DEFAULT_HORIZON,
    features: Sequence[str] | None = None,
) -> WindowedSeries:
    if L < 1 or H < 1:
        raise ParameterError(f"window length and horizon must be >= 1 (got L={L}, H={H})")
    features = tuple(features) if features is not None else table.feature_columns
    for f in features:
        table.index(f)
    starts = []
    for lo, hi in table.cycle_bounds():
        count = hi - lo - L - H + 1
        if count > 0:
            starts.extend(range(lo, lo + count))
    if not starts:
        raise EmptySeriesError(f"no cycle has at least L+H={L + H} records")
    return WindowedSeries(table, np.array(starts), L, H, features)


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.8
    mode: str = "chronological"
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.train_fraction < 1:
            raise ParameterError(f"train_fraction must be in (0, 1), got {self.train_fraction}")
        if self.mode not in ("chronological", "shuffled"):
            raise ParameterError(f"split mode must be 'chronological' or 'shuffled', got {self.mode!r}")
        if not 0 <= int(self.seed) < 2**64:
            raise ParameterError("seed must be a 64-bit unsigned integer")


def split(series: WindowedSeries, spec: SplitSpec) -> tuple[WindowedSeries, WindowedSeries]:
    n = len(series)
    n_train = math.floor(n * spec.train_fraction)
    if n_train < 1 or n_train >= n:
        raise DegenerateSplitError(
            f"train_fraction={spec.train_fraction} on {n} windows gives {n_train}/{n - n_train}"
        )
    order = np.arange(n)
    if spec.mode == "shuffled":
        order = np.random.default_rng(spec.seed).permutation(n)
    return series.subset(order[:n_train]), series.subset(order[n_train:])
