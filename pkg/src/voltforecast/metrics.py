"""MSE, RMSE, MAE and MAPE on paired actual/predicted vectors."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ShapeError, ZeroTargetError

ZERO_POLICIES = ("error", "skip_zero_targets")
DEFAULT_ZERO_POLICY = "skip_zero_targets"


@dataclass(frozen=True, eq=False)
class PredictionPair:
    actual: np.ndarray
    predicted: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.actual, dtype=np.float64).ravel()
        p = np.asarray(self.predicted, dtype=np.float64).ravel()
        if y.shape != p.shape:
            raise ShapeError(f"actual has {y.size} entries, predicted has {p.size}")
        if y.size == 0:
            raise ShapeError("prediction pair must have at least one entry")
        if not (np.isfinite(y).all() and np.isfinite(p).all()):
            raise ShapeError("prediction pair contains non-finite values")
        object.__setattr__(self, "actual", y)
        object.__setattr__(self, "predicted", p)

    def __len__(self):
        return self.actual.size


def _pair(actual, predicted=None) -> PredictionPair:
    if isinstance(actual, PredictionPair):
        return actual
    return PredictionPair(actual, predicted)


def mse(actual, predicted=None) -> float:
    p = _pair(actual, predicted)
    r = p.actual - p.predicted
    return float(np.mean(r * r))


def rmse(actual, predicted=None) -> float:
    return math.sqrt(mse(actual, predicted))


def rmse_from_mse(value: float) -> float:
    return math.sqrt(value)


def mae(actual, predicted=None) -> float:
    p = _pair(actual, predicted)
    return float(np.mean(np.abs(p.actual - p.predicted)))


def mape_with_count(actual, predicted=None, zero_policy: str = DEFAULT_ZERO_POLICY) -> tuple[Optional[float], int]:
    """MAPE in percent plus the number of zero-target terms skipped."""
    if zero_policy not in ZERO_POLICIES:
        raise ValueError(f"zero_policy must be one of {ZERO_POLICIES}, got {zero_policy!r}")
    p = _pair(actual, predicted)
    zero = p.actual == 0
    if zero.any() and zero_policy == "error":
        idx = int(np.flatnonzero(zero)[0])
        raise ZeroTargetError(f"actual value at index {idx} is zero; MAPE undefined", index=idx)
    keep = ~zero
    if not keep.any():
        return None, int(zero.sum())
    y, yhat = p.actual[keep], p.predicted[keep]
    return float(100.0 * np.mean(np.abs(y - yhat) / np.abs(y))), int(zero.sum())


def mape(actual, predicted=None, zero_policy: str = DEFAULT_ZERO_POLICY) -> Optional[float]:
    return mape_with_count(actual, predicted, zero_policy)[0]


@dataclass(frozen=True)
class MetricsBundle:
    mse: float
    rmse: float
    mae: float
    mape: Optional[float]
    skipped_zero_targets: int = 0

    def as_row(self) -> tuple:
        return (self.mse, self.rmse, self.mae, self.mape)

    def dominated_by(self, other: "MetricsBundle") -> bool:
        """True when ``other`` is no worse on every metric."""
        pairs = [(self.mse, other.mse), (self.rmse, other.rmse), (self.mae, other.mae)]
        if self.mape is not None and other.mape is not None:
            pairs.append((self.mape, other.mape))
        return all(b <= a for a, b in pairs)


def bundle(actual, predicted=None, zero_policy: str = DEFAULT_ZERO_POLICY) -> MetricsBundle:
    p = _pair(actual, predicted)
    m = mse(p)
    pct, skipped = mape_with_count(p, zero_policy=zero_policy)
    return MetricsBundle(mse=m, rmse=math.sqrt(m), mae=mae(p), mape=pct, skipped_zero_targets=skipped)


def check_bundle(b: MetricsBundle, rel_tol: float = 1e-12) -> list[str]:
    """Invariant violations of a (computed or transcribed) bundle, if any."""
    problems = []
    if min(b.mse, b.rmse, b.mae) < 0 or (b.mape is not None and b.mape < 0):
        problems.append("negative metric")
    if not math.isclose(b.rmse * b.rmse, b.mse, rel_tol=rel_tol, abs_tol=1e-300):
        problems.append(f"rmse^2={b.rmse * b.rmse!r} != mse={b.mse!r}")
    if b.mae > b.rmse * (1 + rel_tol):
        problems.append(f"mae={b.mae!r} exceeds rmse={b.rmse!r}")
    return problems
