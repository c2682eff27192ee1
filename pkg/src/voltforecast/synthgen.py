"""Equivalent-circuit charge-cycle simulator.

Terminal voltage is ``OCV(SOC) + I*R`` with a resistance that grows with
cycle count and shifts with temperature; temperature follows a lumped
Joule-heating / Newton-cooling balance. Output is a :class:`RawTable` in the
standard five-column schema.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Callable, Union

import numpy as np

from .dataset import CURRENT, CYCLE, KEY_COLUMNS, TEMPERATURE, TIME, VOLTAGE, RawTable
from .errors import EmptyInputError, ParameterError

SOC_START = 0.05
DEFAULT_OCV = (3.0, 1.2, -0.8, 0.8)

# (cycle, step, soc) -> amperes
CurrentFn = Callable[[int, int, float], float]


@dataclass(frozen=True)
class BatteryModelParams:
    capacity_Ah: float = 2.0
    r0_ohm: float = 0.05
    r_temp_coeff: float = -0.004
    r_aging_coeff: float = 0.002
    ocv_coeffs: tuple[float, ...] = DEFAULT_OCV
    ambient_C: float = 25.0
    thermal_mass: float = 0.05
    cooling_rate: float = 0.002
    noise_std_V: float = 0.002
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "ocv_coeffs", tuple(float(c) for c in self.ocv_coeffs))
        for name in ("capacity_Ah", "r0_ohm", "thermal_mass"):
            if not getattr(self, name) > 0:
                raise ParameterError(f"{name} must be positive")
        for name in ("r_aging_coeff", "cooling_rate", "noise_std_V"):
            if not getattr(self, name) >= 0:
                raise ParameterError(f"{name} must be non-negative")
        if not self.ocv_coeffs:
            raise ParameterError("ocv_coeffs must be non-empty")
        if not 0 <= int(self.seed) < 2**64:
            raise ParameterError("seed must be a 64-bit unsigned integer")

    def ocv(self, soc):
        """Open-circuit voltage; coefficients in increasing power order."""
        return np.polynomial.polynomial.polyval(soc, self.ocv_coeffs)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["ocv_coeffs"] = list(self.ocv_coeffs)
        return d


def ocv_is_monotone(params: BatteryModelParams, points: int = 1001) -> bool:
    v = params.ocv(np.linspace(0.0, 1.0, points))
    return bool(np.all(np.diff(v) >= 0))


@dataclass(frozen=True)
class TaperProfile:
    """Constant current that ramps down linearly above ``taper_soc``.

    A crude stand-in for the constant-voltage phase of CC-CV charging; it
    keeps the current column non-constant so every feature can be standardized.
    """

    i_max: float = 2.0
    i_min: float = 0.4
    taper_soc: float = 0.8

    def __call__(self, cycle: int, step: int, soc: float) -> float:
        if soc <= self.taper_soc:
            return self.i_max
        frac = (soc - self.taper_soc) / (1.0 - self.taper_soc)
        return self.i_max + (self.i_min - self.i_max) * min(frac, 1.0)


def _as_current_fn(profile: Union[float, CurrentFn]) -> CurrentFn:
    if callable(profile):
        return profile
    amps = float(profile)
    return lambda cycle, step, soc: amps


def simulate_charge_cycles(
    params: BatteryModelParams,
    n_cycles: int,
    dt_s: float = 30.0,
    current_profile: Union[float, CurrentFn] = TaperProfile(),
    max_steps: int = 2000,
) -> RawTable:
    """Simulate ``n_cycles`` charges from SOC 0.05 until SOC reaches 1.

    A cycle that hits ``max_steps`` first is kept and listed under
    ``metadata["truncated_cycles"]``. Noise for cycle ``c`` comes from a
    generator seeded with ``seed ^ c`` so cycles are independent streams.
    """
    if int(n_cycles) < 1:
        raise ParameterError("n_cycles must be >= 1")
    if not dt_s > 0:
        raise ParameterError(f"dt_s must be positive, got {dt_s}")
    if int(max_steps) < 1:
        raise ParameterError("max_steps must be >= 1")
    current = _as_current_fn(current_profile)
    cols = {k: [] for k in (CYCLE, TIME, VOLTAGE, CURRENT, TEMPERATURE)}
    truncated = []
    for cycle in range(1, int(n_cycles) + 1):
        rng = np.random.default_rng(int(params.seed) ^ cycle)
        soc, temp = SOC_START, params.ambient_C
        aging = 1.0 + params.r_aging_coeff * (cycle - 1)
        step = 0
        while True:
            amps = float(current(cycle, step, soc))
            soc = min(max(soc + amps * dt_s / (3600.0 * params.capacity_Ah), 0.0), 1.0)
            r = params.r0_ohm * aging * (1.0 + params.r_temp_coeff * (temp - params.ambient_C))
            v = float(params.ocv(soc)) + amps * r
            if params.noise_std_V > 0:
                v += rng.normal(0.0, params.noise_std_V)
            cols[CYCLE].append(cycle)
            cols[TIME].append(step * dt_s)
            cols[VOLTAGE].append(v)
            cols[CURRENT].append(amps)
            cols[TEMPERATURE].append(temp)
            temp = (
                temp
                + params.thermal_mass * amps * amps * r * dt_s
                - params.cooling_rate * (temp - params.ambient_C) * dt_s
            )
            step += 1
            if soc >= 1.0:
                break
            if step >= max_steps:
                truncated.append(cycle)
                break
    return RawTable.from_columns(cols, metadata={"truncated_cycles": truncated}, sort=False)


def inject_missing(table: RawTable, fraction: float, seed: int = 0) -> RawTable:
    """Mask ``floor(fraction * eligible)`` uniformly chosen non-key cells.

    Masked cells are set to NaN; previously masked cells stay masked.
    """
    if len(table) == 0:
        raise EmptyInputError("cannot inject missing values into an empty table")
    if not 0 <= fraction < 1:
        raise ParameterError(f"fraction must be in [0, 1), got {fraction}")
    eligible_cols = [j for j, c in enumerate(table.columns) if c not in KEY_COLUMNS]
    n_eligible = len(table) * len(eligible_cols)
    k = int(np.floor(fraction * n_eligible))
    if k == 0:
        return table
    picks = np.random.default_rng(seed).choice(n_eligible, size=k, replace=False)
    rows, cj = np.divmod(picks, len(eligible_cols))
    cols = np.asarray(eligible_cols)[cj]
    values = np.array(table.values, copy=True)
    mask = np.array(table.mask, copy=True)
    values[rows, cols] = np.nan
    mask[rows, cols] = True
    return table.replace(values=values, mask=mask)
