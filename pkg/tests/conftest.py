import numpy as np
import pytest

from voltforecast.dataset import RawTable


def make_table(cycles, times=None, voltage=None, current=None, temperature=None, mask=None, **extra):
    """Small RawTable from plain lists; NaN cells count as missing."""
    n = len(cycles)
    data = {
        "cycle_number": cycles,
        "time_s": times if times is not None else list(range(n)),
        "voltage_V": voltage if voltage is not None else np.linspace(3.0, 4.0, n),
        "current_A": current if current is not None else np.linspace(2.0, 1.0, n),
        "temperature_C": temperature if temperature is not None else np.linspace(25.0, 26.0, n),
        **extra,
    }
    return RawTable.from_columns(data, mask=mask)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def synth_series(n_cycles=3, L=4, H=1, seed=0, dt_s=60.0, features=None):
    """Windowed synthetic charge data, small enough for unit tests."""
    from voltforecast.dataset import make_windows
    from voltforecast.synthgen import BatteryModelParams, simulate_charge_cycles

    table = simulate_charge_cycles(BatteryModelParams(seed=seed), n_cycles, dt_s=dt_s)
    return make_windows(table, L, H, features)


def rows_only_in(series, inside, outside):
    """Source rows touched by windows in ``inside`` and by none in ``outside``."""
    a = set(series.subset(inside).rows_touched().tolist())
    b = set(series.subset(outside).rows_touched().tolist())
    return sorted(a - b)


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: dict = {}


def record_criterion(number: int, ok: bool, detail: str) -> None:
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
