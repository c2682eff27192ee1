import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_table
from voltforecast.dataset import REQUIRED_COLUMNS, load_csv, write_csv
from voltforecast.errors import ParameterError
from voltforecast.synthgen import (
    BatteryModelParams,
    TaperProfile,
    inject_missing,
    ocv_is_monotone,
    simulate_charge_cycles,
)

QUIET = BatteryModelParams(noise_std_V=0.0)


def test_default_ocv_monotone():
    assert ocv_is_monotone(BatteryModelParams())
    assert BatteryModelParams().ocv(0.0) == pytest.approx(3.0)
    assert BatteryModelParams().ocv(1.0) == pytest.approx(4.2)


def test_zero_current_gives_constant_ocv():
    t = simulate_charge_cycles(QUIET, 1, dt_s=10, current_profile=0.0, max_steps=25)
    v = t.column("voltage_V")
    assert len(v) == 25
    assert np.all(v == QUIET.ocv(0.05))
    assert t.metadata["truncated_cycles"] == [1]


def test_constant_current_voltage_strictly_increasing():
    p = BatteryModelParams(noise_std_V=0.0, r_aging_coeff=0.0, r_temp_coeff=0.0)
    t = simulate_charge_cycles(p, 1, dt_s=30, current_profile=1.5)
    v = t.column("voltage_V")
    soc = np.minimum(0.05 + 1.5 * 30 * np.arange(1, len(v) + 1) / 7200, 1.0)
    np.testing.assert_allclose(v, p.ocv(soc) + 1.5 * p.r0_ohm, rtol=0, atol=1e-12)
    assert np.all(np.diff(v) > 0)


def test_aging_delta_v():
    p = BatteryModelParams(noise_std_V=0.0, r_temp_coeff=0.0, r_aging_coeff=0.002)
    t = simulate_charge_cycles(p, 51, dt_s=30, current_profile=2.0)
    c = t.cycles
    v1 = t.column("voltage_V")[c == 1]
    v51 = t.column("voltage_V")[c == 51]
    np.testing.assert_allclose(v51 - v1, 2.0 * p.r0_ohm * 0.1, rtol=0, atol=1e-12)


def test_schema_and_ingestion(tmp_path):
    t = simulate_charge_cycles(BatteryModelParams(), 3)
    assert t.columns == REQUIRED_COLUMNS
    write_csv(t, tmp_path / "s.csv")
    back = load_csv(tmp_path / "s.csv")
    assert len(back) == len(t)
    assert (tmp_path / "s.csv").read_text().splitlines()[0] == ",".join(REQUIRED_COLUMNS)


def test_same_seed_bit_identical():
    a = simulate_charge_cycles(BatteryModelParams(seed=3), 2)
    b = simulate_charge_cycles(BatteryModelParams(seed=3), 2)
    c = simulate_charge_cycles(BatteryModelParams(seed=4), 2)
    assert a.values.tobytes() == b.values.tobytes()
    assert a.values.tobytes() != c.values.tobytes()


def test_cooling_zero_temperature_non_decreasing():
    p = BatteryModelParams(cooling_rate=0.0)
    t = simulate_charge_cycles(p, 2)
    for cyc in (1, 2):
        temp = t.column("temperature_C")[t.cycles == cyc]
        assert np.all(np.diff(temp) >= 0)


def test_bad_dt():
    with pytest.raises(ParameterError):
        simulate_charge_cycles(QUIET, 1, dt_s=0)


def test_taper_profile():
    prof = TaperProfile(2.0, 0.4, 0.8)
    assert prof(1, 0, 0.5) == 2.0
    assert prof(1, 0, 0.9) == pytest.approx(1.2)
    assert prof(1, 0, 1.0) == pytest.approx(0.4)


@settings(max_examples=25, deadline=None)
@given(st.floats(-3, 3), st.floats(1, 300), st.integers(1, 3))
def test_soc_stays_in_unit_interval(amps, dt, n):
    # SOC is implied by voltage when resistance is flat and noise off
    p = BatteryModelParams(noise_std_V=0.0, r_aging_coeff=0.0, r_temp_coeff=0.0)
    t = simulate_charge_cycles(p, n, dt_s=dt, current_profile=amps, max_steps=200)
    v = t.column("voltage_V") - amps * p.r0_ohm
    assert np.all(v >= p.ocv(0.0) - 1e-9) and np.all(v <= p.ocv(1.0) + 1e-9)


def test_inject_missing_counts():
    t = simulate_charge_cycles(QUIET, 1, current_profile=1.0, max_steps=34)
    t = t.take(np.arange(33))  # 33 rows x 3 eligible columns = 99 cells
    out = inject_missing(t, 0.1, seed=1)
    assert out.mask.sum() == 9
    key = [t.index("cycle_number"), t.index("time_s")]
    assert not out.mask[:, key].any()
    assert np.isnan(out.values[out.mask]).all()


def test_inject_missing_exact_ten_of_hundred():
    # 25 rows x 4 non-key columns = 100 eligible cells
    t = make_table([1] * 25, soc=np.linspace(0, 1, 25))
    out = inject_missing(t, 0.1, seed=5)
    assert out.mask.sum() == 10


def test_inject_missing_zero_and_determinism():
    t = simulate_charge_cycles(BatteryModelParams(), 1)
    assert inject_missing(t, 0.0) is t
    a = inject_missing(t, 0.2, seed=9)
    b = inject_missing(t, 0.2, seed=9)
    np.testing.assert_array_equal(a.mask, b.mask)
    with pytest.raises(ParameterError):
        inject_missing(t, 1.0)
