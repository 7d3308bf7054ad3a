import math

import pytest
from hypothesis import given, strategies as st

from wsnfault.codec import RawFrame
from wsnfault.conversion import (
    AccelCalibration,
    Unconvertible,
    convert_accel,
    convert_light,
    convert_temperature,
    convert_voltage,
    to_instance,
)

mpmath = pytest.importorskip("mpmath")


def _temp_oracle(adc):
    mpmath.mp.dps = 40
    r = mpmath.mpf(10000) * (1023 - adc) / adc
    ln = mpmath.log(r)
    a, b, c = mpmath.mpf("0.001010024"), mpmath.mpf("0.000242127"), mpmath.mpf("0.000000146")
    return float(1 / (a + b * ln + c * ln**3) - mpmath.mpf("273.15"))


def test_temperature_midscale():
    assert convert_temperature(512) == pytest.approx(25.035, abs=5e-3)
    assert convert_temperature(512) == pytest.approx(_temp_oracle(512), abs=1e-9)


@given(st.integers(1, 1022))
def test_temperature_matches_high_precision(adc):
    assert convert_temperature(adc) == pytest.approx(_temp_oracle(adc), abs=1e-9)


def test_temperature_monotone_increasing():
    vals = [convert_temperature(a) for a in range(1, 1023)]
    assert all(b > a for a, b in zip(vals, vals[1:]))
    assert convert_temperature(200) == pytest.approx(-7.03, abs=0.01)


@pytest.mark.parametrize("adc", [0, 1023])
def test_temperature_rails_unconvertible(adc):
    with pytest.raises(Unconvertible):
        convert_temperature(adc)


def test_light():
    assert convert_light(0) == 0.0
    assert convert_light(1023) == 100.0
    vals = [convert_light(a) for a in range(1024)]
    assert all(b > a for a, b in zip(vals, vals[1:]))


def test_voltage():
    assert convert_voltage(1023) == pytest.approx(1.223)
    assert convert_voltage(420) == pytest.approx(1.223 * 1023 / 420)
    with pytest.raises(Unconvertible):
        convert_voltage(0)
    vals = [convert_voltage(a) for a in range(1, 1024)]
    assert all(b < a for a, b in zip(vals, vals[1:]))


def test_accel():
    assert convert_accel(512) == 0.0
    assert convert_accel(717) == pytest.approx(1.0)
    assert convert_accel(102) == pytest.approx(-2.0)
    assert convert_accel(600, AccelCalibration(500, 100)) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        AccelCalibration(512, 0)


def test_to_instance():
    inst = to_instance(RawFrame(4, 9, 123, (1023, 512, 717, 512, 1023)))
    assert inst.node_id == 4 and inst.timestamp_ms == 123
    assert inst.light == 100.0
    assert math.isclose(inst.temperature, convert_temperature(512))
    assert inst.accel_x == pytest.approx(1.0) and inst.accel_y == 0.0
    assert inst.voltage == pytest.approx(1.223)
    assert inst.values() == (inst.light, inst.temperature, inst.accel_x, inst.accel_y, inst.voltage)
