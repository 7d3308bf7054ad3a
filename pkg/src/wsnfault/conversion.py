"""Raw ADC counts to engineering units.

Formulas are the conventional ones for a MICAz-class sensor board: light as
a fraction of full scale, a 10 kOhm thermistor through Steinhart-Hart, supply
voltage from the 1.223 V band-gap reference, and a linear two-point
accelerometer calibration. Singular endpoints are rejected, never clamped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .codec import ADC_MAX, RawFrame

SENSORS = ("light", "temperature", "accel_x", "accel_y", "voltage")

THERMISTOR_R0 = 10_000.0
SH_A = 0.001010024
SH_B = 0.000242127
SH_C = 0.000000146
BANDGAP_V = 1.223


class Unconvertible(ValueError):
    pass


@dataclass(frozen=True)
class AccelCalibration:
    zero_offset: float = 512.0
    counts_per_g: float = 205.0

    def __post_init__(self):
        if self.counts_per_g == 0:
            raise ValueError("counts_per_g must be non-zero")


@dataclass(frozen=True)
class EngineeringInstance:
    node_id: int
    timestamp_ms: int
    light: float
    temperature: float
    accel_x: float
    accel_y: float
    voltage: float

    def value(self, sensor: str) -> float:
        return getattr(self, sensor)

    def values(self) -> tuple[float, ...]:
        return tuple(getattr(self, s) for s in SENSORS)


def _check_range(adc: int, lo: int, hi: int, what: str) -> None:
    if not lo <= adc <= hi:
        raise Unconvertible(f"{what} ADC {adc} outside [{lo}, {hi}]")


def convert_light(adc: int) -> float:
    _check_range(adc, 0, ADC_MAX, "light")
    return adc / ADC_MAX * 100.0


def convert_temperature(adc: int) -> float:
    _check_range(adc, 1, ADC_MAX - 1, "temperature")
    r = THERMISTOR_R0 * (ADC_MAX - adc) / adc
    ln_r = math.log(r)
    inv_t = SH_A + SH_B * ln_r + SH_C * ln_r**3
    return 1.0 / inv_t - 273.15


def convert_voltage(adc: int) -> float:
    _check_range(adc, 1, ADC_MAX, "voltage")
    return BANDGAP_V * ADC_MAX / adc


def convert_accel(adc: int, cal: AccelCalibration = AccelCalibration()) -> float:
    _check_range(adc, 0, ADC_MAX, "accel")
    return (adc - cal.zero_offset) / cal.counts_per_g


def to_instance(frame: RawFrame, cal: AccelCalibration = AccelCalibration()) -> EngineeringInstance:
    light, temp, ax, ay, volt = frame.adc
    return EngineeringInstance(
        node_id=frame.node_id,
        timestamp_ms=frame.timestamp_ms,
        light=convert_light(light),
        temperature=convert_temperature(temp),
        accel_x=convert_accel(ax, cal),
        accel_y=convert_accel(ay, cal),
        voltage=convert_voltage(volt),
    )
