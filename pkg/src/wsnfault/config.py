"""Run configuration: flat ``key = value`` files overridden by command-line flags."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

from .bench import EnergyModel
from .conversion import SENSORS
from .detector import DEFAULT_ALGORITHM, DEFAULT_COOLDOWN, ThresholdConfig
from .regressors import resolve_algorithm
from .windows import WindowConfig


class ConfigError(ValueError):
    pass


def parse_endpoint(text: str) -> tuple[str, int]:
    host, sep, port = str(text).rpartition(":")
    if not sep or not host:
        raise ConfigError(f"endpoint must be host:port, got {text!r}")
    try:
        p = int(port)
    except ValueError:
        raise ConfigError(f"invalid port in {text!r}") from None
    if not 0 <= p <= 65535:
        raise ConfigError(f"port {p} out of range")
    return host, p


@dataclass
class RunConfig:
    endpoint: str = "127.0.0.1:9001"
    tick_ms: int = 1000
    short_len: int = 3600
    avg_group: int = 60
    long_len: int = 1440
    threshold_light: float = 10.0
    threshold_temperature: float = 5.0
    threshold_accel_x: float = 10.0
    threshold_accel_y: float = 10.0
    threshold_voltage: float = 5.0
    epsilon: float = 1e-6
    cooldown: int = DEFAULT_COOLDOWN
    algorithm: str = DEFAULT_ALGORITHM
    data_dir: str = "wsn-data"
    cpu_power_watts: float = 0.5
    radio_power_watts: float = 0.330 * 3.7
    radio_rate_bps: float = 1_000_000.0
    message_bits: int = 224
    nodes: int = 5
    seed: int = 0
    seconds_per_day: float = 86400.0
    diurnal: bool = False
    fault_script: str = ""

    def validate(self) -> "RunConfig":
        try:
            parse_endpoint(self.endpoint)
            self.window_config()
            self.thresholds()
            self.energy_model()
            self.algorithm = resolve_algorithm(self.algorithm)
        except ValueError as err:
            raise ConfigError(str(err)) from None
        if self.nodes < 1 or self.nodes > 255:
            raise ConfigError("nodes must be in 1..255")
        if self.seconds_per_day <= 0:
            raise ConfigError("seconds_per_day must be positive")
        if self.cooldown < 0:
            raise ConfigError("cooldown must be >= 0")
        if self.fault_script and not Path(self.fault_script).is_file():
            raise ConfigError(f"fault script {self.fault_script} not found")
        return self

    def window_config(self) -> WindowConfig:
        return WindowConfig(self.tick_ms, self.short_len, self.avg_group, self.long_len)

    def thresholds(self) -> ThresholdConfig:
        return ThresholdConfig(**{s: getattr(self, f"threshold_{s}") for s in SENSORS}, epsilon=self.epsilon)

    def energy_model(self) -> EnergyModel:
        return EnergyModel(self.cpu_power_watts, self.radio_power_watts, self.radio_rate_bps, self.message_bits)

    def update(self, values: dict, source: str = "override") -> "RunConfig":
        types = {f.name: f.type for f in dataclasses.fields(self)}
        for key, raw in values.items():
            if raw is None:
                continue
            key = key.replace("-", "_")
            if key not in types:
                raise ConfigError(f"{source}: unknown key {key!r}")
            setattr(self, key, _coerce(getattr(self, key), raw, key, source))
        return self


def _coerce(current, raw, key, source):
    if isinstance(current, bool):
        if isinstance(raw, bool):
            return raw
        text = str(raw).strip().lower()
        if text in ("1", "true", "yes", "on"):
            return True
        if text in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{source}: {key} expects a boolean, got {raw!r}")
    try:
        return type(current)(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"{source}: {key} expects {type(current).__name__}, got {raw!r}") from None


def read_config_file(path) -> dict:
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        values[key.strip()] = value.strip()
    return values
