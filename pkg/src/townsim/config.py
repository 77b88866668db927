"""Scenario configuration: defaults, validation and the ``key = value`` file format."""

from __future__ import annotations

import dataclasses
import hashlib
from dataclasses import dataclass, fields


class ConfigError(ValueError):
    """Raised for malformed config text or out-of-range values."""

    def __init__(self, message: str, line: int | None = None, key: str | None = None):
        self.line = line
        self.key = key
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


IMMUNITY_MODES = ("homogeneous", "rulebased")
WANING_MODES = ("fixed", "exponential")
FIRST_DOSE_ORDERS = ("random", "degree_desc")


@dataclass(frozen=True)
class ScenarioConfig:
    # population and run length
    n: int = 10000
    days: int = 1080
    initial_infections: int = 4
    # transmission and progression (per-day probabilities)
    beta: float = 0.14
    delta: float = 0.05
    testing_rate: float = 0.01
    incubation_period: float = 14.0
    # natural immunity
    immunity_mode: str = "homogeneous"
    immunity_waning: str = "fixed"
    immunity_period: float = 180.0
    immunity_naive: float = 140.0
    immunity_reinfected: float = 180.0
    immunity_vaccinated: float = 180.0
    immunity_hybrid: float = 200.0
    # vaccination
    max_doses: int = 3
    uptake: float = 0.9
    vaccine_period: float = 180.0
    vaccine_waning: str = "fixed"
    vaccine_start_day: int = 60
    vaccine_initial_doses: int = 10
    vaccine_daily_cap: int = 100
    dose2_interval: int = 28
    dose3_interval: int = 180
    efficacy1: float = 0.92
    efficacy2: float = 0.86
    efficacy3: float = 0.96
    first_dose_order: str = "random"
    # contact network
    mean_degree: float = 5.0
    target_exponent: float = 2.05
    # travel and outside city
    travel: bool = True
    departure_rate: float = 0.00012
    return_rate: float = 0.0001
    outside_population: int = 4_000_000
    outside_beta: float = 0.14
    outside_delta: float = 0.05
    outside_immunity_period: float = 180.0
    outside_initial_infected: float = 100.0
    # reproducibility
    rng_seed: int = 0
    network_seed: int | None = None
    replicates: int = 1

    def __post_init__(self):
        validate(self)

    @property
    def tau(self) -> float:
        return 1.0 / self.incubation_period

    @property
    def efficacy(self) -> tuple[float, float, float]:
        return (self.efficacy1, self.efficacy2, self.efficacy3)

    @property
    def effective_network_seed(self) -> int:
        return self.rng_seed if self.network_seed is None else self.network_seed

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)

    def to_text(self) -> str:
        return serialize(self)

    def digest(self) -> str:
        return hashlib.sha256(serialize(self).encode()).hexdigest()


_PROBABILITIES = ("beta", "delta", "testing_rate", "uptake", "efficacy1", "efficacy2",
                  "efficacy3", "departure_rate", "return_rate", "outside_beta",
                  "outside_delta")
_DURATIONS = ("incubation_period", "immunity_period", "immunity_naive", "immunity_reinfected",
              "immunity_vaccinated", "immunity_hybrid", "vaccine_period",
              "outside_immunity_period")
_CHOICES = {"immunity_mode": IMMUNITY_MODES, "immunity_waning": WANING_MODES,
            "vaccine_waning": WANING_MODES, "first_dose_order": FIRST_DOSE_ORDERS}


def validate(cfg: ScenarioConfig) -> None:
    def bad(key, msg):
        raise ConfigError(f"{key} {msg}", key=key)

    for key in _PROBABILITIES:
        v = getattr(cfg, key)
        if not 0.0 <= v <= 1.0:
            bad(key, "must lie in [0,1]")
    for key in _DURATIONS:
        if not getattr(cfg, key) >= 1.0:
            bad(key, "must be >= 1 day")
    for key, options in _CHOICES.items():
        if getattr(cfg, key) not in options:
            bad(key, f"must be one of {', '.join(options)}")
    if cfg.n < 10:
        bad("n", "must be >= 10")
    if cfg.days < 1:
        bad("days", "must be >= 1")
    if not 0 <= cfg.initial_infections <= cfg.n:
        bad("initial_infections", f"must lie in [0,{cfg.n}]")
    if cfg.max_doses not in (0, 1, 2, 3):
        bad("max_doses", "must be one of 0, 1, 2, 3")
    if cfg.vaccine_start_day < 0:
        bad("vaccine_start_day", "must be >= 0")
    if cfg.vaccine_daily_cap < 0:
        bad("vaccine_daily_cap", "must be >= 0")
    if not 0 <= cfg.vaccine_initial_doses <= cfg.vaccine_daily_cap:
        bad("vaccine_initial_doses", "must lie in [0, vaccine_daily_cap]")
    for key in ("dose2_interval", "dose3_interval"):
        if getattr(cfg, key) < 1:
            bad(key, "must be >= 1 day")
    if not 2 <= cfg.mean_degree < cfg.n - 1:
        bad("mean_degree", "must lie in [2, n-1)")
    if cfg.target_exponent <= 1:
        bad("target_exponent", "must be > 1")
    if cfg.outside_population < 1:
        bad("outside_population", "must be >= 1")
    if not 0 <= cfg.outside_initial_infected <= cfg.outside_population:
        bad("outside_initial_infected", "must lie in [0, outside_population]")
    if cfg.replicates < 1:
        bad("replicates", "must be >= 1")


_FIELDS = {f.name: f for f in fields(ScenarioConfig)}
_BOOL_TEXT = {"true": True, "yes": True, "on": True, "1": True,
              "false": False, "no": False, "off": False, "0": False}


def _coerce(key: str, raw: str, line: int):
    default = _FIELDS[key].default
    try:
        if key == "network_seed":
            return None if raw.lower() in ("", "none") else int(raw)
        if isinstance(default, bool):
            return _BOOL_TEXT[raw.lower()]
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        return raw.lower()
    except (KeyError, ValueError):
        raise ConfigError(f"cannot parse {key} = {raw!r}", line=line, key=key) from None


def parse_config(text: str, base: ScenarioConfig | None = None) -> ScenarioConfig:
    """Parse flat ``key = value`` text. Unspecified keys keep ``base`` (defaults)."""
    values = {}
    for lineno, raw_line in enumerate(text.splitlines(), 1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw_line.strip()!r}", line=lineno)
        key, _, raw = line.partition("=")
        key, raw = key.strip(), raw.strip()
        if key not in _FIELDS:
            raise ConfigError(f"unknown key {key!r}", line=lineno, key=key)
        if key in values:
            raise ConfigError(f"duplicate key {key!r}", line=lineno, key=key)
        values[key] = _coerce(key, raw, lineno)
    return dataclasses.replace(base or ScenarioConfig(), **values)


def _format(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def serialize(cfg: ScenarioConfig) -> str:
    return "".join(f"{f.name} = {_format(getattr(cfg, f.name))}\n" for f in fields(cfg))


def load_config(path) -> ScenarioConfig:
    with open(path) as fh:
        return parse_config(fh.read())
