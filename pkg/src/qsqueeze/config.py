"""Experiment configuration: YAML schema, validation, and defaults.

A config file is a mapping with sections. Unknown keys anywhere are errors
(fail-closed) so typos do not silently fall back to defaults. Example:

    label: fig3b_feedback
    engine: fock_feedback          # gaussian_effective | fock_full |
                                   # fock_feedback | fock_no_feedback
    params:
      omega_m: 0.1
      omega_a: 8.0
      g: 1.0
      gamma: 0.1
      n_th: 0.0
    run:
      horizon: 150.0               # total simulated time
      sample_cadence: 0.5          # spacing of recorded samples
      cutoff: 40                   # Fock levels (fock engines)
      dt: null                     # integrator step; null = engine default
      qubit_sign: 1                # gaussian engine: +1 frozen-excited, -1 ground
    feedback:                      # feedback engines only
      dt_measure: null             # null = one qubit period
    outputs: [timeseries, steady]
    steady:
      window: 20
      rel_tol: 1.0e-3
    wigner:                        # required iff outputs include wigner
      times: [0.0, 7.0, 70.0]
      extent: 4.0
      points: 81
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import yaml

from .model import SystemParams, validate

__all__ = [
    "ConfigError",
    "ENGINES",
    "FEEDBACK_ENGINES",
    "OUTPUT_KINDS",
    "SteadySettings",
    "WignerSettings",
    "ExperimentConfig",
    "default_cutoff",
    "parse_config",
]

ENGINES = ("gaussian_effective", "fock_full", "fock_feedback", "fock_no_feedback")
FEEDBACK_ENGINES = ("fock_feedback", "fock_no_feedback")
OUTPUT_KINDS = ("timeseries", "steady", "wigner")

NO_STEADY_MSG = "gamma must be positive: an undamped oscillator has no dissipative steady state"


class ConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""


def default_cutoff(n_th: float) -> int:
    """Documented cutoff defaults; generous for the occupancies the presets reach."""
    if n_th <= 1.0:
        return 40
    if n_th <= 5.0:
        return 60
    from .fock import suggested_cutoff

    return suggested_cutoff(n_th) + 20


@dataclass(frozen=True)
class SteadySettings:
    window: int = 20
    rel_tol: float = 1e-3

    def __post_init__(self):
        if self.window < 2:
            raise ConfigError(f"steady window must be at least 2, got {self.window}")
        if not self.rel_tol > 0.0:
            raise ConfigError(f"steady rel_tol must be positive, got {self.rel_tol}")


@dataclass(frozen=True)
class WignerSettings:
    times: tuple = ()
    extent: float = 4.0
    points: int = 81

    def __post_init__(self):
        if len(self.times) == 0:
            raise ConfigError("wigner.times must list at least one snapshot time")
        if any(t < 0.0 for t in self.times):
            raise ConfigError(f"wigner.times must be non-negative, got {list(self.times)}")
        if not self.extent > 0.0:
            raise ConfigError(f"wigner.extent must be positive, got {self.extent}")
        if self.points < 2:
            raise ConfigError(f"wigner.points must be at least 2, got {self.points}")


@dataclass(frozen=True)
class ExperimentConfig:
    """One fully resolved experiment: engine, physics, numerics, outputs."""

    label: str
    engine: str
    params: SystemParams
    horizon: float = 150.0
    sample_cadence: float = 0.5
    cutoff: int | None = None
    dt: float | None = None
    dt_measure: float | None = None
    qubit_sign: int = +1
    outputs: tuple = ("timeseries",)
    steady: SteadySettings = field(default_factory=SteadySettings)
    wigner: WignerSettings | None = None

    def __post_init__(self):
        if self.engine not in ENGINES:
            raise ConfigError(f"engine must be one of {ENGINES}, got {self.engine!r}")
        if not self.label or any(c in self.label for c in "/\\ \t"):
            raise ConfigError(f"label must be a non-empty path-safe token, got {self.label!r}")
        if not self.horizon > 0.0:
            raise ConfigError(f"horizon must be positive, got {self.horizon}")
        if not self.sample_cadence > 0.0:
            raise ConfigError(f"sample_cadence must be positive, got {self.sample_cadence}")
        if self.dt is not None and not self.dt > 0.0:
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if self.dt_measure is not None:
            if self.engine not in FEEDBACK_ENGINES:
                raise ConfigError(f"dt_measure applies only to feedback engines, not {self.engine}")
            if not self.dt_measure > 0.0:
                raise ConfigError(f"dt_measure must be positive, got {self.dt_measure}")
        if self.qubit_sign not in (+1, -1):
            raise ConfigError(f"qubit_sign must be +1 or -1, got {self.qubit_sign}")
        unknown = [o for o in self.outputs if o not in OUTPUT_KINDS]
        if unknown:
            raise ConfigError(f"unknown outputs {unknown}; valid kinds are {OUTPUT_KINDS}")
        if not self.outputs:
            raise ConfigError("outputs must request at least one of " + ", ".join(OUTPUT_KINDS))
        if "steady" in self.outputs and self.params.gamma == 0.0:
            raise ConfigError(NO_STEADY_MSG)
        if "wigner" in self.outputs:
            if self.engine == "gaussian_effective":
                raise ConfigError("wigner output needs a Fock engine, not gaussian_effective")
            if self.wigner is None:
                raise ConfigError("outputs include wigner but no wigner section is given")
        validate(self.params)

    @property
    def resolved_cutoff(self) -> int:
        return self.cutoff if self.cutoff is not None else default_cutoff(self.params.n_th)

    @property
    def resolved_dt_measure(self) -> float:
        if self.dt_measure is not None:
            return self.dt_measure
        return 2.0 * math.pi / self.params.omega_a

    def with_cutoff(self, cutoff: int | None) -> "ExperimentConfig":
        return self if cutoff is None else replace(self, cutoff=cutoff)


def _pop_section(data: dict, name: str) -> dict:
    section = data.pop(name, None)
    if section is None:
        return {}
    if not isinstance(section, dict):
        raise ConfigError(f"section '{name}' must be a mapping, got {type(section).__name__}")
    return dict(section)


def _check_consumed(section: dict, name: str) -> None:
    if section:
        keys = ", ".join(repr(k) for k in sorted(map(str, section)))
        raise ConfigError(f"unknown key(s) {keys} in section '{name}'")


def _number(section: dict, sec_name: str, key: str, default=None, required=False):
    value = section.pop(key, None)
    if value is None:
        if required:
            raise ConfigError(f"missing required key '{key}' in section '{sec_name}'")
        return default
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"'{sec_name}.{key}' must be a number, got {value!r}")
    return float(value)


def _integer(section: dict, sec_name: str, key: str, default=None):
    if key not in section:
        return default
    value = section.pop(key)
    if value is None:
        return default
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"'{sec_name}.{key}' must be an integer, got {value!r}")
    return int(value)


def parse_config(path) -> ExperimentConfig:
    """Read and validate a YAML experiment config.

    Unknown keys fail with the key named; missing optional keys take the
    documented defaults (cutoff by bath occupancy, cadence 0.5, steady window
    20 at rel_tol 1e-3, dt_measure one qubit period).
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    if data is None:
        raise ConfigError(f"config file {path} is empty")
    if not isinstance(data, dict):
        raise ConfigError(f"config root must be a mapping, got {type(data).__name__}")
    data = dict(data)

    engine = data.pop("engine", None)
    if engine is None:
        raise ConfigError("missing required key 'engine'")
    if engine not in ENGINES:
        raise ConfigError(f"engine must be one of {ENGINES}, got {engine!r}")
    label = data.pop("label", None) or path.stem

    par = _pop_section(data, "params")
    params = SystemParams(
        omega_m=_number(par, "params", "omega_m", required=True),
        omega_a=_number(par, "params", "omega_a", required=True),
        g=_number(par, "params", "g", default=1.0),
        gamma=_number(par, "params", "gamma", default=0.0),
        n_th=_number(par, "params", "n_th", default=0.0),
    )
    _check_consumed(par, "params")

    run = _pop_section(data, "run")
    horizon = _number(run, "run", "horizon", default=150.0)
    cadence = _number(run, "run", "sample_cadence", default=0.5)
    dt = _number(run, "run", "dt", default=None)
    cutoff = _integer(run, "run", "cutoff", default=None)
    qubit_sign = _integer(run, "run", "qubit_sign", default=+1)
    _check_consumed(run, "run")

    fb = _pop_section(data, "feedback")
    if fb and engine not in FEEDBACK_ENGINES:
        raise ConfigError(f"section 'feedback' is only valid for engines {FEEDBACK_ENGINES}")
    dt_measure = _number(fb, "feedback", "dt_measure", default=None)
    _check_consumed(fb, "feedback")

    outputs = data.pop("outputs", ["timeseries"])
    if not isinstance(outputs, list) or not all(isinstance(o, str) for o in outputs):
        raise ConfigError(f"'outputs' must be a list of strings, got {outputs!r}")

    st = _pop_section(data, "steady")
    steady = SteadySettings(
        window=_integer(st, "steady", "window", default=20),
        rel_tol=_number(st, "steady", "rel_tol", default=1e-3),
    )
    _check_consumed(st, "steady")

    wg = _pop_section(data, "wigner")
    wigner = None
    if wg:
        times = wg.pop("times", None)
        if not isinstance(times, list) or not times:
            raise ConfigError("'wigner.times' must be a non-empty list of times")
        for t in times:
            if isinstance(t, bool) or not isinstance(t, (int, float)):
                raise ConfigError(f"'wigner.times' entries must be numbers, got {t!r}")
        wigner = WignerSettings(
            times=tuple(float(t) for t in times),
            extent=_number(wg, "wigner", "extent", default=4.0),
            points=_integer(wg, "wigner", "points", default=81),
        )
        _check_consumed(wg, "wigner")

    _check_consumed(data, "top level")

    return ExperimentConfig(
        label=str(label),
        engine=engine,
        params=params,
        horizon=horizon,
        sample_cadence=cadence,
        cutoff=cutoff,
        dt=dt,
        dt_measure=dt_measure,
        qubit_sign=qubit_sign,
        outputs=tuple(outputs),
        steady=steady,
        wigner=wigner,
    )
