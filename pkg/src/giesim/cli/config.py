"""JSON experiment configuration.

All keys are flat and in SI units; ``sweep`` and ``output`` are the only
nested objects. Command-line flags override file values.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from typing import Any

MODES = ("phase", "run", "sweep", "nogo", "mediator", "decohere")
SWEEP_VARIABLES = ("mass", "d1", "d2", "L", "dt", "gamma", "w", "xi_scale")

# key -> (type, unit/meaning)
PARAMETER_KEYS: dict[str, tuple[type, str]] = {
    "mass": (float, "kg, mass of each particle"),
    "distance": (float, "m, separation for the phase subcommand"),
    "d1": (float, "m, separation of the two lower arms"),
    "d2": (float, "m, separation of an upper arm from the other lower arm"),
    "L": (float, "m, horizontal arm length"),
    "v": (float, "m/s, particle velocity (dt = L / v)"),
    "dt": (float, "s, interaction time"),
    "exponent": (float, "potential exponent n in 1/r^n"),
    "phi1": (float, "rad"),
    "dphi": (float, "rad, phi2 - phi1"),
    "geometric": (bool, "use the geometric phase-to-configuration assignment"),
    "trials": (int, "number of random no-go trials"),
    "depth": (int, "maximum random circuit depth"),
    "dc": (str, "mediator dimension or range, e.g. 3 or 2-4"),
    "w": (float, "rad per field quantum"),
    "xi00": (float, "coupling for configuration 00"),
    "xi01": (float, "coupling for configuration 01"),
    "xi10": (float, "coupling for configuration 10"),
    "xi11": (float, "coupling for configuration 11"),
    "alpha0": (float, "initial coherent amplitude of the field"),
    "fock": (int, "Fock truncation; forces the dense Fock backend"),
    "gamma": (float, "field dephasing strength per step"),
    "threshold": (bool, "search for the entanglement-breaking dephasing strength"),
    "tol": (float, "negativity tolerance for the threshold search"),
    "seed": (int, "master random seed"),
    "threads": (int, "worker pool size"),
    "keep_going": (bool, "continue a sweep past failing points"),
}
SWEEP_KEYS: dict[str, tuple[type, str]] = {
    "variable": (str, "one of " + ", ".join(SWEEP_VARIABLES)),
    "scale": (str, "linear or log"),
    "from": (float, "first grid value"),
    "to": (float, "last grid value"),
    "points": (int, "number of grid points (>= 2)"),
}
OUTPUT_KEYS: dict[str, tuple[type, str]] = {
    "format": (str, "csv or json"),
    "path": (str, "output file, or - for stdout"),
}


class ConfigError(ValueError):
    """Malformed configuration or flag combination (exit code 2)."""


@dataclass(frozen=True)
class SweepSpec:
    variable: str
    start: float
    stop: float
    points: int
    scale: str = "linear"

    def __post_init__(self):
        if self.variable not in SWEEP_VARIABLES:
            raise ConfigError(f"unknown sweep variable {self.variable!r}; choose from {SWEEP_VARIABLES}")
        if self.scale not in ("linear", "log"):
            raise ConfigError(f"sweep scale must be linear or log, got {self.scale!r}")
        if self.points < 2:
            raise ConfigError("a sweep needs at least 2 points")
        if not (math.isfinite(self.start) and math.isfinite(self.stop)) or not self.start < self.stop:
            raise ConfigError(f"sweep requires from < to, got {self.start!r} .. {self.stop!r}")
        if self.scale == "log" and self.start <= 0:
            raise ConfigError("log sweeps require from > 0")

    def grid(self) -> list[float]:
        import numpy as np

        if self.scale == "log":
            values = np.geomspace(self.start, self.stop, self.points)
        else:
            values = np.linspace(self.start, self.stop, self.points)
        return [float(v) for v in values]


def _line_of(text: str, key: str) -> int | None:
    match = re.search(r'"' + re.escape(key) + r'"\s*:', text)
    return text.count("\n", 0, match.start()) + 1 if match else None


def _where(path: str, text: str, key: str) -> str:
    line = _line_of(text, key)
    return f"{path}:{line}" if line else path


def _coerce(value: Any, kind: type, key: str, where: str) -> Any:
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where}: {key!r} must be a number, got {value!r}")
        return float(value)
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where}: {key!r} must be an integer, got {value!r}")
        return value
    if kind is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{where}: {key!r} must be true or false, got {value!r}")
        return value
    if key == "dc" and isinstance(value, int) and not isinstance(value, bool):
        return str(value)
    if not isinstance(value, str):
        raise ConfigError(f"{where}: {key!r} must be a string, got {value!r}")
    return value


def _section(raw: Any, keys: dict, name: str, path: str, text: str) -> dict:
    if not isinstance(raw, dict):
        raise ConfigError(f"{_where(path, text, name)}: {name!r} must be an object")
    out = {}
    for key, value in raw.items():
        if key not in keys:
            raise ConfigError(f"{_where(path, text, key)}: unknown key {name}.{key}")
        out[key] = _coerce(value, keys[key][0], f"{name}.{key}", _where(path, text, key))
    return out


def load_config(path: str) -> dict[str, Any]:
    """Read and validate a config file into a flat dictionary.

    ``sweep.*`` keys become ``sweep_variable`` etc. and ``output.*`` become
    ``output_format`` / ``output_path``.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc.strerror}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}:1: top level must be a JSON object")

    flat: dict[str, Any] = {}
    for key, value in raw.items():
        where = _where(path, text, key)
        if key == "mode":
            if value not in MODES:
                raise ConfigError(f"{where}: mode must be one of {MODES}, got {value!r}")
            flat["mode"] = value
        elif key == "sweep":
            for k, v in _section(value, SWEEP_KEYS, "sweep", path, text).items():
                flat[f"sweep_{k}"] = v
        elif key == "output":
            for k, v in _section(value, OUTPUT_KEYS, "output", path, text).items():
                flat[f"output_{k}"] = v
        elif key in PARAMETER_KEYS:
            flat[key] = _coerce(value, PARAMETER_KEYS[key][0], key, where)
        else:
            raise ConfigError(f"{where}: unknown key {key!r}")
    return flat


def parse_dc_range(text: str) -> tuple[int, int]:
    try:
        if "-" in text:
            lo, hi = (int(p) for p in text.split("-", 1))
        else:
            lo = hi = int(text)
    except ValueError as exc:
        raise ConfigError(f"invalid mediator dimension {text!r}; use N or LO-HI") from exc
    if not 2 <= lo <= hi <= 4:
        raise ConfigError(f"mediator dimension range {text!r} must lie within 2-4")
    return lo, hi
