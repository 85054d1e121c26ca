"""Experiment config files.

TOML with three sections::

    [source]
    wavelength = "632.8nm"
    source_separation_d = "1.1mm"
    spot_size_s = "0.11mm"
    distance_z = "2.955m"
    polarization = "parallel"
    emitters_per_spot = 64

    [scan]
    mode = "opposite"
    start = "-3mm"
    stop = "3mm"
    step = "0.25mm"
    fixed_x2 = "0mm"

    [monte_carlo]
    seed = 42
    realizations = 200000
    amplitude_model = "gaussian"

Lengths are metres when given as bare numbers; strings may carry one of the
suffixes nm, um, mm, m. Unknown sections or keys are rejected.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass
from decimal import Decimal
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import rng
from .geometry import ConfigError, ExperimentConfig, ScanPlan, reference_paper_config

UNITS = {"nm": -9, "um": -6, "mm": -3, "m": 0}  # decimal exponents
_LENGTH = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*(nm|um|mm|m)?\s*$")

SOURCE_KEYS = {
    "wavelength": "length",
    "source_separation_d": "length",
    "spot_size_s": "length",
    "distance_z": "length",
    "polarization": "str",
    "emitters_per_spot": "int",
}
SCAN_KEYS = {"mode": "str", "start": "length", "stop": "length", "step": "length", "fixed_x2": "length"}
MC_KEYS = {"seed": "int", "realizations": "int", "amplitude_model": "str"}
SECTIONS = {"source": SOURCE_KEYS, "scan": SCAN_KEYS, "monte_carlo": MC_KEYS}


@dataclass(frozen=True)
class LoadedConfig:
    experiment: ExperimentConfig
    scan: dict  # length values in metres; empty when the file has no [scan]
    amplitude_model: str = rng.GAUSSIAN

    def plan(self, default: ScanPlan) -> ScanPlan:
        if not self.scan:
            return default
        mode = self.scan.get("mode", default.mode)
        start = self.scan.get("start", float(default.positions[0]))
        stop = self.scan.get("stop", float(default.positions[-1]))
        step = self.scan.get("step") or default.step or float(np.diff(default.positions[:2])[0])
        return ScanPlan.grid(mode, start, stop, step, self.scan.get("fixed_x2", default.fixed_x2))


def parse_length(value, name: str = "length") -> float:
    if isinstance(value, bool):
        raise ConfigError(name, f"expected a length, got {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        m = _LENGTH.match(value)
        if m:
            # exact decimal scaling, so "5um" is the same float as 5e-6
            return float(Decimal(m.group(1)).scaleb(UNITS[m.group(2) or "m"]))
    raise ConfigError(name, f"cannot parse length {value!r} (units: nm, um, mm, m)")


def _coerce(kind, value, name):
    if kind == "length":
        return parse_length(value, name)
    if kind == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(name, f"expected an integer, got {value!r}")
        return value
    if not isinstance(value, str):
        raise ConfigError(name, f"expected a string, got {value!r}")
    return value


def from_sections(data: dict) -> LoadedConfig:
    """Build a config from parsed section tables; missing keys take reference values."""
    if not isinstance(data, dict):
        raise ConfigError("config", "top level must be a table of sections")
    parsed = {}
    for section, table in data.items():
        if section not in SECTIONS:
            raise ConfigError(section, "unknown section")
        if not isinstance(table, dict):
            raise ConfigError(section, "section must be a table")
        keys = SECTIONS[section]
        out = {}
        for key, value in table.items():
            if key not in keys:
                raise ConfigError(f"{section}.{key}", "unknown key")
            out[key] = _coerce(keys[key], value, key)
        parsed[section] = out

    source = parsed.get("source", {})
    mc = dict(parsed.get("monte_carlo", {}))
    model = mc.pop("amplitude_model", rng.GAUSSIAN)
    if model not in rng.AMPLITUDE_MODELS:
        raise ConfigError("amplitude_model", f"must be one of {rng.AMPLITUDE_MODELS}, got {model!r}")
    if "polarization" in source:
        source["polarization"] = source["polarization"].lower()
        if source["polarization"] not in ("parallel", "orthogonal"):
            raise ConfigError("polarization", f"must be parallel or orthogonal, got {source['polarization']!r}")
    experiment = reference_paper_config(**source, **mc)
    scan = parsed.get("scan", {})
    if "mode" in scan and scan["mode"] not in ("opposite", "fixed_d2"):
        raise ConfigError("mode", f"must be opposite or fixed_d2, got {scan['mode']!r}")
    return LoadedConfig(experiment, scan, model)


def load_config(path) -> LoadedConfig:
    """Read a TOML config, or the ``config_echo`` of a run manifest.

    Raises OSError when unreadable and ConfigError when invalid.
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix == ".manifest":
        try:
            data = json.loads(text)["config_echo"]
        except (ValueError, KeyError, TypeError) as exc:
            raise ConfigError("config_echo", f"not a readable manifest: {exc}") from None
        return from_sections(data)
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("config", f"malformed TOML: {exc}") from None
    return from_sections(data)


def to_sections(config: ExperimentConfig, plan: ScanPlan | None = None, amplitude_model=rng.GAUSSIAN) -> dict:
    """Inverse of ``from_sections``; lengths in metres, exact float round trip."""
    data = {
        "source": {
            "wavelength": config.wavelength,
            "source_separation_d": config.source_separation_d,
            "spot_size_s": config.spot_size_s,
            "distance_z": config.distance_z,
            "polarization": config.polarization.value,
            "emitters_per_spot": int(config.emitters_per_spot),
        },
        "monte_carlo": {
            "seed": int(config.seed),
            "realizations": int(config.realizations),
            "amplitude_model": amplitude_model,
        },
    }
    if plan is not None:
        pos = plan.positions
        data["scan"] = {
            "mode": plan.mode.value,
            "start": float(pos[0]),
            "stop": float(pos[-1]),
            "step": float(plan.step) if plan.step else float((pos[-1] - pos[0]) / max(len(pos) - 1, 1)),
            "fixed_x2": float(plan.fixed_x2),
        }
    return data
