"""Experiment configuration: YAML in, validated and normalised dict out."""
from __future__ import annotations

import copy
import hashlib
import json
from numbers import Real

import yaml

from .noise import BACKENDS, DEFAULT_GAMMA, DEFAULT_SEGMENTS, DEFAULT_TAU, NORMALIZATIONS
from .plan import TIMINGS
from .system import COUPLING_KINDS, DEFAULT_J_HZ, PRESET_PI_J_UNITS

ENGINES = ("MonteCarlo", "Redfield", "Both")
METHODS = ("Exact", "SplitStep")
RESERVOIR_PRESETS = ("R1", "R2", "R3", "R4")
REDFIELD_MODES = ("memory", "markov")

DEFAULTS = {
    "system": "system-I",
    "systems": ["system-I", "system-II"],
    "J": DEFAULT_J_HZ,
    "reservoir": "R1",
    "coupling": "Z2",
    "alpha_hz": 63.66,
    "M": 12,
    "seed": None,
    "method": "Exact",
    "engine": None,
    "output_dir": "out",
    "threads": 1,
    "noise": {
        "backend": "fft",
        "normalization": "ensemble",
        "gamma": DEFAULT_GAMMA,
        "tau": DEFAULT_TAU,
        "n_segments": DEFAULT_SEGMENTS,
        "spectrum_traces": 2500,
    },
    "calibration": {"t_min": 0.0, "t_max": 15e-3, "f_min": 0.999, "t_step": 10e-6},
    "plan": {"timing": "grid", "refine_compensation": True},
    "redfield": {"mode": "memory", "substeps": 8},
}


class ConfigError(ValueError):
    pass


def _merge(base: dict, override: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, val in override.items():
        if key not in base:
            raise ConfigError(f"unknown config key {path + key!r}")
        if isinstance(base[key], dict):
            if not isinstance(val, dict):
                raise ConfigError(f"{path + key} must be a mapping")
            out[key] = _merge(base[key], val, f"{path}{key}.")
        else:
            out[key] = val
    return out


def _number(val, name, positive=False, nonneg=False):
    if isinstance(val, str):
        # YAML 1.1 reads exponent floats without a dot (1e-5) as strings
        try:
            val = float(val)
        except ValueError:
            pass
    if isinstance(val, bool) or not isinstance(val, Real):
        raise ConfigError(f"{name} must be a number, got {val!r}")
    val = float(val)
    if positive and not val > 0:
        raise ConfigError(f"{name} must be positive")
    if nonneg and not val >= 0:
        raise ConfigError(f"{name} must be non-negative")
    return val


def _integer(val, name, minimum=None):
    if isinstance(val, bool) or not isinstance(val, int):
        raise ConfigError(f"{name} must be an integer, got {val!r}")
    if minimum is not None and val < minimum:
        raise ConfigError(f"{name} must be >= {minimum}")
    return int(val)


def _choice(val, name, options):
    if val not in options:
        raise ConfigError(f"{name} must be one of {list(options)}, got {val!r}")
    return val


def _system(val, name="system"):
    if isinstance(val, str):
        return _choice(val, name, tuple(PRESET_PI_J_UNITS))
    if isinstance(val, dict):
        keys = {"omega_z1", "omega_z2", "omega_x2"}
        if set(val) != keys:
            raise ConfigError(f"custom {name} needs exactly the keys {sorted(keys)} (units of pi*J)")
        return {k: _number(val[k], f"{name}.{k}") for k in sorted(keys)}
    raise ConfigError(f"{name} must be a preset name or a mapping")


def _reservoir(val):
    if isinstance(val, str):
        return _choice(val, "reservoir", RESERVOIR_PRESETS)
    if isinstance(val, dict):
        if set(val) != {"gamma", "omega0"}:
            raise ConfigError("custom reservoir needs exactly the keys ['gamma', 'omega0'] (rad/s)")
        return {"gamma": _number(val["gamma"], "reservoir.gamma", positive=True),
                "omega0": _number(val["omega0"], "reservoir.omega0", nonneg=True)}
    raise ConfigError("reservoir must be a preset name or a mapping")


def normalize(raw: dict) -> dict:
    """Fill defaults and validate; the result is a plain, JSON-compatible dict."""
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping")
    cfg = _merge(DEFAULTS, raw)
    cfg["system"] = _system(cfg["system"])
    if not isinstance(cfg["systems"], list) or not cfg["systems"]:
        raise ConfigError("systems must be a non-empty list")
    cfg["systems"] = [_system(s, "systems") for s in cfg["systems"]]
    cfg["J"] = _number(cfg["J"], "J", positive=True)
    cfg["reservoir"] = _reservoir(cfg["reservoir"])
    cfg["coupling"] = _choice(cfg["coupling"], "coupling", COUPLING_KINDS)
    alpha = cfg["alpha_hz"]
    if isinstance(alpha, list):
        if not alpha:
            raise ConfigError("alpha_hz list is empty")
        cfg["alpha_hz"] = [_number(a, "alpha_hz", nonneg=True) for a in alpha]
    else:
        cfg["alpha_hz"] = _number(alpha, "alpha_hz", nonneg=True)
    cfg["M"] = _integer(cfg["M"], "M", 1)
    if cfg["seed"] is None:
        raise ConfigError("seed is mandatory (set it in the config or pass --seed)")
    cfg["seed"] = _integer(cfg["seed"], "seed", 0)
    cfg["method"] = _choice(cfg["method"], "method", METHODS)
    if cfg["engine"] is not None:
        cfg["engine"] = _choice(cfg["engine"], "engine", ENGINES)
    if not isinstance(cfg["output_dir"], str) or not cfg["output_dir"]:
        raise ConfigError("output_dir must be a non-empty string")
    cfg["threads"] = _integer(cfg["threads"], "threads", 1)

    nz = cfg["noise"]
    nz["backend"] = _choice(nz["backend"], "noise.backend", BACKENDS)
    nz["normalization"] = _choice(nz["normalization"], "noise.normalization", NORMALIZATIONS)
    nz["gamma"] = _number(nz["gamma"], "noise.gamma", positive=True)
    nz["tau"] = _number(nz["tau"], "noise.tau", positive=True)
    nz["n_segments"] = _integer(nz["n_segments"], "noise.n_segments", 1)
    nz["spectrum_traces"] = _integer(nz["spectrum_traces"], "noise.spectrum_traces", 1)

    cal = cfg["calibration"]
    for k in ("t_min", "t_max", "f_min", "t_step"):
        cal[k] = _number(cal[k], f"calibration.{k}", nonneg=True)
    if not (cal["t_min"] < cal["t_max"] <= 50e-3):
        raise ConfigError("calibration range must satisfy t_min < t_max <= 0.05 s")
    if not (0 < cal["t_step"] <= 10e-6):
        raise ConfigError("calibration.t_step must be in (0, 1e-5] s")
    if not cal["f_min"] <= 1:
        raise ConfigError("calibration.f_min must be <= 1")

    pl = cfg["plan"]
    pl["timing"] = _choice(pl["timing"], "plan.timing", TIMINGS)
    if not isinstance(pl["refine_compensation"], bool):
        raise ConfigError("plan.refine_compensation must be true or false")

    rf = cfg["redfield"]
    rf["mode"] = _choice(rf["mode"], "redfield.mode", REDFIELD_MODES)
    rf["substeps"] = _integer(rf["substeps"], "redfield.substeps", 1)
    return cfg


def load(path) -> dict:
    """Read a YAML config file (unvalidated)."""
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    return raw if raw is not None else {}


def dump(cfg: dict) -> str:
    return yaml.safe_dump(cfg, sort_keys=True, default_flow_style=False)


# keys that do not influence results are left out of the hash
UNHASHED = ("threads", "output_dir")


def config_hash(cfg: dict) -> str:
    blob = json.dumps({k: v for k, v in cfg.items() if k not in UNHASHED}, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]
