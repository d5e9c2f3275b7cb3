"""Experiment configuration: defaults, JSON schema, dotted overrides."""

from __future__ import annotations

import copy
import dataclasses
import json
from pathlib import Path

import jsonschema

from ntnbeam.learn.config import SystemConfig, TrainConfig

SCENARIOS = (
    "train_curve", "rate_vs_slot", "sweep_l", "sweep_B", "sweep_K", "sweep_lrd", "sweep_velocity",
    "buffer_vs_regen", "transfer_compare", "baseline_only", "complexity",
)
LEARNED = ("fno", "cnn")
CLASSICAL = ("wmmse", "zf", "mrt")

_ENUMS = {
    "csi": ["perfect", "additive", "multiplicative"],
    "mode": ["buffer", "regenerate"],
    "entropy": ["sum", "mean"],
    "clamp": ["soft", "hard"],
    "backbone": ["fno", "cnn"],
}
_NULLABLE_INT = {"rank_laps", "rank_haps"}


class ConfigError(ValueError):
    pass


def _field_schema(name, default):
    if name in _NULLABLE_INT:
        return {"type": ["integer", "null"], "minimum": 1}
    if isinstance(default, bool):
        return {"type": "boolean"}
    if isinstance(default, int):
        return {"type": "integer"}
    if isinstance(default, float):
        return {"type": "number"}
    if isinstance(default, str):
        s = {"type": "string"}
        if name in _ENUMS:
            s["enum"] = _ENUMS[name]
        return s
    if isinstance(default, (tuple, list)):
        return {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 2, "maxItems": 2}
    raise TypeError(f"no schema rule for {name}")


def _object_schema(defaults: dict) -> dict:
    return {
        "type": "object",
        "additionalProperties": False,
        "properties": {k: _field_schema(k, v) for k, v in defaults.items()},
    }


def _system_defaults() -> dict:
    return dataclasses.asdict(SystemConfig())


def _train_defaults() -> dict:
    d = {f.name: getattr(TrainConfig(), f.name) for f in dataclasses.fields(TrainConfig) if f.name not in ("system", "seed")}
    return {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}


def default_config() -> dict:
    """Full-scale defaults (Table II values)."""
    return {
        "scenario": "baseline_only",
        "seed": 0,
        "methods": list(LEARNED + CLASSICAL),
        "xi": [1.0],
        "values": [],
        "system": _system_defaults(),
        "train": _train_defaults(),
        "eval": {"episodes": 500, "T": 50},
        "transfer": {"beta": 1.0},
        "checkpoint_dir": "checkpoints",
        "timing": False,
    }


def desk_overrides() -> dict:
    return {
        "system": {"B": 2, "K": 2, "N_laps": 4, "N_haps": 8},
        "train": {"episodes": 50, "T": 20},
        "eval": {"episodes": 20, "T": 20},
    }


def schema() -> dict:
    d = default_config()
    return {
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "title": "ntnbeam experiment configuration",
        "type": "object",
        "additionalProperties": False,
        "properties": {
            "scenario": {"type": "string", "enum": list(SCENARIOS)},
            "seed": {"type": "integer", "minimum": 0},
            "methods": {"type": "array", "items": {"type": "string", "enum": list(LEARNED + CLASSICAL)}},
            "xi": {"type": "array", "items": {"type": "number", "minimum": 0, "maximum": 1}, "minItems": 1},
            "values": {"type": "array", "items": {"type": "number"}},
            "system": _object_schema(d["system"]),
            "train": _object_schema(d["train"]),
            "eval": {
                "type": "object", "additionalProperties": False,
                "properties": {"episodes": {"type": "integer", "minimum": 1}, "T": {"type": "integer", "minimum": 1}},
            },
            "transfer": {
                "type": "object", "additionalProperties": False,
                "properties": {"beta": {"type": "number", "exclusiveMinimum": 0}},
            },
            "checkpoint_dir": {"type": "string"},
            "timing": {"type": "boolean"},
            "preset": {"type": "string", "enum": ["table2", "desk"]},
        },
    }


def merge(base: dict, patch: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in patch.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def parse_override(text: str) -> tuple[list[str], object]:
    """``"train.gamma=0.2"`` -> ``(["train", "gamma"], 0.2)``; the value is
    read as JSON when possible, otherwise kept as a string."""
    if "=" not in text:
        raise ConfigError(f"override {text!r} is not of the form key=value")
    key, raw = text.split("=", 1)
    path = [p for p in key.strip().split(".") if p]
    if not path:
        raise ConfigError(f"override {text!r} has an empty key")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return path, value


def apply_overrides(config: dict, overrides) -> dict:
    out = copy.deepcopy(config)
    for text in overrides or ():
        path, value = parse_override(text)
        node = out
        for p in path[:-1]:
            if not isinstance(node.get(p), dict):
                raise ConfigError(f"override {text!r}: {p!r} is not a section")
            node = node[p]
        node[path[-1]] = value
    return out


def validate(config: dict) -> dict:
    """Type-check against the schema, then build the typed configs once so
    value errors surface before any computation."""
    try:
        jsonschema.validate(config, schema())
    except jsonschema.ValidationError as exc:
        where = ".".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"invalid config at {where}: {exc.message}") from None
    try:
        train_config(config)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"invalid config: {exc}") from None
    return config


def resolve(doc: dict | None = None, overrides=(), seed: int | None = None) -> dict:
    """Defaults, then an optional preset, then ``doc``, then overrides."""
    doc = dict(doc or {})
    if "manifest_version" in doc:
        doc = dict(doc["config"])
    cfg = default_config()
    if doc.get("preset") == "desk":
        cfg = merge(cfg, desk_overrides())
    cfg = merge(cfg, doc)
    cfg = apply_overrides(cfg, overrides)
    if seed is not None:
        cfg["seed"] = seed
    return validate(cfg)


def load(path, overrides=(), seed=None) -> dict:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"config file not found: {path}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return resolve(doc, overrides, seed)


def system_config(config: dict, **changes) -> SystemConfig:
    return SystemConfig(**{**config["system"], **changes})


def train_config(config: dict, system: SystemConfig | None = None, **changes) -> TrainConfig:
    t = dict(config["train"])
    for k in ("modes_laps", "modes_haps"):
        t[k] = tuple(t[k])
    t["seed"] = config["seed"]
    t.update(changes)
    return TrainConfig(system=system or system_config(config), **t)
