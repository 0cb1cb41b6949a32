"""Experiment configuration: JSON schema, loading, overrides, digests."""

from __future__ import annotations

import copy
import hashlib
import json
from importlib import resources
from pathlib import Path as FsPath
from typing import Any

import jsonschema

SCHEMA_VERSION = "1"
MODES = ("expect", "choquet", "simulate", "cluster", "schedule", "acceptance")


class ConfigError(ValueError):
    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field
        self.message = message

    def to_dict(self) -> dict:
        return {"type": "config", "field": self.field, "message": self.message}


_FUNCTION = {
    "type": "object",
    "required": ["name"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "arity": {"type": "integer", "minimum": 1},
        "terms": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["coef", "powers"],
                "additionalProperties": False,
                "properties": {
                    "coef": {"type": "number"},
                    "powers": {"type": "array", "items": {"type": "integer", "minimum": 0}},
                },
            },
        },
        "index": {"type": "integer", "minimum": 0},
        "value": {"type": "number"},
        "a": {"type": "number"},
        "b": {"type": "number"},
    },
}

_MEMBER = {
    "type": "object",
    "required": ["kind"],
    "oneOf": [
        {
            "properties": {
                "kind": {"const": "atoms"},
                "points": {"type": "array", "minItems": 1, "items": {"type": "number"}},
                "weights": {"type": "array", "minItems": 1, "items": {"type": "number", "exclusiveMinimum": 0}},
            },
            "required": ["kind", "points", "weights"],
            "additionalProperties": False,
        },
        {
            "properties": {"kind": {"const": "uniform"}, "a": {"type": "number"}, "b": {"type": "number"}},
            "required": ["kind", "a", "b"],
            "additionalProperties": False,
        },
        {
            "properties": {
                "kind": {"const": "gaussian"},
                "mean": {"type": "number"},
                "sd": {"type": "number", "exclusiveMinimum": 0},
            },
            "required": ["kind", "mean", "sd"],
            "additionalProperties": False,
        },
    ],
}

SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["mode"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "mode": {"enum": list(MODES)},
        "ambiguity": {"type": "array", "minItems": 1, "items": _MEMBER},
        "function": _FUNCTION,
        "nested": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "nodes": {"type": "integer", "minimum": 4},
                "tol": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "target": {
            "type": "object",
            "required": ["kind"],
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["constant", "finite_dim", "oscillating"]},
                "value": {"type": "number"},
                "phi": _FUNCTION,
                "phi_lo": _FUNCTION,
                "phi_hi": _FUNCTION,
                "blocks": {"type": "integer", "minimum": 1},
                "prefix": {"type": "number"},
            },
        },
        "baseline_member": {"type": "integer", "minimum": 0},
        "n": {"type": "integer", "minimum": 1},
        "num_seeds": {"type": "integer", "minimum": 1},
        "master_seed": {"type": "integer", "minimum": 0, "maximum": 2 ** 64 - 1},
        "tol": {"type": "number", "exclusiveMinimum": 0},
        "tail_fraction": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "quota": {"type": "number", "minimum": 0, "maximum": 1},
        "stride": {"type": "integer", "minimum": 1},
        "emit_csv": {"type": "boolean"},
        "out": {"type": "string"},
        "workers": {"type": "integer", "minimum": 1},
        "calibration_buckets": {"type": "integer", "minimum": 1},
        "max_path_length": {"type": "integer", "minimum": 1},
        "criteria": {"type": "array", "items": {"type": "integer", "minimum": 1, "maximum": 10}},
    },
}

DEFAULTS: dict[str, Any] = {
    "schema_version": SCHEMA_VERSION,
    "master_seed": 0,
    "num_seeds": 1,
    "tol": 0.02,
    "tail_fraction": 0.5,
    "quota": 1.0,
    "stride": 100,
    "emit_csv": False,
    "workers": 1,
    "calibration_buckets": 20,
}

_MODE_REQUIRES = {
    "expect": ("ambiguity", "function"),
    "choquet": ("ambiguity", "function"),
    "simulate": ("ambiguity", "n"),
    "cluster": ("ambiguity", "target"),
    "schedule": ("target",),
    "acceptance": (),
}


def _field_path(err: jsonschema.ValidationError) -> str:
    parts = [str(p) for p in err.absolute_path]
    return ".".join(parts) if parts else "<root>"


def _best_error(err: jsonschema.ValidationError) -> jsonschema.ValidationError:
    # oneOf failures: report the branch matching the declared member kind
    if err.validator == "oneOf" and err.context:
        kind = err.instance.get("kind") if isinstance(err.instance, dict) else None
        for sub in err.context:
            branch = err.validator_value[sub.schema_path[0]]
            if branch.get("properties", {}).get("kind", {}).get("const") == kind and sub.validator != "const":
                return sub
    return jsonschema.exceptions.best_match([err]) or err


def validate(cfg: dict) -> dict:
    """Schema-check ``cfg`` and fill defaults; raises :class:`ConfigError`."""
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(cfg), key=lambda e: list(e.absolute_path))
    if errors:
        err = _best_error(errors[0])
        path = _field_path(err)
        if err.validator == "additionalProperties":
            extra = sorted(set(err.instance) - set(err.schema.get("properties", {})))
            if extra:
                path = extra[0] if path == "<root>" else f"{path}.{extra[0]}"
        raise ConfigError(path, err.message)
    out = copy.deepcopy(DEFAULTS)
    out.update(copy.deepcopy(cfg))
    for key in _MODE_REQUIRES[out["mode"]]:
        if key not in out:
            raise ConfigError(key, f"required for mode {out['mode']!r}")
    return out


def parse_override(item: str) -> tuple[list[str], Any]:
    if "=" not in item:
        raise ConfigError(item, "override must look like key=value")
    key, raw = item.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip().split("."), value


def apply_overrides(cfg: dict, overrides: list[str]) -> dict:
    out = copy.deepcopy(cfg)
    for item in overrides:
        keys, value = parse_override(item)
        node = out
        for k in keys[:-1]:
            if isinstance(node, list):
                node = node[int(k)]
            else:
                node = node.setdefault(k, {})
        last = keys[-1]
        if isinstance(node, list):
            node[int(last)] = value
        else:
            node[last] = value
    return out


def canonical_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def digest(obj: Any) -> str:
    return hashlib.sha256(canonical_json(obj).encode("utf-8")).hexdigest()


def shipped_configs() -> list[str]:
    root = resources.files("sublinlaw") / "configs"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def load_config(path: str) -> dict:
    """Read a config file; a bare name resolves to a shipped config."""
    p = FsPath(path)
    if p.exists():
        text = p.read_text()
    else:
        res = resources.files("sublinlaw") / "configs" / f"{path}.json"
        if not res.is_file():
            raise ConfigError("config", f"no such file or shipped config: {path}")
        text = res.read_text()
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"invalid JSON: {exc}") from None
    if not isinstance(cfg, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    return cfg
