"""Run configuration: JSON schema, defaults and builders for the numerical objects."""

from __future__ import annotations

import copy
import hashlib
import json
from pathlib import Path

import jsonschema

from .fbs import HurstPair
from .geometry import ChristoffelTable, DiffusionCoeff
from .lp import FAMILIES
from .solver import SolverConfig
from .spectral import Grid2

DEFAULTS = {
    "grid": {"half_width": 16.0, "n": 512},
    "hurst": {"h1": 0.85, "h2": 0.85},
    "norms": {"s": 0.8, "delta": 0.8, "family": "mixed"},
    "christoffel": {"degree": 2, "amplitude": 0.1, "seed": 7, "entries": None},
    "sigma": {"kind": "sin_cos", "scale": 0.1, "offset": [0.0, 0.0]},
    "solver": {
        "r0": 0.5,
        "lam": None,
        "picard_tol": 1e-8,
        "max_iters": 50,
        "lambda_cap": 65536.0,
        "derivative": "central",
        "data": {"amplitude": 0.3, "velocity": 0.2, "width": 2.0},
        "centers": [0.0, 0.0625],
        "glue_tol": 1e-5,
    },
    "output": {"save_fields": True, "ensemble": 8, "workers": 1},
}

_open_unit = {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1}
_exponent = {"type": "number", "exclusiveMinimum": 0.75, "exclusiveMaximum": 1}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "base_seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "grid": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "half_width": {"type": "number", "exclusiveMinimum": 0},
                "n": {"enum": [16, 32, 64, 128, 256, 512, 1024, 2048]},
            },
        },
        "hurst": {
            "type": "object", "additionalProperties": False,
            "properties": {"h1": _open_unit, "h2": _open_unit},
        },
        "norms": {
            "type": "object", "additionalProperties": False,
            "properties": {"s": _exponent, "delta": _exponent, "family": {"enum": list(FAMILIES)}},
        },
        "christoffel": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "degree": {"type": "integer", "minimum": 0, "maximum": 6},
                "amplitude": {"type": "number", "minimum": 0},
                "seed": {"type": "integer", "minimum": 0, "maximum": 2**32 - 1},
                "entries": {
                    "type": ["array", "null"],
                    "items": {
                        "type": "object", "additionalProperties": False,
                        "required": ["k", "a", "b", "l", "coeff"],
                        "properties": {
                            "k": {"enum": [1, 2]}, "a": {"enum": [1, 2]}, "b": {"enum": [1, 2]},
                            "l": {"type": "array", "items": {"type": "integer", "minimum": 0},
                                  "minItems": 2, "maxItems": 2},
                            "coeff": {"type": "number"},
                        },
                    },
                },
            },
        },
        "sigma": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["zero", "constant", "sin", "sin_cos", "saturating"]},
                "scale": {"type": "number"},
                "offset": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
            },
        },
        "solver": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "r0": _open_unit,
                "lam": {"type": ["number", "null"], "minimum": 1},
                "picard_tol": {"type": "number", "exclusiveMinimum": 0},
                "max_iters": {"type": "integer", "minimum": 1},
                "lambda_cap": {"type": "number", "minimum": 1},
                "derivative": {"enum": ["central", "spectral"]},
                "data": {
                    "type": "object", "additionalProperties": False,
                    "properties": {
                        "amplitude": {"type": "number"},
                        "velocity": {"type": "number"},
                        "width": {"type": "number", "exclusiveMinimum": 0},
                    },
                },
                "centers": {"type": "array", "items": {"type": "number"}, "minItems": 1},
                "glue_tol": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "output": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "save_fields": {"type": "boolean"},
                "ensemble": {"type": "integer", "minimum": 1},
                "workers": {"type": "integer", "minimum": 1},
            },
        },
    },
}


class ConfigError(ValueError):
    pass


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, val in override.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def validate(doc: dict) -> None:
    try:
        jsonschema.validate(doc, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"invalid configuration at {where}: {exc.message}") from None
    norms = doc.get("norms", {})
    s, delta = norms.get("s", 0.8), norms.get("delta", 0.8)
    if delta > s:
        raise ConfigError(f"invalid configuration at norms: need delta <= s, got s={s}, delta={delta}")


def load_config(path: str | Path | None = None, overrides: dict | None = None) -> dict:
    """Defaults, then the file at ``path``, then ``overrides``; validated at each layer."""
    doc = {}
    if path is not None:
        try:
            doc = json.loads(Path(path).read_text())
        except FileNotFoundError:
            raise ConfigError(f"configuration file {path} does not exist") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"configuration file {path} is not valid JSON: {exc}") from None
        if not isinstance(doc, dict):
            raise ConfigError("configuration must be a JSON object")
    validate(doc)
    merged = _merge(DEFAULTS, doc)
    if overrides:
        merged = _merge(merged, overrides)
    validate(merged)
    return merged


def config_hash(doc: dict) -> str:
    canon = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def build_grid(doc: dict) -> Grid2:
    return Grid2(doc["grid"]["half_width"], doc["grid"]["n"])


def build_hurst(doc: dict) -> HurstPair:
    return HurstPair(doc["hurst"]["h1"], doc["hurst"]["h2"])


def build_table(doc: dict) -> ChristoffelTable:
    c = doc["christoffel"]
    if c.get("entries"):
        return ChristoffelTable.from_entries(c["entries"])
    if c["amplitude"] == 0:
        return ChristoffelTable.flat()
    return ChristoffelTable.random(c["degree"], c["amplitude"], c["seed"])


def build_sigma(doc: dict) -> DiffusionCoeff:
    s = doc["sigma"]
    return DiffusionCoeff(s["kind"], s["scale"], tuple(s["offset"]))


def build_data(doc: dict):
    from .ensembles import gaussian_wave_data

    d = doc["solver"]["data"]
    return gaussian_wave_data(d["amplitude"], d["velocity"], d["width"])


def build_solver_config(doc: dict, seed: int) -> SolverConfig:
    sv = doc["solver"]
    try:
        return SolverConfig(
            s=doc["norms"]["s"], delta=doc["norms"]["delta"], hurst=build_hurst(doc),
            lam=sv["lam"] or 1.0, r0=sv["r0"], grid=build_grid(doc), picard_tol=sv["picard_tol"],
            max_iters=sv["max_iters"], seed=seed, lambda_cap=sv["lambda_cap"], derivative=sv["derivative"],
        )
    except ValueError as exc:
        raise ConfigError(f"invalid solver configuration: {exc}") from None
