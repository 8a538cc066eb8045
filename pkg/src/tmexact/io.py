"""Run directories: atomic file writes, JSON config files and manifests."""

from __future__ import annotations

import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

CONFIG_VERSION = 1


def atomic_write(path, text: str) -> Path:
    """Write ``text`` to a temp file in the target directory, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, (set, frozenset)):
        return sorted(o)
    if hasattr(o, "to_dict"):
        return o.to_dict()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def _finite(o):
    """Replace non-finite floats by strings so the output is strict JSON."""
    if isinstance(o, float) and not math.isfinite(o):
        return "nan" if math.isnan(o) else ("inf" if o > 0 else "-inf")
    if isinstance(o, dict):
        return {k: _finite(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_finite(v) for v in o]
    return o


def dumps(obj) -> str:
    return json.dumps(_finite(json.loads(json.dumps(obj, default=_default, allow_nan=True))),
                      indent=2, sort_keys=False) + "\n"


def write_json(path, obj) -> Path:
    return atomic_write(path, dumps(obj))


class ConfigError(ValueError):
    """Bad config file or parameter; reported as a usage error."""


def load_config(path, command: str, allowed: set) -> dict:
    """Read a JSON config for ``command``; unknown keys and version mismatches are errors.

    Accepted layouts: a flat object of parameters, or ``{"version": 1,
    "<command>": {...}}``.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    version = raw.get("version", CONFIG_VERSION)
    if version != CONFIG_VERSION:
        raise ConfigError(f"unsupported config version {version!r} (expected {CONFIG_VERSION})")
    body = {k: v for k, v in raw.items() if k != "version"}
    if command in body and isinstance(body[command], dict):
        extra = set(body) - {command}
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        body = body[command]
    body = {k.replace("-", "_"): v for k, v in body.items()}
    unknown = set(body) - allowed
    if unknown:
        raise ConfigError(f"unknown config keys for '{command}': {sorted(unknown)}")
    return body


@dataclass
class Manifest:
    command: str
    version: str
    argv: list
    config: dict
    seed: object = None
    inputs: list = field(default_factory=list)
    outputs: list = field(default_factory=list)
    checks: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def to_dict(self) -> dict:
        return {"command": self.command, "toolkit_version": self.version, "argv": self.argv,
                "seed": self.seed, "config": self.config, "inputs": self.inputs,
                "outputs": self.outputs, "checks": self.checks, "passed": self.passed}

    def write(self, out_dir) -> Path:
        return write_json(Path(out_dir) / "manifest.json", self.to_dict())
