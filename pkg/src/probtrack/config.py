"""Tracker config files and run manifests.

A config file holds ``key = value`` lines, one per :class:`TrackerConfig`
field; ``#`` starts a comment and values are ``true``/``false``, integers
or floats. Unlisted keys keep their defaults, unknown keys are an error::

    # relaxed matching only
    enable_kfcov = false
    enable_ellipse = false
    tau1 = 0.65

A manifest is a JSON record of one CLI run: the command, its parameters,
the full effective config, the seed, and the sha256 of every input and
output file. It carries no timestamps or host details, so the same run
always produces the same manifest.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

from . import __version__
from .formats import FormatError, atomic_write, read_lines
from .tracker import TrackerConfig


def _parse_value(text: str):
    low = text.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    try:
        return int(text)
    except ValueError:
        return float(text)


def parse_config(text: str, path=None) -> dict:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip() or not value.strip():
            raise FormatError(f"expected 'key = value', got {raw!r}", path, lineno)
        try:
            values[key.strip()] = _parse_value(value.strip())
        except ValueError:
            raise FormatError(f"bad value {value.strip()!r}", path, lineno) from None
    return values


def _coerce(key: str, value, default):
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise FormatError(f"{key} expects true or false, got {value!r}")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise FormatError(f"{key} expects an integer, got {value!r}")
        return value
    if isinstance(value, bool):
        raise FormatError(f"{key} expects a number, got {value!r}")
    return float(value)


def config_from_values(values: dict, base: TrackerConfig | None = None, path=None) -> TrackerConfig:
    """Overlay ``values`` on ``base`` (defaults if omitted) with type checks."""
    merged = (base or TrackerConfig()).to_dict()
    unknown = sorted(set(values) - set(merged))
    if unknown:
        raise FormatError(f"unknown config keys {unknown}", path)
    try:
        merged.update({k: _coerce(k, v, merged[k]) for k, v in values.items()})
    except FormatError as e:
        raise FormatError(str(e), path) from None
    try:
        return TrackerConfig.from_dict(merged)
    except (TypeError, ValueError) as e:
        raise FormatError(str(e), path) from None


def load_config(path, base: TrackerConfig | None = None) -> TrackerConfig:
    values = parse_config("\n".join(read_lines(path)), path)
    return config_from_values(values, base, path)


def dump_config(cfg: TrackerConfig) -> str:
    lines = []
    for key, value in cfg.to_dict().items():
        text = str(value).lower() if isinstance(value, bool) else repr(value)
        lines.append(f"{key} = {text}")
    return "\n".join(lines) + "\n"


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def file_record(path) -> dict:
    return {"path": str(path), "sha256": sha256_file(path)}


def make_manifest(command: str, params: dict, inputs: dict, outputs: dict,
                  config: TrackerConfig | None = None, seed: int | None = None) -> dict:
    """Manifest dict; ``inputs`` and ``outputs`` map a role name to a path."""
    return {
        "tool": "probtrack",
        "version": __version__,
        "command": command,
        "seed": seed,
        "config": config.to_dict() if config is not None else None,
        "params": params,
        "inputs": {k: file_record(p) for k, p in sorted(inputs.items())},
        "outputs": {k: file_record(p) for k, p in sorted(outputs.items())},
    }


def manifest_text(manifest: dict) -> str:
    return json.dumps(manifest, indent=2, sort_keys=True) + "\n"


def write_manifest(path, manifest: dict) -> None:
    atomic_write(path, manifest_text(manifest))


def load_manifest(path) -> dict:
    text = "\n".join(read_lines(path))
    try:
        m = json.loads(text)
    except json.JSONDecodeError as e:
        raise FormatError(f"invalid JSON: {e.msg}", path, e.lineno) from None
    for key in ("command", "params", "inputs", "outputs"):
        if not isinstance(m, dict) or key not in m:
            raise FormatError(f"manifest is missing {key!r}", path)
    return m
