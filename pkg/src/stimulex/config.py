"""Flat key=value run configuration.

A config file holds one ``key=value`` pair per line ('#' comments and blank
lines allowed). Keys may be scoped to a command with a dot, e.g.
``train.seed=7``; a scoped key beats the bare key, and a command line flag
beats both. List values are comma-joined.
"""

from __future__ import annotations

import hashlib
import os
from pathlib import Path


def parse_config(text: str, origin: str = "<config>") -> dict[str, str]:
    items: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        key, sep, value = stripped.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ValueError(f"{origin}: line {lineno}: expected key=value")
        if key in items:
            raise ValueError(f"{origin}: line {lineno}: duplicate key {key!r}")
        items[key] = value.strip()
    return items


def load_config(path: str | os.PathLike) -> dict[str, str]:
    return parse_config(Path(path).read_text(encoding="utf-8"), origin=str(path))


def resolve(config: dict[str, str], command: str, key: str) -> str | None:
    scoped = f"{command}.{key}"
    if scoped in config:
        return config[scoped]
    return config.get(key)


def parse_bool(value: str) -> bool:
    lowered = value.lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {value!r}")


def parse_list(value: str) -> list[str]:
    return [part.strip() for part in value.split(",") if part.strip()]


def file_sha256(path: str | os.PathLike) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def render_manifest(
    command: str,
    config_path: str | None,
    inputs: dict[str, str | os.PathLike],
    outputs: dict[str, str | os.PathLike],
    settings: dict[str, str] | None = None,
) -> str:
    """Record what a run read and wrote, with content digests.

    Deliberately carries no timestamps or host details so reruns of the
    same command on the same data produce an identical file.
    """
    lines = [f"command={command}"]
    if config_path is not None:
        lines.append(f"config={config_path}")
        lines.append(f"config_sha256={file_sha256(config_path)}")
    for key in sorted(settings or {}):
        lines.append(f"setting.{key}={settings[key]}")
    for name in sorted(inputs):
        path = os.fspath(inputs[name])
        lines.append(f"input.{name}={path}")
        lines.append(f"input.{name}.sha256={file_sha256(path)}")
    for name in sorted(outputs):
        path = os.fspath(outputs[name])
        lines.append(f"output.{name}={path}")
        lines.append(f"output.{name}.sha256={file_sha256(path)}")
    return "\n".join(lines) + "\n"
