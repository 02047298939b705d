"""Plain-text key=value configuration files with content hashing.

Physical constants, scene randomization ranges, and training settings all
live in versioned ``key = value`` files so that every episode and run record
can pin the exact configuration it was produced under. Values are parsed as
int, float, bool, or string; lists are comma-separated.
"""
from __future__ import annotations

import hashlib
from pathlib import Path


class ConfigError(ValueError):
    """Raised for malformed config files or missing required keys."""


def _parse_scalar(raw: str):
    text = raw.strip()
    low = text.lower()
    if low in ("true", "false"):
        return low == "true"
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    return text


def parse_config_text(text: str) -> dict:
    """Parse ``key = value`` lines. '#' starts a comment; blank lines ignored.

    Comma-separated values parse to a list of scalars.
    """
    out: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        if "," in raw:
            out[key] = [_parse_scalar(part) for part in raw.split(",")]
        else:
            out[key] = _parse_scalar(raw)
    return out


def load_config(path: str | Path) -> dict:
    return parse_config_text(Path(path).read_text())


def config_hash(values: dict) -> str:
    """Hash of the canonicalized key/value content, stable across formatting."""
    canon = "\n".join(f"{k}={values[k]!r}" for k in sorted(values))
    return hashlib.sha256(canon.encode()).hexdigest()


def dump_config(values: dict, path: str | Path, header: str = "") -> None:
    lines = []
    if header:
        lines.extend(f"# {line}" for line in header.splitlines())
    for key in sorted(values):
        val = values[key]
        if isinstance(val, (list, tuple)):
            rendered = ", ".join(str(v) for v in val)
        else:
            rendered = str(val)
        lines.append(f"{key} = {rendered}")
    Path(path).write_text("\n".join(lines) + "\n")
