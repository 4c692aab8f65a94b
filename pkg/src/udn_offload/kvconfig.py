"""Plain-text ``key=value`` files used for scenario configs and experiment plans.

Blank lines and ``#`` comments are ignored. List values are comma-separated.
"""

from __future__ import annotations

import dataclasses
import typing
from pathlib import Path
from typing import Any


class ConfigError(ValueError):
    """Malformed or unknown configuration entry."""


def read_kv(path: str | Path) -> dict[str, str]:
    entries: dict[str, str] = {}
    text = Path(path).read_text()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"{path}:{lineno}: empty key")
        if key in entries:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        entries[key] = value
    return entries


def _coerce(value: str, hint: Any) -> Any:
    origin = typing.get_origin(hint)
    args = typing.get_args(hint)
    if origin is typing.Union:
        non_none = [a for a in args if a is not type(None)]
        if value.lower() in ("", "none") and len(non_none) < len(args):
            return None
        return _coerce(value, non_none[0])
    if origin in (tuple, list):
        items = [v.strip() for v in value.split(",") if v.strip()]
        if origin is tuple and args and args[-1] is not Ellipsis:
            if len(items) != len(args):
                raise ConfigError(f"expected {len(args)} values, got {value!r}")
            return tuple(_coerce(v, a) for v, a in zip(items, args))
        inner = args[0] if args else str
        seq = [_coerce(v, inner) for v in items]
        return tuple(seq) if origin is tuple else seq
    if hint is bool:
        if value.lower() in ("1", "true", "yes", "on"):
            return True
        if value.lower() in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"not a boolean: {value!r}")
    if hint is int:
        return int(float(value)) if "e" in value.lower() else int(value)
    if hint is float:
        return float(value)
    if hint is str:
        return value
    raise ConfigError(f"unsupported field type {hint!r}")


def coerce_fields(cls: type, entries: dict[str, str]) -> dict[str, Any]:
    """Convert string entries into typed keyword arguments for dataclass ``cls``.

    Unknown keys raise :class:`ConfigError`.
    """
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls) if f.init}
    unknown = sorted(set(entries) - names)
    if unknown:
        raise ConfigError(f"unknown key(s) for {cls.__name__}: {', '.join(unknown)}")
    out = {}
    for key, value in entries.items():
        try:
            out[key] = _coerce(value, hints[key])
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}") from exc
    return out
