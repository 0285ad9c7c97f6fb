"""key=value config files and typed binding onto dataclasses.

Configs are flat text files: one ``key = value`` per line, ``#`` comments.
Values are coerced by the target dataclass field type. Unknown keys are
rejected rather than ignored so typos fail loudly. Every pipeline run
writes the resolved config next to its outputs via :func:`write_config`.
"""

from __future__ import annotations

import dataclasses
from pathlib import Path
from typing import Any, Mapping, Type, TypeVar

from .errors import ConfigError

T = TypeVar("T")


def parse_kv_text(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines; later duplicates win."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        out[key] = value.strip()
    return out


def read_kv_file(path: str | Path) -> dict[str, str]:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    return parse_kv_text(path.read_text())


def _coerce(raw: str, typ: Any, key: str) -> Any:
    try:
        if typ is bool:
            low = raw.lower()
            if low in ("true", "1", "yes", "on"):
                return True
            if low in ("false", "0", "no", "off"):
                return False
            raise ValueError(raw)
        if typ is int:
            return int(raw)
        if typ is float:
            return float(raw)
        if typ is str:
            return raw
    except ValueError as exc:
        raise ConfigError(f"key {key!r}: cannot parse {raw!r} as {typ.__name__}") from exc
    raise ConfigError(f"key {key!r}: unsupported config field type {typ!r}")


def bind(cls: Type[T], values: Mapping[str, str], base: T | None = None) -> T:
    """Build ``cls`` from defaults (or ``base``) overridden by ``values``.

    ``cls`` must be a dataclass of scalar fields. Unknown keys raise.
    """
    if not dataclasses.is_dataclass(cls):
        raise TypeError(f"{cls!r} is not a dataclass")
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = sorted(set(values) - set(fields))
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
    kwargs: dict[str, Any] = {}
    if base is not None:
        kwargs.update(dataclasses.asdict(base))
    for key, raw in values.items():
        typ = fields[key].type
        if isinstance(typ, str):  # from __future__ annotations
            typ = {"int": int, "float": float, "str": str, "bool": bool}.get(typ, str)
        kwargs[key] = _coerce(raw, typ, key)
    return cls(**kwargs)  # type: ignore[return-value]


def parse_overrides(pairs: list[str]) -> dict[str, str]:
    """Parse ``--set key=value`` style override arguments."""
    out: dict[str, str] = {}
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError(f"override must be key=value, got {pair!r}")
        key, value = pair.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def format_config(obj: Any) -> str:
    """Render a dataclass as a key=value file (stable field order)."""
    if not dataclasses.is_dataclass(obj):
        raise TypeError(f"{obj!r} is not a dataclass")
    lines = []
    for f in dataclasses.fields(obj):
        value = getattr(obj, f.name)
        if isinstance(value, float):
            value = repr(value)
        lines.append(f"{f.name} = {value}")
    return "\n".join(lines) + "\n"


def write_config(obj: Any, path: str | Path) -> None:
    Path(path).write_text(format_config(obj))


def load_config(cls: Type[T], path: str | Path | None, overrides: Mapping[str, str] | None = None) -> T:
    """Defaults <- optional file <- optional overrides."""
    values: dict[str, str] = {}
    if path is not None:
        values.update(read_kv_file(path))
    if overrides:
        values.update(overrides)
    return bind(cls, values)
