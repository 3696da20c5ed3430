"""Persisted dashboard configuration: a master URI plus an ordered widget list.

One JSON document per configuration, matching the connect/configure workflow:
pick a master, add widgets, save under a name, load it back later. Loading
validates eagerly so a config that parses is a config that runs.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field, fields
from pathlib import Path

from .master import MasterUri

CONFIG_VERSION = 1
WIDGET_KINDS = ("joystick", "gridmap", "logger")

DEFAULT_MAX_LINEAR = 0.5  # m/s, safe indoor teleop
DEFAULT_MAX_ANGULAR = 1.5  # rad/s
DEFAULT_PUBLISH_RATE_HZ = 10.0
DEFAULT_MIN_LEVEL = 2  # INFO


@dataclass(frozen=True)
class Violation:
    path: str
    message: str

    def __str__(self) -> str:
        return f"{self.path}: {self.message}"


class ConfigError(ValueError):
    def __init__(self, violations: list[Violation] | str):
        if isinstance(violations, str):
            violations = [Violation("", violations)]
        super().__init__("; ".join(str(v) for v in violations))
        self.violations = violations


@dataclass(frozen=True)
class JoystickWidget:
    id: str
    topic: str
    max_linear: float = DEFAULT_MAX_LINEAR
    max_angular: float = DEFAULT_MAX_ANGULAR
    publish_rate_hz: float = DEFAULT_PUBLISH_RATE_HZ

    kind = "joystick"


@dataclass(frozen=True)
class GridmapWidget:
    id: str
    topic: str

    kind = "gridmap"


@dataclass(frozen=True)
class LoggerWidget:
    id: str
    topic: str
    min_level: int = DEFAULT_MIN_LEVEL

    kind = "logger"


WidgetConfig = JoystickWidget | GridmapWidget | LoggerWidget

_WIDGET_CLASSES = {"joystick": JoystickWidget, "gridmap": GridmapWidget, "logger": LoggerWidget}


@dataclass(frozen=True)
class AppConfig:
    name: str
    master_uri: MasterUri
    widgets: tuple[WidgetConfig, ...] = ()
    version: int = CONFIG_VERSION


def widget_to_dict(widget: WidgetConfig) -> dict:
    out = {"id": widget.id, "kind": widget.kind, "topic": widget.topic}
    for f in fields(widget):
        if f.name not in out:
            out[f.name] = getattr(widget, f.name)
    return out


def widget_from_dict(raw: dict, path: str) -> WidgetConfig:
    if not isinstance(raw, dict):
        raise ConfigError([Violation(path, "widget must be an object")])
    kind = raw.get("kind")
    cls = _WIDGET_CLASSES.get(kind)
    if cls is None:
        raise ConfigError([Violation(
            f"{path}.kind", f"unknown widget kind {kind!r}; supported: {', '.join(WIDGET_KINDS)}"
        )])
    known = {f.name for f in fields(cls)}
    kwargs = {k: v for k, v in raw.items() if k in known}
    missing = {"id", "topic"} - set(kwargs)
    if missing:
        raise ConfigError([Violation(path, f"missing required field(s): {', '.join(sorted(missing))}")])
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError([Violation(path, str(exc))]) from None


def config_to_dict(cfg: AppConfig) -> dict:
    return {
        "version": cfg.version,
        "name": cfg.name,
        "master_uri": cfg.master_uri.url,
        "widgets": [widget_to_dict(w) for w in cfg.widgets],
    }


def config_from_dict(raw: dict) -> AppConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config root must be an object")
    try:
        master_uri = MasterUri.parse(str(raw.get("master_uri", "")))
    except ValueError as exc:
        raise ConfigError([Violation("master_uri", str(exc))]) from None
    widgets = raw.get("widgets", [])
    if not isinstance(widgets, list):
        raise ConfigError([Violation("widgets", "must be a list")])
    cfg = AppConfig(
        name=str(raw.get("name", "")),
        master_uri=master_uri,
        widgets=tuple(widget_from_dict(w, f"widgets[{i}]") for i, w in enumerate(widgets)),
        version=raw.get("version", CONFIG_VERSION),
    )
    violations = validate_config(cfg)
    if violations:
        raise ConfigError(violations)
    return cfg


def validate_config(cfg: AppConfig) -> list[Violation]:
    """Empty list iff every invariant holds; each violation names its field."""
    out: list[Violation] = []
    if cfg.version != CONFIG_VERSION:
        out.append(Violation("version", f"must be {CONFIG_VERSION}, got {cfg.version!r}"))
    if not cfg.name:
        out.append(Violation("name", "must be non-empty"))
    seen_ids: set[str] = set()
    for i, w in enumerate(cfg.widgets):
        prefix = f"widgets[{i}]"
        if not w.id:
            out.append(Violation(f"{prefix}.id", "must be non-empty"))
        elif w.id in seen_ids:
            out.append(Violation(f"{prefix}.id", f"duplicate widget id {w.id!r}"))
        seen_ids.add(w.id)
        if not w.topic.startswith("/"):
            out.append(Violation(f"{prefix}.topic", f"topic must start with '/': {w.topic!r}"))
        if isinstance(w, JoystickWidget):
            for name in ("max_linear", "max_angular", "publish_rate_hz"):
                out.extend(_positive_finite(getattr(w, name), f"{prefix}.{name}"))
        elif isinstance(w, LoggerWidget):
            if not isinstance(w.min_level, int) or isinstance(w.min_level, bool) or not 1 <= w.min_level <= 16:
                out.append(Violation(f"{prefix}.min_level", f"must be an integer in [1, 16], got {w.min_level!r}"))
    return out


def _positive_finite(value, path: str) -> list[Violation]:
    import math

    if not isinstance(value, (int, float)) or isinstance(value, bool):
        return [Violation(path, f"must be a number, got {type(value).__name__}")]
    if not math.isfinite(value) or value <= 0:
        return [Violation(path, f"must be finite and positive, got {value!r}")]
    return []


def load_config(path: str | Path) -> AppConfig:
    """Parse and validate one config file; errors name the offending field."""
    try:
        raw = json.loads(Path(path).read_text("utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON: {exc}") from None
    return config_from_dict(raw)


def save_config(cfg: AppConfig, path: str | Path) -> None:
    """Atomic write: refuse invalid configs, then temp file + rename so a crash
    mid-save leaves the previous file intact."""
    violations = validate_config(cfg)
    if violations:
        raise ConfigError(violations)
    path = Path(path)
    payload = json.dumps(config_to_dict(cfg), indent=2) + "\n"
    fd, tmp_name = tempfile.mkstemp(dir=path.parent or Path("."), prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(payload)
        os.replace(tmp_name, path)
    except BaseException:
        try:
            os.unlink(tmp_name)
        except OSError:
            pass
        raise
