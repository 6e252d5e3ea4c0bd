"""Application settings from a ``key = value`` file.

The file named by ``CLAUSE_FORGE_CONFIG`` is read when set. Command-line
flags override the file, and the file overrides the built-in defaults.
Blank lines and lines starting with ``#`` are ignored.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Any, Mapping

ENV_VAR = "CLAUSE_FORGE_CONFIG"


class ConfigError(ValueError):
    pass


_BOOL = {"1": True, "true": True, "yes": True, "on": True, "0": False, "false": False, "no": False, "off": False}


@dataclass(frozen=True)
class AppConfig:
    rules: str = "default"
    model: str | None = None
    format: str = "json"
    seed: int = 0
    expand: bool = True
    log_level: str = "WARNING"
    syntax_provider: str = "heuristic"
    epochs: int = 25
    learning_rate: float = 0.1
    l2: float = 1e-4
    optimizer: str = "sgd"

    def merged(self, overrides: Mapping[str, Any]) -> AppConfig:
        """Copy with every non-``None`` override applied."""
        known = {f.name for f in fields(self)}
        return replace(self, **{k: v for k, v in overrides.items() if k in known and v is not None})


def _coerce(key: str, raw: str, default: Any, kind: str) -> Any:
    if kind == "bool":
        try:
            return _BOOL[raw.lower()]
        except KeyError:
            raise ConfigError(f"{key}: expected a boolean, got {raw!r}") from None
    if kind == "int":
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"{key}: expected an integer, got {raw!r}") from None
    if kind == "float":
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"{key}: expected a number, got {raw!r}") from None
    if raw.lower() in ("", "none") and default is None:
        return None
    return raw


_KINDS = {"seed": "int", "epochs": "int", "expand": "bool", "learning_rate": "float", "l2": "float"}


def parse(text: str, source: str = "<config>") -> dict[str, Any]:
    out: dict[str, Any] = {}
    defaults = AppConfig()
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{source}:{lineno}: expected key = value")
        key = key.strip().replace("-", "_")
        if not hasattr(defaults, key):
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        try:
            out[key] = _coerce(key, value.strip(), getattr(defaults, key), _KINDS.get(key, "str"))
        except ConfigError as exc:
            raise ConfigError(f"{source}:{lineno}: {exc}") from None
    return out


def load(path: str | os.PathLike | None = None, environ: Mapping[str, str] | None = None) -> AppConfig:
    """Defaults, overlaid with ``path`` or the file named by the environment."""
    env = os.environ if environ is None else environ
    if path is None:
        path = env.get(ENV_VAR) or None
    if path is None:
        return AppConfig()
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return AppConfig().merged(parse(text, str(path)))
