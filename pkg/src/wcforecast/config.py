"""Flat ``key = value`` run configuration.

Precedence: command-line overrides, then the config file, then defaults.
Grid cells use ``grid.<family>.<param> = v1, v2``; column mappings use
``schema.players.<field> = column`` and ``schema.matches.<field> = column``.
"""
from __future__ import annotations

import dataclasses
import datetime as dt
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from .dataset import Context
from .errors import ConfigError
from .models import FAMILIES, REGISTRY
from .training import DEFAULT_GRIDS, PipelineConfig, TrainConfig


@dataclass
class RunConfig:
    players: str | None = None
    matches: str | None = None
    aliases: str | None = None
    bracket: str | None = None
    output_dir: str = "out"
    delimiter: str | None = None
    seed: int | None = None
    year_min: int = 2015
    year_max: int = 2023
    completeness_min: float = 0.5
    corr_max: float = 0.95
    relevant_attributes: list | None = None
    fallback_depth: int = 2
    train_until: dt.date | None = None
    test_fraction: float = 0.2
    split_mode: str = "random"
    k_folds: int = 5
    stratified: bool = False
    pca: str = "auto"
    pca_target: float = 0.95
    scaler_eps: float = 1e-8
    goal_threshold: int = 4
    baseline_m: int | None = None
    baseline_contexts: list | None = None
    eval_start: dt.date | None = None
    eval_end: dt.date | None = None
    eval_contexts: list | None = None
    grids: dict = field(default_factory=lambda: {f: dict(g) for f, g in DEFAULT_GRIDS.items()})
    player_schema: dict = field(default_factory=dict)
    match_schema: dict = field(default_factory=dict)

    def pipeline(self) -> PipelineConfig:
        options = {"auto": (None, self.pca_target), "on": (self.pca_target,), "off": (None,)}
        return PipelineConfig(pca_options=options[self.pca], scaler_eps=self.scaler_eps)

    def train_config(self) -> TrainConfig:
        return TrainConfig(k_folds=self.k_folds, stratified=self.stratified, pipeline=self.pipeline())

    def contexts(self, which: str) -> frozenset[Context] | None:
        values = getattr(self, which)
        return None if values is None else frozenset(Context(v) for v in values)

    def require(self, *names: str) -> None:
        for name in names:
            if getattr(self, name) is None:
                raise ConfigError(f"config key {name!r} is required for this command")

    def check_paths(self, *names: str) -> None:
        for name in names:
            value = getattr(self, name)
            if value is not None and not Path(value).exists():
                raise ConfigError(f"{name}: path does not exist: {value}")

    def snapshot(self) -> dict[str, str]:
        out = {}
        for f in dataclasses.fields(self):
            if f.name in ("grids", "player_schema", "match_schema"):
                continue
            out[f.name] = _render(getattr(self, f.name))
        for family, space in self.grids.items():
            for param, values in space.items():
                out[f"grid.{family}.{param}"] = _render(values)
        for key, value in self.player_schema.items():
            out[f"schema.players.{key}"] = value
        for key, value in self.match_schema.items():
            out[f"schema.matches.{key}"] = value
        return dict(sorted(out.items()))


KEYS = {f.name for f in dataclasses.fields(RunConfig)} - {"grids", "player_schema", "match_schema"}


def _render(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, (list, tuple)):
        return ", ".join(_render(v) for v in value)
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, dt.date):
        return value.isoformat()
    return str(value)


def _scalar(text: str):
    low = text.strip().lower()
    if low in ("none", "null", ""):
        return None
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text.strip()


def _coerce(name: str, text: str):
    ftype = {f.name: f.type for f in dataclasses.fields(RunConfig)}[name]
    raw = text.strip()
    if raw.lower() in ("none", "null") and "None" in str(ftype):
        return None
    try:
        if "dt.date" in str(ftype):
            return dt.date.fromisoformat(raw)
        if ftype.startswith("bool"):
            if raw.lower() in ("1", "yes", "true", "on"):
                return True
            if raw.lower() in ("0", "no", "false", "off"):
                return False
            raise ValueError(raw)
        if ftype.startswith("int"):
            return int(raw)
        if ftype.startswith("float"):
            return float(raw)
        if ftype.startswith("list"):
            return [v.strip() for v in raw.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"bad value for {name!r}: {text!r}") from None
    return raw


def _apply(cfg: RunConfig, key: str, value: str) -> None:
    key = key.strip()
    if key.startswith("grid."):
        parts = key.split(".")
        if len(parts) != 3 or parts[1] not in FAMILIES:
            raise ConfigError(f"bad grid key {key!r} (expected grid.<family>.<param>)")
        family, param = parts[1], parts[2]
        if param not in REGISTRY[family].defaults:
            raise ConfigError(f"{family} has no hyperparameter {param!r}")
        values = [_scalar(v) for v in value.split(",") if v.strip()]
        if not values:
            raise ConfigError(f"{key}: empty value list")
        cfg.grids.setdefault(family, {})[param] = values
        return
    if key.startswith("schema."):
        parts = key.split(".")
        if len(parts) != 3 or parts[1] not in ("players", "matches"):
            raise ConfigError(f"bad schema key {key!r}")
        target = cfg.player_schema if parts[1] == "players" else cfg.match_schema
        target[parts[2]] = value.strip()
        return
    if key not in KEYS:
        raise ConfigError(f"unknown config key {key!r}")
    setattr(cfg, key, _coerce(key, value))


def _validate(cfg: RunConfig) -> None:
    if cfg.pca not in ("auto", "on", "off"):
        raise ConfigError("pca must be auto, on or off")
    if not 0 < cfg.pca_target <= 1:
        raise ConfigError("pca_target must be in (0, 1]")
    if not 0 < cfg.test_fraction < 1:
        raise ConfigError("test_fraction must be in (0, 1)")
    if cfg.split_mode not in ("random", "chronological"):
        raise ConfigError("split_mode must be random or chronological")
    if cfg.k_folds < 2:
        raise ConfigError("k_folds must be at least 2")
    for name in ("baseline_contexts", "eval_contexts"):
        try:
            cfg.contexts(name)
        except ValueError:
            raise ConfigError(f"{name}: unknown context in {getattr(cfg, name)}") from None


def parse_config_text(text: str, source: str = "<config>") -> list[tuple[str, str]]:
    pairs = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        pairs.append((key.strip(), value.strip()))
    return pairs


def load_config(path: str | Path | None = None, overrides: Mapping[str, str] | None = None) -> RunConfig:
    cfg = RunConfig()
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        base = path.parent
        for key, value in parse_config_text(path.read_text(encoding="utf-8"), str(path)):
            _apply(cfg, key, value)
        # Relative data paths in a config file are relative to the file itself.
        for name in ("players", "matches", "aliases", "bracket", "output_dir"):
            value = getattr(cfg, name)
            if value is not None and not Path(value).is_absolute():
                setattr(cfg, name, str(base / value))
    for key, value in (overrides or {}).items():
        _apply(cfg, key, value)
    _validate(cfg)
    return cfg
