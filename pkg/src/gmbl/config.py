"""Flat run configuration shared by the CLI and the experiment scripts."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from .errors import ConfigError
from .optimizer import GmblHyperParams

# config-file spellings that differ from the field name
ALIASES = {"lambda": "lam", "bits": "r"}
_HP_FIELDS = {f.name for f in fields(GmblHyperParams)}


@dataclass
class RunConfig:
    # input: a dataset directory, or synthetic blobs when ``data`` is None
    data: Optional[str] = None
    data_format: Optional[str] = None
    synth_views: int = 3
    synth_clusters: int = 3
    synth_per_cluster: int = 100
    synth_dims: Optional[list] = None  # None -> 10 per view
    synth_noise: float = 0.3
    synth_complementary: bool = False
    # embedding and graph
    normalize: bool = True
    anchors: Optional[int] = None  # None -> min(300, N)
    shared_anchors: bool = True
    kernel_width: Optional[float] = None
    neighbors: int = 6
    lle_reg: float = 1e-3
    # evaluation
    n_clusters: Optional[int] = None  # None -> number of distinct labels
    kmeans_restarts: int = 10
    kmeans_max_iters: int = 300
    seed: int = 0
    out: str = "runs/gmbl"
    hp: GmblHyperParams = field(default_factory=GmblHyperParams)

    @property
    def bits(self) -> int:
        return self.hp.r

    def to_dict(self) -> dict:
        d = {k: v for k, v in asdict(self).items() if k != "hp"}
        d.update(asdict(self.hp))
        return d

    def updated(self, **kw) -> "RunConfig":
        return config_from_mapping({**self.to_dict(), **kw})


def _coerce(name: str, value, default):
    if value is None:
        return None
    if isinstance(default, bool):
        if isinstance(value, str):
            if value.lower() in ("1", "true", "yes", "on"):
                return True
            if value.lower() in ("0", "false", "no", "off"):
                return False
            raise ConfigError(f"{name}: expected a boolean, got {value!r}")
        return bool(value)
    if isinstance(default, int) and not isinstance(value, bool):
        try:
            if float(value) != int(float(value)):
                raise ValueError
            return int(float(value))
        except (TypeError, ValueError):
            raise ConfigError(f"{name}: expected an integer, got {value!r}") from None
    if isinstance(default, float) or name in ("eta", "kernel_width"):
        try:
            return float(value)
        except (TypeError, ValueError):
            raise ConfigError(f"{name}: expected a number, got {value!r}") from None
    if name == "synth_dims":
        if isinstance(value, str):
            value = [v for v in value.split(",") if v.strip()]
        return [int(v) for v in value]
    if name == "anchors" or name == "n_clusters":
        return int(value)
    return value


def config_from_mapping(mapping: dict) -> RunConfig:
    """Build a RunConfig from flat keys; unknown keys raise ConfigError naming them."""
    top = {f.name: f for f in fields(RunConfig) if f.name != "hp"}
    base = RunConfig()
    run_kw, hp_kw = {}, {}
    for raw_key, value in mapping.items():
        key = ALIASES.get(raw_key, raw_key).replace("-", "_")
        if key in top:
            run_kw[key] = _coerce(key, value, getattr(base, key))
        elif key in _HP_FIELDS:
            hp_kw[key] = _coerce(key, value, getattr(base.hp, key))
        else:
            raise ConfigError(f"unknown config key {raw_key!r}")
    cfg = RunConfig(**run_kw, hp=GmblHyperParams(**hp_kw))
    try:
        cfg.hp.validate()
    except Exception as exc:
        raise ConfigError(str(exc)) from None
    if cfg.synth_dims is not None and len(cfg.synth_dims) != cfg.synth_views:
        raise ConfigError(f"synth_dims has {len(cfg.synth_dims)} entries for {cfg.synth_views} views")
    return cfg


def load_config(path) -> RunConfig:
    """Read a flat YAML/JSON mapping; a run manifest (``{"config": {...}}``) also works."""
    text = Path(path).read_text()
    data = yaml.safe_load(text) or {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a key-value mapping")
    if "config" in data and isinstance(data["config"], dict):
        data = data["config"]
    return config_from_mapping(data)


def seed_streams(seed: int) -> dict:
    """Independent integer seeds for each random consumer of one run.

    Child ``i`` of ``SeedSequence(seed)`` feeds, in order: synthetic data,
    anchor sampling, code initialisation, k-means restarts.
    """
    names = ("synthetic", "anchors", "init", "kmeans")
    children = np.random.SeedSequence(seed).spawn(len(names))
    return {name: int(c.generate_state(1, np.uint64)[0]) for name, c in zip(names, children)}


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"
