"""Key = value pipeline configuration files.

One flat file drives the whole pipeline: dataset generation, anchor
training, selection size, reduction size, and the evaluation protocol.
Unknown keys are rejected, and parse(render(cfg)) reproduces cfg exactly.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, fields

from .errors import ConfigError
from .evaluation import Protocol
from .synth import SynthConfig
from .training import TrainConfig


@dataclass
class PipelineConfig:
    synth: SynthConfig = field(default_factory=SynthConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    protocol: Protocol = field(default_factory=Protocol)
    select_n: int = 96
    svd_k: int = 64

    def __post_init__(self):
        if self.select_n < 1:
            raise ConfigError("select_n must be >= 1")
        if self.svd_k < 1:
            raise ConfigError("svd_k must be >= 1")


_SYNTH_KEYS = {f.name: f.type for f in fields(SynthConfig)}
_TRAIN_KEYS = {f.name: f.type for f in fields(TrainConfig)}
# train.seed would collide with synth.seed in the flat namespace
_TRAIN_RENAMES = {"seed": "train_seed"}


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, list):
        return ",".join(str(v) for v in value)
    return repr(value) if isinstance(value, float) else str(value)


def render_config(cfg: PipelineConfig) -> str:
    lines = []
    for f in fields(SynthConfig):
        lines.append(f"{f.name} = {_format_value(getattr(cfg.synth, f.name))}")
    for f in fields(TrainConfig):
        key = _TRAIN_RENAMES.get(f.name, f.name)
        lines.append(f"{key} = {_format_value(getattr(cfg.train, f.name))}")
    lines.append(f"select_n = {cfg.select_n}")
    lines.append(f"svd_k = {cfg.svd_k}")
    lines.append(f"exclude_same_sample = {_format_value(cfg.protocol.exclude_same_sample)}")
    lines.append(f"exclude_same_view = {_format_value(cfg.protocol.exclude_same_view)}")
    lines.append(f"ks = {_format_value(cfg.protocol.ks)}")
    return "\n".join(lines) + "\n"


def _parse_bool(raw: str, key: str) -> bool:
    if raw == "true":
        return True
    if raw == "false":
        return False
    raise ConfigError(f"{key}: expected true or false, got {raw!r}")


def parse_config(text: str) -> PipelineConfig:
    synth_kwargs: dict = {}
    train_kwargs: dict = {}
    extras: dict = {}
    seen: set[str] = set()
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        raw = raw.strip()
        if key in seen:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        seen.add(key)
        try:
            if key in _SYNTH_KEYS:
                caster = float if "float" in str(_SYNTH_KEYS[key]) else int
                synth_kwargs[key] = caster(raw)
            elif key == "train_seed":
                train_kwargs["seed"] = int(raw)
            elif key in _TRAIN_KEYS and key != "seed":
                caster = int if key == "epochs" else float
                train_kwargs[key] = caster(raw)
            elif key in ("select_n", "svd_k"):
                extras[key] = int(raw)
            elif key in ("exclude_same_sample", "exclude_same_view"):
                extras[key] = _parse_bool(raw, key)
            elif key == "ks":
                extras["ks"] = [int(v) for v in raw.split(",") if v.strip()]
            else:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {raw!r}") from exc
    protocol_kwargs = {
        k: extras.pop(k)
        for k in ("exclude_same_sample", "exclude_same_view", "ks")
        if k in extras
    }
    return PipelineConfig(
        synth=SynthConfig(**synth_kwargs),
        train=TrainConfig(**train_kwargs),
        protocol=Protocol(**protocol_kwargs),
        **extras,
    )


def load_config(path: str | os.PathLike) -> PipelineConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def config_as_dict(cfg: PipelineConfig) -> dict:
    out = {}
    for f in fields(SynthConfig):
        out[f.name] = getattr(cfg.synth, f.name)
    for f in fields(TrainConfig):
        out[_TRAIN_RENAMES.get(f.name, f.name)] = getattr(cfg.train, f.name)
    out["select_n"] = cfg.select_n
    out["svd_k"] = cfg.svd_k
    out["exclude_same_sample"] = cfg.protocol.exclude_same_sample
    out["exclude_same_view"] = cfg.protocol.exclude_same_view
    out["ks"] = cfg.protocol.ks
    return out
