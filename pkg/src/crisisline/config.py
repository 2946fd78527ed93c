"""Run configuration dataclasses, TOML round-tripping, config hashing.

Every under-specified constant in the system lives here with its default,
so one auditable place records what a run actually used.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import sys
from dataclasses import dataclass, field

if sys.version_info >= (3, 11):
    import tomllib as _toml
else:
    import tomli as _toml


@dataclass
class TrainConfig:
    total_steps: int = 750_000
    epsilon_start: float = 1.0
    epsilon_end: float = 0.05
    epsilon_decay_steps: int = 500_000
    gamma: float = 0.99
    batch_size: int = 64
    target_sync_interval: int = 1000
    replay_capacity: int = 100_000
    min_replay: int = 1000
    train_every: int = 1
    budget_max: int = 300
    lr: float = 1e-3
    weight_decay: float = 1e-4
    hidden: list[int] = field(default_factory=lambda: [256, 256])
    loss: str = "huber"
    huber_delta: float = 1.0
    penalty: float = 5.0
    include_forced_in_replay: bool = True
    seed: int = 0
    holdout_events: list[str] = field(default_factory=list)

    def validate(self) -> None:
        if self.epsilon_decay_steps <= 0:
            raise ValueError("epsilon_decay_steps must be > 0")
        if not (0.0 <= self.epsilon_end <= self.epsilon_start <= 1.0):
            raise ValueError("need 0 <= epsilon_end <= epsilon_start <= 1")
        if not (0.0 <= self.gamma <= 1.0):
            raise ValueError("gamma must be in [0, 1]")
        if self.batch_size < 1 or self.replay_capacity < self.batch_size:
            raise ValueError("replay capacity must hold at least one batch")
        if len(self.hidden) != 2:
            raise ValueError("hidden must list exactly two layer sizes")
        if self.budget_max < 1 or self.total_steps < 1 or self.train_every < 1:
            raise ValueError("total_steps, budget_max, train_every must be >= 1")
        if self.loss not in ("huber", "squared"):
            raise ValueError("loss must be huber or squared")


@dataclass
class SynthConfig:
    seed: int = 0
    n_events: int = 4
    days_per_event: int = 4
    texts_per_day: int = 500
    query_count: int = 52
    informative_fraction: float = 0.2
    duplicate_fraction: float = 0.15
    embedding_dim: int = 768
    n_topic_centers: int = 10
    center_spread: float = 0.05
    noise_scale: float = 0.05

    def validate(self) -> None:
        if not (0.0 <= self.informative_fraction <= 1.0):
            raise ValueError("informative_fraction must be in [0, 1]")
        if not (0.0 <= self.duplicate_fraction <= 1.0):
            raise ValueError("duplicate_fraction must be in [0, 1]")
        for name in ("n_events", "days_per_event", "texts_per_day", "query_count",
                     "embedding_dim", "n_topic_centers"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")


def _coerce(cls, data: dict):
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(data) - set(fields)
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    kwargs = {}
    for name, value in data.items():
        ftype = fields[name].type
        if ftype == "int" and isinstance(value, (int, float)) and not isinstance(value, bool):
            value = int(value)
        elif ftype == "float" and isinstance(value, (int, float)) and not isinstance(value, bool):
            value = float(value)
        kwargs[name] = value
    cfg = cls(**kwargs)
    cfg.validate()
    return cfg


def load_train_config(path) -> TrainConfig:
    with open(path, "rb") as fh:
        return _coerce(TrainConfig, _toml.load(fh))


def load_synth_config(path) -> SynthConfig:
    with open(path, "rb") as fh:
        return _coerce(SynthConfig, _toml.load(fh))


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, float)):
        return repr(v)
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    raise TypeError(f"cannot TOML-serialize {type(v)}")


def to_toml(cfg) -> str:
    """Flat-table TOML for a config dataclass (round-trips via load_*)."""
    lines = [f"{f.name} = {_toml_value(getattr(cfg, f.name))}"
             for f in dataclasses.fields(cfg)]
    return "\n".join(lines) + "\n"


def config_hash(cfg) -> str:
    doc = dataclasses.asdict(cfg) if dataclasses.is_dataclass(cfg) else dict(cfg)
    blob = json.dumps(doc, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()
