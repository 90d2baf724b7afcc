"""Run configuration: defaults, presets, key=value files and validation."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any

TRACKS = ("travel-log", "dialog")
VARIANTS = ("SN", "SN-no-imp", "SN-no-att", "lstm-baseline")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    track: str = "travel-log"
    variant: str = "SN"
    # model
    d: int = 128
    hidden: int = 0                 # 0 means "same as d"
    n_max: int = 0                  # 0 means the track default: 12 words, 24 for dialogs
    interaction: str = "product"
    qs_layers: int = 3
    match_features: bool = False
    # optimisation
    lr_grid: tuple[float, ...] = (0.1, 0.01)
    weight_decay: float = 0.001
    restarts: int = 10
    seed: int = 0
    max_steps: int = 200_000
    # DQN
    gamma: float = 0.99
    buffer: int = 10_000
    batch: int = 32
    n_sync: int = 500
    warmup: int = 500
    eps_start: float = 0.1
    eps_end: float = 0.01
    eps_decay_fraction: float = 0.5
    # environment and teacher
    max_trials: int = 3
    threshold: float = 0.30
    multi_prob: float = 0.5
    plateau_window: int = 3
    plateau_min: float = 1.0
    attention_summary: str = "mean"
    signed_terminal: bool = True
    human_fraction: float = 100.0
    # data
    n_attractions: int = 5
    train_logs: int = 1000
    test_logs: int = 1000
    max_moves: int = 12
    data_seed: int = 0
    val_fraction: float = 0.10
    data_dir: str = ""              # official dialog files; empty means synthetic
    dialog_task: int = 1
    train_dialogs: int = 1000
    test_dialogs: int = 1000
    # evaluation
    eval_every: int = 500           # episodes (travel-log) or 0 for once per epoch
    baseline_epochs: int = 30

    @property
    def hidden_size(self) -> int:
        return self.hidden or self.d

    @property
    def n_max_words(self) -> int:
        return self.n_max or (24 if self.track == "dialog" else 12)

    @property
    def epsilon_decay_steps(self) -> int:
        return int(self.max_steps * self.eps_decay_fraction)

    def validate(self) -> "RunConfig":
        checks = [
            (self.track in TRACKS, f"track must be one of {TRACKS}"),
            (self.variant in VARIANTS, f"variant must be one of {VARIANTS}"),
            (self.d >= 1 and self.hidden >= 0 and self.n_max >= 0, "sizes must be positive"),
            (self.interaction in ("product", "mlp"), "interaction must be product or mlp"),
            (len(self.lr_grid) >= 1 and all(lr > 0 for lr in self.lr_grid), "lr_grid must hold positive rates"),
            (self.restarts >= 1, "restarts must be at least 1"),
            (0.0 <= self.gamma <= 1.0, "gamma must lie in [0, 1]"),
            (self.batch >= 1 and self.buffer >= self.batch, "buffer must hold at least one batch"),
            (self.n_sync >= 1, "n_sync must be at least 1"),
            (0.0 <= self.eps_end <= self.eps_start <= 1.0, "need 0 <= eps_end <= eps_start <= 1"),
            (self.max_trials >= 1, "max_trials must be at least 1"),
            (-1.0 <= self.threshold <= 1.0, "threshold must lie in [-1, 1]"),
            (self.attention_summary in ("mean", "sum"), "attention_summary must be mean or sum"),
            (0.0 <= self.human_fraction <= 100.0, "human_fraction must lie in [0, 100]"),
            (1 <= self.n_attractions <= 81, "n_attractions must lie in [1, 81]"),
            (0.0 < self.val_fraction < 1.0, "val_fraction must lie in (0, 1)"),
        ]
        for ok, message in checks:
            if not ok:
                raise ConfigError(message)
        return self

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes).validate()

    def to_dict(self) -> dict[str, Any]:
        out = dataclasses.asdict(self)
        out["lr_grid"] = list(self.lr_grid)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        data = dict(data)
        if "lr_grid" in data:
            data["lr_grid"] = tuple(float(x) for x in data["lr_grid"])
        return cls(**data).validate()


def desk() -> RunConfig:
    """Single-core scale: small model, reduced corpus, one restart.

    gamma is 0 here: with a small model and a short budget, bootstrapped
    terminal returns of up to 10 drown the one-point gap between answers.
    """
    return RunConfig(
        d=32, lr_grid=(0.001,), restarts=1, max_steps=50_000, gamma=0.0, train_logs=300, test_logs=300,
        eval_every=100, train_dialogs=300, test_dialogs=300, buffer=10_000,
    ).validate()


def paper() -> RunConfig:
    return RunConfig().validate()


PRESETS = {"desk": desk, "paper": paper}


def _coerce(name: str, raw: str, default: Any) -> Any:
    raw = raw.strip()
    if isinstance(default, bool):
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{name}: expected a boolean, got {raw!r}")
    try:
        if isinstance(default, tuple):
            return tuple(float(x) for x in raw.split(",") if x.strip())
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
    except ValueError:
        raise ConfigError(f"{name}: cannot parse {raw!r}") from None
    return raw


def parse_assignments(pairs: dict[str, str], base: RunConfig) -> RunConfig:
    defaults = {f.name: getattr(base, f.name) for f in fields(base)}
    changes = {}
    for key, raw in pairs.items():
        name = key.strip().replace("-", "_")
        if name not in defaults:
            raise ConfigError(f"unknown config key {key!r}")
        changes[name] = _coerce(name, raw, defaults[name])
    return base.replace(**changes)


def read_config_file(path: str | Path) -> dict[str, str]:
    """Plain ``key = value`` lines; ``#`` starts a comment."""
    pairs = {}
    for lineno, line in enumerate(Path(path).read_text("utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, value = line.split("=", 1)
        pairs[key.strip()] = value.strip()
    return pairs


def resolve(preset: str = "desk", file: str | Path | None = None,
            overrides: dict[str, str] | None = None) -> RunConfig:
    """Defaults (a preset) < configuration file < command-line overrides."""
    if preset not in PRESETS:
        raise ConfigError(f"unknown preset {preset!r}")
    config = PRESETS[preset]()
    if file is not None:
        config = parse_assignments(read_config_file(file), config)
    if overrides:
        config = parse_assignments(overrides, config)
    return config
