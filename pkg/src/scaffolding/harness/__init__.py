"""Configuration, model wiring, training loop, persistence and experiments."""

from .config import PRESETS, ConfigError, RunConfig, desk, paper, resolve
from .experiments import (
    emit_trace,
    evaluate,
    format_trace,
    oracle_student,
    policy_error,
    run_human_fraction,
    train,
    train_lstm_baseline,
)
from .model import EpisodeView, ModelSpec, ScaffoldNet, StateKey
from .tasks import DialogTask, TravelTask, make_task
from .trainer import Trainer

__all__ = [
    "PRESETS", "ConfigError", "RunConfig", "desk", "paper", "resolve", "emit_trace", "evaluate",
    "format_trace", "oracle_student", "policy_error", "run_human_fraction", "train", "train_lstm_baseline",
    "EpisodeView", "ModelSpec", "ScaffoldNet", "StateKey", "DialogTask", "TravelTask", "make_task", "Trainer",
]
