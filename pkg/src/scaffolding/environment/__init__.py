"""Travel-log world, symbolic oracle and the episode reward machine."""

from .episode import Directive, EpisodeRunner, RewardEvent, RewardKind, finish, skip, step, terminal_reward
from .oracle import UNANSWERABLE, MapState, Unanswerable, oracle_answer, relative_direction, replay
from .travel import (
    GenerationError,
    TravelLog,
    TravelWorld,
    action_labels,
    final_candidates,
    format_log,
    generate_corpus,
    generate_log,
    generate_world,
    iter_records,
    read_corpus,
    walk,
    write_corpus,
)

__all__ = [
    "Directive", "EpisodeRunner", "RewardEvent", "RewardKind", "finish", "skip", "step", "terminal_reward",
    "UNANSWERABLE", "MapState", "Unanswerable", "oracle_answer", "relative_direction", "replay",
    "GenerationError", "TravelLog", "TravelWorld", "action_labels", "final_candidates", "format_log",
    "generate_corpus", "generate_log", "generate_world", "iter_records", "read_corpus", "walk", "write_corpus",
]
