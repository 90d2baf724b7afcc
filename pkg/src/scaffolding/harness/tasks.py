"""Datasets prepared for training: id-encoded episodes for both tracks."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..data import (
    CandidateSet,
    Dialog,
    KBLexicon,
    MatchFeaturizer,
    all_responses,
    build_candidates,
    build_vocabulary,
    encode_ids,
    generate_dialogs,
    memory_stream,
    parse_dialog_file,
)
from ..encoders import UNK, Vocabulary, tokenize, travel_tokens
from ..environment import TravelLog, action_labels, generate_corpus
from ..teacher import TravelTeacher
from .config import RunConfig
from .model import StateKey


@dataclass
class TravelEpisode:
    sentences: list[str]
    stream: list[tuple[int, ...]]
    question: str
    question_ids: tuple[int, ...]
    answer: int

    def __len__(self) -> int:
        return len(self.sentences)

    def final_key(self) -> StateKey:
        return StateKey(self.stream, len(self.stream), self.question_ids, self.question_ids)


@dataclass
class DialogTurnItem:
    offset: int                    # memory sentences before this user utterance
    user: str
    user_ids: tuple[int, ...]
    answer: int
    features: np.ndarray | None = field(default=None, repr=False)


@dataclass
class DialogEpisode:
    stream: list[tuple[int, ...]]
    turns: list[DialogTurnItem]

    def __len__(self) -> int:
        return len(self.turns)

    def key(self, t: int, question: tuple[int, ...] | None = None) -> StateKey:
        turn = self.turns[t]
        q = turn.user_ids if question is None else question
        return StateKey(self.stream, turn.offset, turn.user_ids, q, turn.features)


def split_validation(items: list, fraction: float, seed: int) -> tuple[list, list]:
    """Withhold ``fraction`` of ``items`` (at least one) as validation data."""
    order = np.random.default_rng([seed, 17]).permutation(len(items))
    n_val = max(1, int(round(fraction * len(items))))
    val = sorted(order[:n_val].tolist())
    keep = sorted(order[n_val:].tolist())
    return [items[i] for i in keep], [items[i] for i in val]


class TravelTask:
    track = "travel-log"

    def __init__(self, config: RunConfig, train_logs: list[TravelLog] | None = None,
                 test_logs: list[TravelLog] | None = None):
        n = config.n_attractions
        if train_logs is None:
            train_logs = generate_corpus(n, config.train_logs, 2 * config.data_seed, config.max_moves)
        if test_logs is None:
            test_logs = generate_corpus(n, config.test_logs, 2 * config.data_seed + 1, config.max_moves)
        self.labels = action_labels(n)
        self._label_index = {l: i for i, l in enumerate(self.labels)}
        self.teacher = TravelTeacher(threshold=config.threshold, multi_prob=config.multi_prob)
        self.vocab = self._vocabulary(train_logs)
        train, val = split_validation(train_logs, config.val_fraction, config.data_seed)
        self.train = [self.episode(log) for log in train]
        self.val = [self.episode(log) for log in val]
        self.test = [self.episode(log) for log in test_logs]

    def _vocabulary(self, logs: list[TravelLog]) -> Vocabulary:
        vocab = Vocabulary()
        for label in self.labels:
            vocab.add(label)
        for log in logs:
            for text in [*log.sentences, log.question]:
                for tok in travel_tokens(text):
                    vocab.add(tok)
                for qs in self.teacher.questions_for(text):
                    for q, _ in qs:
                        for tok in travel_tokens(q):
                            vocab.add(tok)
        return vocab.freeze()

    @property
    def n_actions(self) -> int:
        return len(self.labels)

    def ids(self, text: str) -> tuple[int, ...]:
        return tuple(self.vocab.encode(travel_tokens(text))) or (UNK,)

    def answer_index(self, label: str) -> int:
        return self._label_index[label]

    def episode(self, log: TravelLog) -> TravelEpisode:
        return TravelEpisode(
            list(log.sentences), [self.ids(s) for s in log.sentences], log.question,
            self.ids(log.question), self.answer_index(log.answer),
        )

    def eval_items(self, episodes) -> list[tuple[StateKey, int]]:
        return [(ep.final_key(), ep.answer) for ep in episodes]


def _official_files(root: Path, task: int) -> dict[str, Path]:
    found = {}
    for part, pattern in (("trn", "trn"), ("dev", "dev"), ("tst", "tst"), ("oov", "tst-OOV")):
        hits = sorted(root.glob(f"dialog-babi-task{task}-*-{pattern}.txt"))
        if hits:
            found[part] = hits[0]
    for name in ("candidates", "kb"):
        hits = sorted(root.glob(f"dialog-babi-{name}*.txt"))
        if hits:
            found[name] = hits[0]
    return found


class DialogTask:
    track = "dialog"

    def __init__(self, config: RunConfig, train_dialogs: list[Dialog] | None = None,
                 test_dialogs: list[Dialog] | None = None, candidates: CandidateSet | None = None):
        lexicon = KBLexicon()
        self.source = "synthetic"
        if train_dialogs is None and config.data_dir:
            files = _official_files(Path(config.data_dir), config.dialog_task)
            if "trn" not in files or "tst" not in files:
                raise FileNotFoundError(f"no task-{config.dialog_task} train/test files under {config.data_dir}")
            train_dialogs = parse_dialog_file(files["trn"])
            test_dialogs = parse_dialog_file(files["tst"])
            candidates = build_candidates(
                train_dialogs, files.get("candidates"), check=test_dialogs
            )
            if "kb" in files:
                lexicon = KBLexicon.from_kb(files["kb"])
            self.source = str(files["trn"])
        if train_dialogs is None:
            train_dialogs = generate_dialogs(config.train_dialogs, 2 * config.data_seed)
            test_dialogs = generate_dialogs(config.test_dialogs, 2 * config.data_seed + 1)
            candidates = all_responses()
        if candidates is None:
            candidates = build_candidates([*train_dialogs, *(test_dialogs or [])])
        self.candidates = candidates
        self.labels = candidates.labels
        self.vocab = build_vocabulary(train_dialogs, candidates)
        self.featurizer = MatchFeaturizer([tokenize(c) for c in candidates.labels], lexicon) \
            if config.match_features else None
        train, val = split_validation(train_dialogs, config.val_fraction, config.data_seed)
        self.train = [self.episode(d) for d in train]
        self.val = [self.episode(d) for d in val]
        self.test = [self.episode(d) for d in test_dialogs or []]

    @property
    def n_actions(self) -> int:
        return len(self.labels)

    def ids(self, text: str) -> tuple[int, ...]:
        return encode_ids(self.vocab, text)

    def episode(self, dialog: Dialog) -> DialogEpisode:
        texts, offsets = memory_stream(dialog)
        stream = [self.ids(s) for s in texts]
        turns = []
        bot_turns = [t for t in dialog.turns if t.bot is not None]
        seen_tokens: list[str] = []
        consumed = 0
        for turn, offset in zip(bot_turns, offsets):
            features = None
            if self.featurizer is not None:
                while consumed < offset:
                    seen_tokens += tokenize(texts[consumed])
                    consumed += 1
                features = self.featurizer([*seen_tokens, *tokenize(turn.user)])
            turns.append(DialogTurnItem(offset, turn.user, self.ids(turn.user), self.candidates.id(turn.bot), features))
        return DialogEpisode(stream, turns)

    def eval_items(self, episodes) -> list[tuple[StateKey, int]]:
        return [(ep.key(t), turn.answer) for ep in episodes for t, turn in enumerate(ep.turns)]


def make_task(config: RunConfig):
    return TravelTask(config) if config.track == "travel-log" else DialogTask(config)
