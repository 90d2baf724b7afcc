"""Id-encoded samples, the normalized record file and OOV test loading.

Record file: one sample per line, three tab-separated fields::

    <context ids>\\t<question ids>\\t<answer id>

Within the context field sentences are separated by `` | `` and token ids
by single spaces; an empty context is an empty field.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from ..encoders import UNK, Vocabulary, tokenize
from .dialog import CandidateSet, Dialog, parse_dialog_file, to_samples


@dataclass
class EncodedSample:
    context: list[tuple[int, ...]]
    question: tuple[int, ...]
    answer: int


@dataclass
class SplitStats:
    samples: int
    tokens: int
    unk: int

    @property
    def unk_rate(self) -> float:
        return self.unk / self.tokens if self.tokens else 0.0


def build_vocabulary(dialogs: Sequence[Dialog], candidates: CandidateSet) -> Vocabulary:
    vocab = Vocabulary()
    for dialog in dialogs:
        for turn in dialog.turns:
            for text in (turn.user, turn.bot or ""):
                for tok in tokenize(text):
                    vocab.add(tok)
    for label in candidates.labels:
        for tok in tokenize(label):
            vocab.add(tok)
    return vocab.freeze()


def encode_ids(vocab: Vocabulary, text: str) -> tuple[int, ...]:
    ids = tuple(vocab.encode(tokenize(text)))
    return ids or (UNK,)


def encode_samples(dialogs: Sequence[Dialog], vocab: Vocabulary, candidates: CandidateSet):
    """Returns (samples, stats).  Bot responses missing from ``candidates``
    raise KeyError; the vocabulary is not modified."""
    out: list[EncodedSample] = []
    tokens = unk = 0
    for dialog in dialogs:
        for s in to_samples(dialog):
            ctx = [encode_ids(vocab, c) for c in s.context]
            q = encode_ids(vocab, s.question)
            out.append(EncodedSample(ctx, q, candidates.id(s.answer)))
        for turn in dialog.turns:
            for text in (turn.user, turn.bot or ""):
                ids = vocab.encode(tokenize(text))
                tokens += len(ids)
                unk += sum(i == UNK for i in ids)
    return out, SplitStats(len(out), tokens, unk)


def load_oov_split(paths: Sequence[str | Path], vocab: Vocabulary, candidates: CandidateSet):
    """Parse OOV test files against a frozen training vocabulary."""
    dialogs = [d for p in paths for d in parse_dialog_file(p)]
    samples, stats = encode_samples(dialogs, vocab, candidates)
    return dialogs, samples, stats


def _ids(ids: Sequence[int]) -> str:
    return " ".join(map(str, ids))


def write_records(path: str | Path, samples: Sequence[EncodedSample]) -> None:
    lines = [
        f"{' | '.join(_ids(c) for c in s.context)}\t{_ids(s.question)}\t{s.answer}\n" for s in samples
    ]
    Path(path).write_text("".join(lines), "utf-8")


def read_records(path: str | Path) -> list[EncodedSample]:
    out = []
    for lineno, line in enumerate(Path(path).read_text("utf-8").splitlines(), 1):
        fields = line.split("\t")
        if len(fields) != 3:
            raise ValueError(f"{path}:{lineno}: expected 3 tab-separated fields")
        ctx = [tuple(map(int, c.split())) for c in fields[0].split(" | ")] if fields[0] else []
        out.append(EncodedSample(ctx, tuple(map(int, fields[1].split())), int(fields[2])))
    return out
