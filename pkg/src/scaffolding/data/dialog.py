"""bAbI-dialog / DSTC-2 text format: parsing, candidates and samples.

A file holds dialogs separated by blank lines.  Each line is
``<id> <user utterance>\\t<bot response>``; lines without a tab are bare
facts (api results) that join the context without a response.  Ids restart
at 1 for every dialog.
"""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from ..encoders import tokenize


class DialogParseError(ValueError):
    def __init__(self, path, lineno: int, message: str):
        super().__init__(f"{path}:{lineno}: {message}")
        self.lineno = lineno


class IngestionError(ValueError):
    pass


class FormatWarning(UserWarning):
    pass


_LINE = re.compile(r"(\d+) (.*)")


@dataclass
class DialogTurn:
    user: str
    bot: str | None
    index: int

    @property
    def user_tokens(self) -> list[str]:
        return tokenize(self.user)

    @property
    def is_fact(self) -> bool:
        return self.bot is None


@dataclass
class Dialog:
    turns: list[DialogTurn] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.turns)


@dataclass
class DialogSample:
    context: list[str]       # earlier utterances and facts, oldest first
    question: str            # the current user utterance
    answer: str              # gold bot response
    turn: int                # 0-based position among the dialog's bot turns


def normalise(text: str) -> str:
    return " ".join(text.split())


def parse_dialogs(text: str, path: str = "<string>") -> list[Dialog]:
    dialogs: list[Dialog] = []
    current: Dialog | None = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.rstrip()
        if not line.strip():
            current = None
            continue
        m = _LINE.fullmatch(line)
        if m is None:
            raise DialogParseError(path, lineno, f"expected '<id> <text>', got {line[:40]!r}")
        idx, rest = int(m.group(1)), m.group(2)
        if current is None:
            current = Dialog()
            dialogs.append(current)
            if idx != 1:
                warnings.warn(f"{path}:{lineno}: dialog starts at id {idx}", FormatWarning, stacklevel=2)
        elif idx != current.turns[-1].index + 1:
            warnings.warn(
                f"{path}:{lineno}: id {idx} follows {current.turns[-1].index}", FormatWarning, stacklevel=2
            )
        if "\t" in rest:
            user, bot = rest.split("\t", 1)
            if not bot.strip():
                raise DialogParseError(path, lineno, "empty bot response after tab")
            current.turns.append(DialogTurn(user, bot, idx))
        else:
            current.turns.append(DialogTurn(rest, None, idx))
    return dialogs


def parse_dialog_file(path: str | Path) -> list[Dialog]:
    return parse_dialogs(Path(path).read_text("utf-8"), str(path))


def serialize_dialogs(dialogs: Sequence[Dialog]) -> str:
    blocks = []
    for dialog in dialogs:
        lines = [
            f"{t.index} {t.user}" if t.bot is None else f"{t.index} {t.user}\t{t.bot}"
            for t in dialog.turns
        ]
        blocks.append("\n".join(lines) + "\n")
    return "\n".join(blocks)


def to_samples(dialog: Dialog) -> list[DialogSample]:
    """One sample per bot turn; the context holds everything said before it."""
    samples, context = [], []
    for turn in dialog.turns:
        if turn.bot is None:
            context.append(turn.user)
            continue
        samples.append(DialogSample(list(context), turn.user, turn.bot, len(samples)))
        context += [turn.user, turn.bot]
    return samples


def memory_stream(dialog: Dialog) -> tuple[list[str], list[int]]:
    """The dialog as a memory sentence stream, plus for each bot turn the
    number of stream sentences preceding its user utterance."""
    stream, offsets = [], []
    for turn in dialog.turns:
        if turn.bot is None:
            stream.append(turn.user)
        else:
            offsets.append(len(stream))
            stream += [turn.user, turn.bot]
    return stream, offsets


class CandidateSet:
    """Ordered, duplicate-free response inventory; ids are list positions."""

    def __init__(self, responses: Iterable[str] = ()):
        self.labels: list[str] = []
        self._ids: dict[str, int] = {}
        for r in responses:
            self.add(r)

    def add(self, response: str) -> int:
        key = normalise(response)
        if key not in self._ids:
            self._ids[key] = len(self.labels)
            self.labels.append(key)
        return self._ids[key]

    def __len__(self) -> int:
        return len(self.labels)

    def __contains__(self, response: str) -> bool:
        return normalise(response) in self._ids

    def id(self, response: str) -> int:
        return self._ids[normalise(response)]

    def unresolved(self, dialogs: Sequence[Dialog]) -> list[str]:
        missing: dict[str, None] = {}
        for dialog in dialogs:
            for turn in dialog.turns:
                if turn.bot is not None and turn.bot not in self:
                    missing[normalise(turn.bot)] = None
        return list(missing)

    def write(self, path: str | Path) -> None:
        Path(path).write_text("".join(f"1 {label}\n" for label in self.labels), "utf-8")


def read_candidates(path: str | Path) -> CandidateSet:
    """Official candidate files prefix each response with "1 "."""
    lines = Path(path).read_text("utf-8").splitlines()
    return CandidateSet(re.sub(r"^\d+ ", "", line) for line in lines if line.strip())


def build_candidates(dialogs: Sequence[Dialog] = (), candidates_file: str | Path | None = None,
                     check: Sequence[Dialog] = ()) -> CandidateSet:
    """Candidates in file order when a file is given, else first-appearance
    order over ``dialogs``.  Every response in ``dialogs`` and ``check``
    must resolve against a file-based set."""
    if candidates_file is not None:
        cands = read_candidates(candidates_file)
        missing = cands.unresolved([*dialogs, *check])
        if missing:
            shown = "; ".join(missing[:5])
            raise IngestionError(f"{len(missing)} responses absent from {candidates_file}: {shown}")
        return cands
    cands = CandidateSet()
    for dialog in dialogs:
        for turn in dialog.turns:
            if turn.bot is not None:
                cands.add(turn.bot)
    return cands
