"""Teacher: importance measure, curriculum phase and question generation."""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

from .encoders import tokenize
from .lexicon import ATTRACTIONS, DIRECTIONS
from .numerics import cosine

_SLOT = re.compile(r"\{([A-Z])\}")
_ATTRACTIONS = frozenset(ATTRACTIONS)
_DIRECTIONS = frozenset(DIRECTIONS)


# -- importance ----------------------------------------------------------------

@dataclass
class ImportanceTracker:
    """Episode attention: a running average of per-sentence mean attention."""

    m_bar: np.ndarray

    @classmethod
    def zeros(cls, d: int) -> "ImportanceTracker":
        return cls(np.zeros(d))


def importance(m_bar_t, tracker: ImportanceTracker) -> float:
    """Cosine between the episode attention so far and this sentence's."""
    return cosine(tracker.m_bar, m_bar_t)


def update_episode_attention(tracker: ImportanceTracker, m_bar_t) -> ImportanceTracker:
    return ImportanceTracker((tracker.m_bar + np.asarray(m_bar_t, dtype=np.float64)) / 2.0)


# -- curriculum ----------------------------------------------------------------

class CurriculumPhase(enum.Enum):
    SINGLE = "single-sentence"
    MULTI = "multi-sentence"


def detect_plateau(eval_history: Sequence[float], window: int = 3, min_improvement: float = 1.0) -> bool:
    """True when the last ``window`` evaluations each beat the running best
    by less than ``min_improvement`` points (an exact ``min_improvement``
    counts as progress)."""
    if len(eval_history) <= window:
        return False
    best = eval_history[0]
    flat = 0
    for e in eval_history[1:]:
        flat = flat + 1 if best - e < min_improvement else 0
        best = min(best, e)
    return flat >= window


@dataclass
class Curriculum:
    phase: CurriculumPhase = CurriculumPhase.SINGLE
    history: list[float] = field(default_factory=list)
    window: int = 3
    min_improvement: float = 1.0

    def observe(self, validation_error: float) -> CurriculumPhase:
        self.history.append(validation_error)
        if self.phase is CurriculumPhase.SINGLE and detect_plateau(
            self.history, self.window, self.min_improvement
        ):
            self.phase = CurriculumPhase.MULTI
        return self.phase


# -- template rules ------------------------------------------------------------

@dataclass(frozen=True)
class TemplateRule:
    pattern: str
    question: str
    answer_slot: str
    regex: re.Pattern = field(compare=False, repr=False)

    @property
    def locates_attraction(self) -> bool:
        return "{X}" in self.pattern or "{Y}" in self.pattern

    def apply(self, tokens: Sequence[str]) -> tuple[str, str] | None:
        m = self.regex.fullmatch(" ".join(tokens) + " ")
        if m is None:
            return None
        slots = m.groupdict()
        for name, value in slots.items():
            allowed = _DIRECTIONS if name == "D" else _ATTRACTIONS
            if value not in allowed:
                return None
        question = _SLOT.sub(lambda s: slots[s.group(1)], self.question)
        return question, slots[self.answer_slot]


def compile_pattern(pattern: str) -> re.Pattern:
    out = []
    for part in re.findall(r"\([^)]*\)|\S+", pattern):
        if part.startswith("("):
            inner = "".join(_piece(w) for w in part[1:-1].split())
            out.append(f"(?:{inner})?")
        else:
            out.append(_piece(part))
    return re.compile("".join(out))


def _piece(word: str) -> str:
    m = _SLOT.fullmatch(word)
    if m:
        return f"(?P<{m.group(1)}>[a-z0-9_-]+) "
    return re.escape(word) + " "


def parse_rules(text: str) -> list[TemplateRule]:
    rules = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip() or line.startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) != 3:
            raise ValueError(f"rules line {lineno}: expected 3 tab-separated fields")
        pattern, question, slot = (c.strip() for c in cols)
        if f"{{{slot}}}" not in pattern:
            raise ValueError(f"rules line {lineno}: answer slot {slot!r} not in pattern")
        rules.append(TemplateRule(pattern, question, slot, compile_pattern(pattern)))
    return rules


def load_rules(path: str | Path | None = None) -> list[TemplateRule]:
    if path is None:
        text = resources.files("scaffolding").joinpath("rules/travel.tsv").read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    return parse_rules(text)


# -- question generation ------------------------------------------------------

@dataclass
class QAPair:
    question: str
    answer: str
    sources: tuple[int, ...]  # 1-based sentence (or turn) ids, one per constituent question

    @property
    def tokens(self) -> list[str]:
        return tokenize(self.question)

    def label(self) -> str:
        return f"({','.join(map(str, self.sources))}) {self.question}"


class TravelTeacher:
    """Template-inversion question generator over the travel-log grammar."""

    def __init__(self, rules: list[TemplateRule] | None = None, threshold: float = 0.30,
                 multi_prob: float = 0.5, max_questions: int = 2):
        self.rules = rules if rules is not None else load_rules()
        self.threshold = threshold
        self.multi_prob = multi_prob
        self.max_questions = max_questions
        self._cache: dict[str, tuple[list, list]] = {}

    def questions_for(self, sentence: str) -> tuple[list[tuple[str, str]], list[tuple[str, str]]]:
        """(location questions, fallback questions) derivable from one sentence."""
        hit = self._cache.get(sentence)
        if hit is None:
            tokens = tokenize(sentence)
            located, fallback = [], []
            for rule in self.rules:
                qa = rule.apply(tokens)
                if qa is not None:
                    (located if rule.locates_attraction else fallback).append(qa)
            hit = self._cache[sentence] = (located, fallback)
        return hit

    def generate(self, history: Sequence[str], importance_value: float | None,
                 phase: CurriculumPhase, rng: np.random.Generator) -> QAPair | None:
        """Pick a question about the observed sentences (1-based ids).

        High importance asks about the current sentence; otherwise (or when
        ``importance_value`` is None, i.e. random-sampling teachers) a
        sentence is drawn uniformly from those that yield questions.
        Returns None when no sentence yields a question.
        """
        t = len(history)
        if t == 0:
            return None
        current, _ = self.questions_for(history[-1])
        if importance_value is not None and importance_value >= self.threshold and current:
            src, pool = t, current
        else:
            located = [i for i in range(1, t + 1) if self.questions_for(history[i - 1])[0]]
            if located:
                src = located[rng.integers(len(located))]
                pool = self.questions_for(history[src - 1])[0]
            else:
                fallback = [i for i in range(1, t + 1) if self.questions_for(history[i - 1])[1]]
                if not fallback:
                    return None
                src = fallback[rng.integers(len(fallback))]
                pool = self.questions_for(history[src - 1])[1]
        question, answer = pool[rng.integers(len(pool))]
        chosen = [(src, question)]
        if phase is CurriculumPhase.MULTI and self.max_questions > 1 and rng.random() < self.multi_prob:
            partners = [
                (j, q)
                for j in range(1, t + 1)
                if j != src
                for q, a in self.questions_for(history[j - 1])[0]
                if a == answer
            ]
            if partners:
                chosen.append(partners[rng.integers(len(partners))])
        chosen.sort()
        return QAPair(" ".join(q for _, q in chosen), answer, tuple(j for j, _ in chosen))


def generate_qa_travel(history: Sequence[str], importance_value: float | None, threshold: float,
                       phase: CurriculumPhase, rng: np.random.Generator,
                       teacher: TravelTeacher | None = None) -> QAPair | None:
    teacher = teacher or TravelTeacher(threshold=threshold)
    teacher.threshold = threshold
    return teacher.generate(history, importance_value, phase, rng)


def generate_qa_dialog(turns: Sequence[tuple[str, int]], rng: np.random.Generator) -> tuple[int, str, int] | None:
    """Replay an earlier turn: ``turns`` holds (user utterance, answer id) for
    completed turns.  Returns (0-based turn index, question, answer id)."""
    if not turns:
        return None
    k = int(rng.integers(len(turns)))
    user, answer = turns[k]
    return k, user, answer
