"""Episode reward machine.

The runner owns the bookkeeping of one episode over T sentences: which
sentence the student is on, how many times it has failed the current
sentence's questions, and how many answers were right or wrong overall.
It never looks at the text; callers feed it the student's answers.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from ..numerics import ContractError


class RewardKind(enum.Enum):
    TEACHER = "teacher-question"
    CORPUS = "corpus-question"
    TERMINAL = "terminal"


class Directive(enum.Enum):
    """What the environment does after a reward."""

    STAY = "stay"          # ask another question about the same sentence
    ADVANCE = "advance"    # show the next sentence (or the final question)
    END = "end"            # the episode is over


@dataclass(frozen=True)
class RewardEvent:
    value: float
    kind: RewardKind
    sources: tuple[int, ...] = ()


def terminal_reward(k: int, T: int, final_correct: bool, signed: bool = True) -> float:
    """(k/T)*10, negated for a wrong final answer unless ``signed`` is off."""
    if T < 1:
        raise ContractError(f"episode length must be positive, got {T}")
    if k < 0:
        raise ContractError(f"correct-answer count must be non-negative, got {k}")
    value = 10.0 * k / T
    return value if final_correct or not signed else -value


@dataclass
class EpisodeRunner:
    T: int
    max_trials: int = 3
    fail_fraction: float = 0.5
    signed_terminal: bool = True
    cursor: int = 0          # 0-based index of the sentence on display
    trials: int = 0          # wrong answers on the current sentence
    wrong: int = 0
    k: int = 0               # correct answers so far
    asked: int = 0
    terminal: bool = False
    failed: bool = False
    events: list[RewardEvent] = field(default_factory=list, repr=False)

    def __post_init__(self):
        if self.T < 1:
            raise ContractError(f"episode length must be positive, got {self.T}")
        if self.max_trials < 1:
            raise ContractError("max_trials must be at least 1")

    @property
    def awaiting_final(self) -> bool:
        """All sentences consumed; only the corpus question remains."""
        return not self.terminal and self.cursor >= self.T

    @property
    def total_reward(self) -> float:
        return sum(e.value for e in self.events)

    def _check_live(self) -> None:
        if self.terminal:
            raise ContractError("episode already terminated")

    def _advance(self) -> None:
        self.cursor += 1
        self.trials = 0


def step(runner: EpisodeRunner, answer, gold, sources: tuple[int, ...] = (),
         kind: RewardKind = RewardKind.TEACHER) -> tuple[RewardEvent, Directive]:
    """Score one intermediate answer (teacher question or a corpus turn).

    Correct: +1 and move on.  Wrong: -1 and stay, unless the sentence's trial
    budget is spent (then move on) or the wrong-answer total exceeds
    ``fail_fraction * T`` (then the episode fails).
    """
    runner._check_live()
    if runner.awaiting_final:
        raise ContractError("intermediate question asked after the last sentence")
    runner.asked += 1
    if answer == gold:
        event = RewardEvent(1.0, kind, sources)
        runner.k += 1
        runner._advance()
        directive = Directive.ADVANCE
    else:
        event = RewardEvent(-1.0, kind, sources)
        runner.trials += 1
        runner.wrong += 1
        if runner.wrong > runner.fail_fraction * runner.T:
            runner.terminal = runner.failed = True
            directive = Directive.END
        elif runner.trials >= runner.max_trials:
            runner._advance()
            directive = Directive.ADVANCE
        else:
            directive = Directive.STAY
    runner.events.append(event)
    return event, directive


def skip(runner: EpisodeRunner) -> Directive:
    """The teacher had nothing to ask: move to the next sentence, no reward."""
    runner._check_live()
    if runner.awaiting_final:
        raise ContractError("no sentence left to skip")
    runner._advance()
    return Directive.ADVANCE


def finish(runner: EpisodeRunner, answer, gold) -> RewardEvent:
    """Score the corpus-provided final question and close the episode."""
    runner._check_live()
    if not runner.awaiting_final:
        raise ContractError(f"final question asked at sentence {runner.cursor + 1} of {runner.T}")
    correct = answer == gold
    event = RewardEvent(terminal_reward(runner.k, runner.T, correct, runner.signed_terminal), RewardKind.TERMINAL)
    runner.terminal = True
    runner.events.append(event)
    return event
