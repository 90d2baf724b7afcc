"""Symbolic replay of a travel log.

The oracle reads only the text: it tracks the traveler in coordinates
relative to the start, places every attraction it hears about, and answers
spatial questions from that reconstructed map.  When an attraction is
mentioned twice the later placement wins, which is how a narrator correcting
an earlier statement is read.  It shares no code with the generator beyond
the tokenizer and the direction offsets, so agreement between the two is a
meaningful check.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Sequence

from ..encoders import tokenize
from ..lexicon import DIRECTIONS, OFFSETS


class Unanswerable(str):
    """Returned instead of a label when the log does not determine the answer."""


UNANSWERABLE = Unanswerable("<unanswerable>")

_D = r"(?P<d>north|south|east|west)"
_W = r"[a-z0-9_-]+"

_MOVE = re.compile(rf"i (?:am )?(?:heading|walking|going|moving) (?:to )?{_D}(?: towards (?:the )?(?P<x>{_W}))?(?: again)?")
_AT = re.compile(rf"i am at (?:the )?(?P<x>{_W})")
_REACH = re.compile(rf"(?:after leaving (?:the )?(?P<y>{_W}) )?i (?:just )?(?:reached|arrived (?:to|at)) (?:the )?(?P<x>{_W})")
_ON_MY = re.compile(rf"(?:i see a |(?:the )?)(?P<x>{_W}) (?:is )?on my {_D}")
_ON_THE = re.compile(rf"(?:the )?(?P<x>{_W}) (?:is )?on the {_D} of (?:the )?(?P<y>{_W})")
_TOWARDS = re.compile(rf"i am (?:walking|heading) towards (?:the )?(?P<x>{_W})")


def _offset(direction: str) -> tuple[int, int]:
    """Offsets for the four directions and their two-part composites."""
    dx = dy = 0
    for part in direction.split("-"):
        ox, oy = OFFSETS[part]
        dx, dy = dx + ox, dy + oy
    return dx, dy


def relative_direction(src: tuple[int, int], dst: tuple[int, int], composite: bool = False) -> str | None:
    """Where ``dst`` lies seen from ``src``.

    The larger displacement decides; equal non-zero displacements give a
    composite such as "north-east" when ``composite`` is set, else None.
    """
    dx, dy = dst[0] - src[0], dst[1] - src[1]
    ns = "north" if dy > 0 else "south"
    ew = "east" if dx > 0 else "west"
    if dx == dy == 0:
        return None
    if abs(dx) > abs(dy):
        return ew
    if abs(dy) > abs(dx):
        return ns
    return f"{ns}-{ew}" if composite else None


@dataclass
class MapState:
    pos: tuple[int, int] = (0, 0)
    where: dict[str, tuple[int, int]] = field(default_factory=dict)
    stamp: dict[str, int] = field(default_factory=dict)
    heading: str | None = None
    towards: str | None = None
    reached: str | None = None
    left: str | None = None
    trail: list[tuple[int, int]] = field(default_factory=list)
    clock: int = 0

    def place(self, label: str, pos: tuple[int, int]) -> None:
        self.clock += 1
        self.where[label] = pos
        self.stamp[label] = self.clock

    def occupant(self, pos: tuple[int, int]) -> str | None:
        here = [x for x, p in self.where.items() if p == pos]
        return max(here, key=self.stamp.__getitem__) if here else None

    def step(self, direction: str) -> None:
        dx, dy = OFFSETS[direction]
        self.pos = (self.pos[0] + dx, self.pos[1] + dy)
        self.trail.append(self.pos)
        self.heading = direction


def _normalise(text: str) -> str:
    return " ".join(tokenize(text))


def replay(sentences: Sequence[str]) -> MapState:
    """Reconstruct the traveler's map from sentences, in order."""
    state = MapState()
    state.trail.append(state.pos)
    for raw in sentences:
        s = _normalise(raw)
        if m := _AT.fullmatch(s):
            state.place(m["x"], state.pos)
            state.reached = m["x"]
        elif m := _MOVE.fullmatch(s):
            before = state.occupant(state.pos)
            state.step(m["d"])
            if m["x"]:
                state.place(m["x"], state.pos)
                state.towards = state.reached = m["x"]
                state.left = before
        elif m := _REACH.fullmatch(s):
            state.place(m["x"], state.pos)
            state.reached = m["x"]
            if m["y"]:
                state.left = m["y"]
        elif m := _ON_THE.fullmatch(s):
            if m["y"] in state.where:
                dx, dy = OFFSETS[m["d"]]
                py = state.where[m["y"]]
                state.place(m["x"], (py[0] + dx, py[1] + dy))
        elif m := _ON_MY.fullmatch(s):
            dx, dy = OFFSETS[m["d"]]
            state.place(m["x"], (state.pos[0] + dx, state.pos[1] + dy))
        elif m := _TOWARDS.fullmatch(s):
            state.towards = m["x"]
    return state


_QUESTIONS: list[tuple[re.Pattern, str]] = [
    (re.compile(rf"what is (?P<d>{_W}) of (?:the )?(?P<y>{_W})"), "cell_of"),
    (re.compile(rf"what is on (?:the )?(?P<d>{_W}) of (?:the )?(?P<y>{_W})"), "cell_of"),
    (re.compile(rf"what (?:is|do i see) on my (?P<d>{_W})"), "cell_mine"),
    (re.compile(rf"what is (?:the )?(?P<x>{_W}) (?P<d>{_W}) of"), "anchor_of"),
    (re.compile(rf"where is (?:the )?(?P<x>{_W}) from me"), "dir_me"),
    (re.compile(rf"where is (?:the )?(?P<x>{_W}) from (?:the )?(?P<y>{_W})"), "dir_between"),
    (re.compile(rf"what (?:is|does) (?:the |th )?(?P<x>{_W}) on"), "dir_me"),
    (re.compile(r"where am i at"), "here"),
    (re.compile(r"where did i reach"), "reached"),
    (re.compile(r"where did i leave"), "left"),
    (re.compile(rf"where am i heading (?P<d>{_W}) towards"), "towards"),
    (re.compile(r"what (?:am )?i (?:am )?walking towards"), "towards"),
    (re.compile(r"where am i heading"), "heading"),
]


def _valid_direction(d: str) -> bool:
    parts = d.split("-")
    return 1 <= len(parts) <= 2 and all(p in DIRECTIONS for p in parts)


def answer_from_state(state: MapState, question: str, composite: bool = True) -> str:
    q = _normalise(question.replace("?", " "))
    for pattern, kind in _QUESTIONS:
        m = pattern.fullmatch(q)
        if m is None:
            continue
        g = m.groupdict()
        if "d" in g and kind != "towards" and not _valid_direction(g["d"]):
            continue
        result = _answer(state, kind, g, composite)
        return UNANSWERABLE if result is None else result
    return UNANSWERABLE


def _answer(state: MapState, kind: str, g: dict, composite: bool) -> str | None:
    if kind == "cell_of":
        if g["y"] not in state.where:
            return None
        dx, dy = _offset(g["d"])
        py = state.where[g["y"]]
        return state.occupant((py[0] + dx, py[1] + dy))
    if kind == "cell_mine":
        dx, dy = _offset(g["d"])
        return state.occupant((state.pos[0] + dx, state.pos[1] + dy))
    if kind == "anchor_of":
        if g["x"] not in state.where:
            return None
        dx, dy = _offset(g["d"])
        px = state.where[g["x"]]
        return state.occupant((px[0] - dx, px[1] - dy))
    if kind == "dir_me":
        if g["x"] not in state.where:
            return None
        return relative_direction(state.pos, state.where[g["x"]], composite)
    if kind == "dir_between":
        if g["x"] not in state.where or g["y"] not in state.where:
            return None
        return relative_direction(state.where[g["y"]], state.where[g["x"]], composite)
    if kind == "here":
        return state.occupant(state.pos)
    if kind == "reached":
        return state.reached
    if kind == "left":
        return state.left
    if kind == "towards":
        return state.towards
    if kind == "heading":
        return state.heading
    raise AssertionError(kind)


def oracle_answer(log, question: str | None = None, at: int | None = None, composite: bool = True) -> str:
    """Answer ``question`` (default: the log's final question) from the first
    ``at`` sentences (default: all of them).

    ``log`` is a TravelLog or a plain list of sentences.  Returns the label,
    or ``UNANSWERABLE`` when the text does not pin the answer down.
    """
    sentences = log if isinstance(log, (list, tuple)) else log.sentences
    if question is None:
        question = log.question
    if at is not None:
        sentences = sentences[:at]
    return answer_from_state(replay(sentences), question, composite)
