"""Synthetic restaurant-reservation dialogs in the bAbI Task-1 text format.

The bot greets, collects four slots (cuisine, location, party size, price)
by asking for whichever ones the user's request left out, and closes with
an ``api_call``.  Used when the official files are not on disk; the output
is indistinguishable in format from the official Task-1 files.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dialog import CandidateSet, Dialog, DialogTurn

SILENCE = "<SILENCE>"

GREETINGS = ("hi", "hello", "good morning", "hey there")
OPENER = "hello what can i help you with today"
ON_IT = "i'm on it"
LOOKING = "ok let me look into some options for you"
ASK = {
    "cuisine": "any preference on a type of cuisine",
    "location": "where should it be",
    "people": "how many people would be in your party",
    "price": "which price range are looking for",
}
REQUESTS = (
    "can you book a table",
    "may i have a table",
    "i'd like to book a table",
    "can you make a restaurant reservation",
)
MENTION = {
    "cuisine": ("with {} food", "with {} cuisine"),
    "location": ("in {}",),
    "people": ("for {} people", "for {}"),
    "price": ("in a {} price range",),
}
ANSWER = {
    "cuisine": ("{} food", "i love {} food", "with {} cuisine"),
    "location": ("{} please", "in {}", "{}"),
    "people": ("we will be {}", "{} people", "for {} please"),
    "price": ("{} price range please", "i am looking for a {} restaurant", "{}"),
}
SLOTS = ("cuisine", "location", "people", "price")


@dataclass(frozen=True)
class SlotLexicon:
    cuisine: tuple[str, ...] = ("italian", "french", "indian", "spanish")
    location: tuple[str, ...] = ("rome", "paris", "london", "madrid")
    people: tuple[str, ...] = ("two", "four", "six")
    price: tuple[str, ...] = ("cheap", "moderate", "expensive")

    def values(self, slot: str) -> tuple[str, ...]:
        return getattr(self, slot)


def api_call(goal: dict[str, str]) -> str:
    return "api_call " + " ".join(goal[s] for s in SLOTS)


def all_responses(lexicon: SlotLexicon = SlotLexicon()) -> CandidateSet:
    """Every response the generator can emit, fixed utterances first."""
    cands = CandidateSet([OPENER, ON_IT, *ASK.values(), LOOKING])
    for c in lexicon.cuisine:
        for l in lexicon.location:
            for p in lexicon.people:
                for r in lexicon.price:
                    cands.add(api_call({"cuisine": c, "location": l, "people": p, "price": r}))
    return cands


def _pick(rng: np.random.Generator, options):
    return options[int(rng.integers(len(options)))]


def generate_dialog(rng: np.random.Generator, lexicon: SlotLexicon = SlotLexicon()) -> Dialog:
    goal = {s: _pick(rng, lexicon.values(s)) for s in SLOTS}
    stated = [s for s in SLOTS if rng.random() < 0.5]
    lines: list[tuple[str, str]] = [(_pick(rng, GREETINGS), OPENER)]
    request = _pick(rng, REQUESTS) + "".join(" " + _pick(rng, MENTION[s]).format(goal[s]) for s in stated)
    missing = [s for s in SLOTS if s not in stated]
    if missing:
        lines.append((request, ON_IT))
        user = SILENCE
        for s in missing:
            lines.append((user, ASK[s]))
            user = _pick(rng, ANSWER[s]).format(goal[s])
        lines.append((user, LOOKING))
    else:
        lines.append((request, LOOKING))
    lines.append((SILENCE, api_call(goal)))
    return Dialog([DialogTurn(u, b, i + 1) for i, (u, b) in enumerate(lines)])


def generate_dialogs(count: int, seed: int, lexicon: SlotLexicon = SlotLexicon()) -> list[Dialog]:
    rng = np.random.default_rng(seed)
    return [generate_dialog(rng, lexicon) for _ in range(count)]
