"""Per-candidate exact-match features over restaurant knowledge-base fields."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

FIELDS = ("cuisine", "location", "price", "phone", "address", "rating", "party-size")

# Relation names used by the knowledge-base files of the restaurant tasks.
KB_RELATIONS = {
    "R_cuisine": "cuisine",
    "R_location": "location",
    "R_price": "price",
    "R_phone": "phone",
    "R_address": "address",
    "R_rating": "rating",
    "R_number": "party-size",
}

DEFAULT_LEXICON = {
    "cuisine": {
        "british", "cantonese", "french", "indian", "italian", "japanese", "korean", "spanish",
        "thai", "vietnamese", "chinese", "european", "gastropub", "canapes", "mexican",
    },
    "location": {
        "bangkok", "beijing", "bombay", "hanoi", "london", "madrid", "paris", "rome", "seoul",
        "tokyo", "north", "south", "east", "west", "centre",
    },
    "price": {"cheap", "moderate", "expensive"},
    "party-size": {"two", "four", "six", "eight"},
}

_SUFFIX = {"phone": ("_phone", "-phone"), "address": ("_address", "-address")}


@dataclass
class KBLexicon:
    """Token -> field.  Surface suffixes decide phone and address entities."""

    values: dict[str, set[str]] = field(default_factory=lambda: {k: set(v) for k, v in DEFAULT_LEXICON.items()})

    def field_of(self, token: str) -> str | None:
        for name, suffixes in _SUFFIX.items():
            if token.endswith(suffixes):
                return name
        for name in FIELDS:
            if token in self.values.get(name, ()):
                return name
        return None

    @classmethod
    def from_kb(cls, path: str | Path) -> "KBLexicon":
        """Read "<id> <restaurant> <relation> <value>" lines."""
        values: dict[str, set[str]] = {name: set() for name in FIELDS}
        for line in Path(path).read_text("utf-8").splitlines():
            parts = line.split()
            if len(parts) >= 4 and parts[2] in KB_RELATIONS:
                values[KB_RELATIONS[parts[2]]].add(parts[3].lower())
        return cls(values)


def match_features(context_tokens: Iterable[str], candidate_tokens: Iterable[str],
                   lexicon: KBLexicon | None = None) -> np.ndarray:
    """Feature j is 1 iff a field-j token occurs in the candidate and in the
    context (which includes the current utterance)."""
    lexicon = lexicon or KBLexicon()
    context = set(context_tokens)
    out = np.zeros(len(FIELDS), dtype=np.uint8)
    for tok in set(candidate_tokens):
        if tok in context:
            name = lexicon.field_of(tok)
            if name is not None:
                out[FIELDS.index(name)] = 1
    return out


class MatchFeaturizer:
    """Precomputes each candidate's entity tokens so a (K, 7) feature matrix
    costs one set lookup per entity."""

    def __init__(self, candidates_tokens: list[list[str]], lexicon: KBLexicon | None = None):
        lexicon = lexicon or KBLexicon()
        self.n = len(candidates_tokens)
        self.entities: list[tuple[int, str, int]] = []
        for k, toks in enumerate(candidates_tokens):
            for tok in sorted(set(toks)):
                name = lexicon.field_of(tok)
                if name is not None:
                    self.entities.append((k, tok, FIELDS.index(name)))

    def __call__(self, context_tokens: Iterable[str]) -> np.ndarray:
        context = set(context_tokens)
        out = np.zeros((self.n, len(FIELDS)), dtype=np.uint8)
        for k, tok, j in self.entities:
            if tok in context:
                out[k, j] = 1
        return out
