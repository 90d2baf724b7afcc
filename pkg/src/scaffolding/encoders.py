"""Tokenization, vocabulary, embeddings and the LSTM sentence/question encoders."""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .lexicon import MULTIWORD, STOP_WORDS
from .numerics import (
    ContractError,
    Parameter,
    ShapeError,
    Tensor,
    embed,
    index,
    lstm_sequence,
    reshape,
)

PAD, UNK = 0, 1
_RESERVED = ("<pad>", "<unk>")
_TOKEN = re.compile(r"[a-z0-9_'<>-]+")
_MULTIWORD = [(re.compile(r"\b" + m.replace("-", r"[\s-]+") + r"\b"), m) for m in MULTIWORD]


def tokenize(text: str, stop_words: Iterable[str] | None = None) -> list[str]:
    """Lowercase word tokens; multi-word attraction names become one token."""
    text = text.lower()
    for pattern, joined in _MULTIWORD:
        text = pattern.sub(joined, text)
    tokens = _TOKEN.findall(text)
    if stop_words:
        stop = set(stop_words)
        tokens = [t for t in tokens if t not in stop]
    return tokens


def travel_tokens(text: str) -> list[str]:
    return tokenize(text, STOP_WORDS)


class Vocabulary:
    """Token <-> index map with PAD = 0 and UNK = 1 reserved."""

    def __init__(self, tokens: Iterable[str] = ()):
        self._itos: list[str] = list(_RESERVED)
        self._stoi: dict[str, int] = {t: i for i, t in enumerate(self._itos)}
        self.frozen = False
        for t in tokens:
            self.add(t)

    def __len__(self) -> int:
        return len(self._itos)

    def __contains__(self, token: str) -> bool:
        return token in self._stoi

    def add(self, token: str) -> int:
        if token in self._stoi:
            return self._stoi[token]
        if self.frozen:
            raise ContractError(f"vocabulary is frozen; cannot add {token!r}")
        self._stoi[token] = len(self._itos)
        self._itos.append(token)
        return self._stoi[token]

    def freeze(self) -> "Vocabulary":
        self.frozen = True
        return self

    def index(self, token: str) -> int:
        return self._stoi.get(token, UNK)

    def token(self, i: int) -> str:
        return self._itos[i]

    def encode(self, tokens: Sequence[str]) -> list[int]:
        return [self._stoi.get(t, UNK) for t in tokens]

    def decode(self, ids: Sequence[int]) -> list[str]:
        return [self._itos[i] for i in ids]

    def tokens(self) -> list[str]:
        return list(self._itos)

    def save(self, path: str | Path) -> None:
        """One token per line; line k holds index k + 2 (PAD/UNK are implicit)."""
        Path(path).write_text("".join(t + "\n" for t in self._itos[len(_RESERVED):]), "utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Vocabulary":
        lines = Path(path).read_text("utf-8").splitlines()
        return cls(lines).freeze()


def init_matrix(rng: np.random.Generator, shape: tuple[int, ...], d: int) -> np.ndarray:
    """Zero mean, standard deviation 1/sqrt(d)."""
    return rng.normal(0.0, 1.0 / np.sqrt(d), size=shape)


def embedding_table(rng: np.random.Generator, vocab_size: int, d: int, name: str = "embedding") -> Parameter:
    return Parameter(init_matrix(rng, (vocab_size, d), d), name=name, decay=False)


@dataclass
class LstmLayer:
    """Input/forget/output/candidate gates stored column-blocked in two
    fused matrices: ``w_x`` (d_in x 4d) and ``w_h`` (d x 4d)."""

    w_x: Parameter
    w_h: Parameter
    bias: Parameter

    @classmethod
    def create(cls, rng: np.random.Generator, d_in: int, d: int, name: str) -> "LstmLayer":
        bias = np.zeros(4 * d)
        bias[d : 2 * d] = 1.0  # forget gate
        return cls(
            Parameter(init_matrix(rng, (d_in, 4 * d), d), f"{name}.w_x"),
            Parameter(init_matrix(rng, (d, 4 * d), d), f"{name}.w_h"),
            Parameter(bias, f"{name}.bias", decay=False),
        )

    @property
    def d_in(self) -> int:
        return self.w_x.shape[0]

    @property
    def d(self) -> int:
        return self.w_h.shape[0]

    def parameters(self) -> list[Parameter]:
        return [self.w_x, self.w_h, self.bias]

    def __call__(self, x, mask, h0=None) -> Tensor:
        if x.shape[-1] != self.d_in:
            raise ShapeError(f"LSTM layer expects input size {self.d_in}, got {x.shape[-1]}")
        return lstm_sequence(x, mask, self.w_x, self.w_h, self.bias, h0)


@dataclass
class SentenceEncoding:
    H: Tensor  # n x d
    h_last: Tensor
    n: int


@dataclass
class QuestionEncoding:
    h_q: Tensor
    n: int


def pad_ids(seqs: Sequence[Sequence[int]], min_len: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Right-pad id lists with PAD; returns (ids, mask), both (B, L)."""
    L = max([min_len, *(len(s) for s in seqs)])
    ids = np.full((len(seqs), L), PAD, dtype=np.int64)
    mask = np.zeros((len(seqs), L))
    for i, s in enumerate(seqs):
        ids[i, : len(s)] = s
        mask[i, : len(s)] = 1.0
    return ids, mask


def lstm_stack_forward(inputs, layers: Sequence[LstmLayer], initial_hidden=None, mask=None):
    """Run stacked layers; only layer 1 starts from ``initial_hidden``.

    ``inputs`` is (n, d) for one sequence or (B, L, d) for a padded batch.
    Returns (outputs, final hidden) with matching batch structure.
    """
    single = inputs.ndim == 2
    x = inputs
    if single:
        x = reshape(inputs, (1, *inputs.shape))
        if initial_hidden is not None:
            initial_hidden = reshape(initial_hidden, (1, *initial_hidden.shape))
    if mask is None:
        mask = np.ones(x.shape[:2])
    for k in range(1, len(layers)):
        if layers[k].d_in != layers[k - 1].d:
            raise ShapeError(
                f"layer {k} expects input {layers[k].d_in}, layer {k - 1} emits {layers[k - 1].d}"
            )
    for k, layer in enumerate(layers):
        x = layer(x, mask, initial_hidden if k == 0 else None)
    last = index(x, (slice(None), -1))
    if single:
        return index(x, 0), index(last, 0)
    return x, last


def encode_batch(id_lists: Sequence[Sequence[int]], table: Parameter, layer: LstmLayer):
    """Encode a padded batch.  Returns (H (B, L, d), mask (B, L), h_last (B, d))."""
    ids, mask = pad_ids(id_lists)
    H = layer(embed(table, ids), mask)
    return H, mask, index(H, (slice(None), -1))


def encode_sentence(ids: Sequence[int], table: Parameter, layer: LstmLayer) -> SentenceEncoding:
    if len(ids) == 0:
        raise ContractError("cannot encode an empty sentence")
    H, _, h_last = encode_batch([ids], table, layer)
    return SentenceEncoding(index(H, 0), index(h_last, 0), len(ids))


def encode_question(ids: Sequence[int], table: Parameter, layer: LstmLayer) -> QuestionEncoding:
    if len(ids) == 0:
        raise ContractError("cannot encode an empty question")
    _, _, h_last = encode_batch([ids], table, layer)
    return QuestionEncoding(index(h_last, 0), len(ids))
