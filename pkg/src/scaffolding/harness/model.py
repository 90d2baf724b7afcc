"""The full student network and its two evaluation paths.

``ScaffoldNet.q_batch`` recomputes everything a replay minibatch needs from
token ids: it encodes every distinct sentence once, scans the gated memory
over each item's history, then runs attention, the question-sentence stack
and the Q-network.  Gradients therefore flow through the whole episode
memory.  ``EpisodeView`` is the acting path: it folds one sentence at a time
into a cached memory so an episode costs O(T) encodings instead of O(T^2).
Both paths are built from the same primitives and agree to rounding.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..encoders import LstmLayer, embedding_table, pad_ids
from ..memory import AttentionParams, AttentionRecord, GateParams, gate, soft_attention
from ..numerics import Parameter, ShapeError, Tensor, add, blend, embed, index, mul, no_grad
from ..student import QNetwork, QSParams, assemble_state, q_values, qs_encode, state_width


@dataclass(frozen=True)
class ModelSpec:
    vocab_size: int
    n_actions: int
    d: int = 128
    n_max: int = 12
    hidden: int = 128
    attention: bool = True
    interaction: str = "product"
    qs_layers: int = 3
    match_features: bool = False

    @property
    def width(self) -> int:
        return state_width(self.d, self.n_max, self.attention)


@dataclass(frozen=True, eq=False)
class StateKey:
    """Everything needed to rebuild a state from parameters.

    ``stream`` is the episode's list of memory sentences (token-id tuples,
    shared by every key of the episode); the first ``n_mem`` of them have
    been folded into memory.  ``features`` holds per-candidate match
    features (K x 7) on the dialog track.
    """

    stream: Sequence[tuple[int, ...]]
    n_mem: int
    current: tuple[int, ...]
    question: tuple[int, ...]
    features: np.ndarray | None = None


class ScaffoldNet:
    def __init__(self, spec: ModelSpec, rng: np.random.Generator):
        d = spec.d
        self.spec = spec
        self.embedding = embedding_table(rng, spec.vocab_size, d)
        self.sentence = LstmLayer.create(rng, d, d, "sentence")
        self.question = LstmLayer.create(rng, d, d, "question")
        self.attention = AttentionParams.create(rng, d) if spec.attention else None
        self.gate = GateParams.create(rng, d)
        self.qs = QSParams.create(rng, d, spec.qs_layers, spec.interaction)
        self.qnet = QNetwork.create(rng, spec.width, spec.hidden, spec.n_actions, spec.match_features)

    def parameters(self) -> list[Parameter]:
        ps = [self.embedding, *self.sentence.parameters(), *self.question.parameters()]
        if self.attention is not None:
            ps += self.attention.parameters()
        return ps + self.gate.parameters() + self.qs.parameters() + self.qnet.parameters()

    def named_parameters(self) -> dict[str, Parameter]:
        return {p.name: p for p in self.parameters()}

    def clone(self) -> "ScaffoldNet":
        twin = copy.copy(self)
        twin.embedding = _copy_param(self.embedding)
        twin.sentence = LstmLayer(*map(_copy_param, self.sentence.parameters()))
        twin.question = LstmLayer(*map(_copy_param, self.question.parameters()))
        if self.attention is not None:
            twin.attention = AttentionParams(*map(_copy_param, self.attention.parameters()))
        twin.gate = GateParams(*map(_copy_param, self.gate.parameters()))
        twin.qs = QSParams(
            [LstmLayer(*map(_copy_param, layer.parameters())) for layer in self.qs.layers],
            self.qs.interaction,
            _copy_param(self.qs.w_f) if self.qs.w_f is not None else None,
            _copy_param(self.qs.b_f) if self.qs.b_f is not None else None,
        )
        q = self.qnet
        twin.qnet = QNetwork(
            *map(_copy_param, (q.w1, q.b1, q.w2, q.b2)),
            {k: _copy_param(v) for k, v in q.match.items()} if q.match else None,
        )
        return twin

    def load_arrays(self, arrays: dict[str, np.ndarray]) -> None:
        for name, p in self.named_parameters().items():
            if arrays[name].shape != p.shape:
                raise ShapeError(f"{name}: stored {arrays[name].shape} vs model {p.shape}")
            p.data = np.array(arrays[name], dtype=np.float64)

    # -- shared pieces ---------------------------------------------------------

    def encode_sentences(self, seqs: Sequence[Sequence[int]]):
        ids, mask = pad_ids(seqs)
        H = self.sentence(embed(self.embedding, ids), mask)
        return H, mask, index(H, (slice(None), -1))

    def encode_questions(self, seqs: Sequence[Sequence[int]]) -> Tensor:
        ids, mask = pad_ids(seqs)
        return index(self.question(embed(self.embedding, ids), mask), (slice(None), -1))

    def attend(self, H, M, mask) -> AttentionRecord | None:
        if self.attention is None:
            return None
        return soft_attention(H, M, self.attention, self.spec.n_max, mask)

    def head(self, H, mask, M, h_q, record: AttentionRecord | None, features=None) -> Tensor:
        """Question-sentence encoding, state assembly and Q-values."""
        o = qs_encode(M, H, h_q, self.qs, mask)
        s = assemble_state(o, None if record is None else record.m_flat, h_q)
        return q_values(s, self.qnet, features)

    def fold(self, h_last, M) -> Tensor:
        g = gate(h_last, M, self.gate)
        return add(h_last, mul(g, M))

    # -- batched path -----------------------------------------------------------

    def q_batch(self, keys: Sequence[StateKey]) -> Tensor:
        rows: dict[tuple[int, ...], int] = {}

        def row(ids) -> int:
            return rows.setdefault(tuple(ids), len(rows))

        B = len(keys)
        depth = max(k.n_mem for k in keys)
        mem_idx = np.zeros((B, depth), dtype=np.int64)
        mem_mask = np.zeros((B, depth))
        for b, k in enumerate(keys):
            for j in range(k.n_mem):
                mem_idx[b, j] = row(k.stream[j])
            mem_mask[b, : k.n_mem] = 1.0
        cur = np.array([row(k.current) for k in keys], dtype=np.int64)
        H_all, mask_all, h_all = self.encode_sentences(list(rows))

        M = Tensor(np.zeros((B, self.spec.d)))
        for j in range(depth):
            M = blend(mem_mask[:, j], self.fold(index(h_all, mem_idx[:, j]), M), M)

        H = index(H_all, cur)
        mask = mask_all[cur]
        h_q = self.encode_questions([k.question for k in keys])
        features = None
        if self.spec.match_features:
            features = np.stack([k.features for k in keys]).astype(np.float64)
        return self.head(H, mask, M, h_q, self.attend(H, M, mask), features)


def _copy_param(p: Parameter) -> Parameter:
    return Parameter(p.data.copy(), p.name, p.decay)


class EpisodeView:
    """Incremental, gradient-free evaluation of one episode."""

    def __init__(self, net: ScaffoldNet, stream: Sequence[tuple[int, ...]]):
        self.net = net
        self.stream = stream
        self.n_mem = 0
        self.M = Tensor(np.zeros((1, net.spec.d)))
        self._sentence_cache: dict[tuple[int, ...], tuple] = {}

    def _encode(self, ids):
        ids = tuple(ids)
        hit = self._sentence_cache.get(ids)
        if hit is None:
            with no_grad():
                hit = self._sentence_cache[ids] = self.net.encode_sentences([ids])
        return hit

    def advance(self, upto: int) -> None:
        """Fold memory sentences until ``upto`` of them are in memory."""
        with no_grad():
            while self.n_mem < upto:
                _, _, h = self._encode(self.stream[self.n_mem])
                self.M = self.net.fold(h, self.M)
                self.n_mem += 1

    def attention(self, current) -> AttentionRecord | None:
        H, mask, _ = self._encode(current)
        with no_grad():
            return self.net.attend(H, self.M, mask)

    def q(self, key: StateKey) -> np.ndarray:
        self.advance(key.n_mem)
        if key.n_mem != self.n_mem:
            raise ValueError(f"view holds {self.n_mem} memory sentences, key needs {key.n_mem}")
        H, mask, _ = self._encode(key.current)
        with no_grad():
            h_q = self.net.encode_questions([key.question])
            features = None if key.features is None or not self.net.spec.match_features else key.features[None].astype(np.float64)
            return self.net.head(H, mask, self.M, h_q, self.net.attend(H, self.M, mask), features).data[0]

    @property
    def memory_norm(self) -> float:
        return float(np.abs(self.M.data).max())
