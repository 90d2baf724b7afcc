"""Memory attention encoder: word-by-word soft attention against the episode
memory and the gated additive memory update.

All functions accept optional leading batch axes: a sentence is (n, d) or
(B, n, d), a memory vector is (d,) or (B, d).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .encoders import init_matrix
from .numerics import Parameter, Tensor, add, matmul, mul, pad_axis, reshape, sigmoid, tanh


@dataclass
class AttentionParams:
    w_x: Parameter
    w_h: Parameter

    @classmethod
    def create(cls, rng: np.random.Generator, d: int) -> "AttentionParams":
        return cls(
            Parameter(init_matrix(rng, (d, d), d), "attention.w_x"),
            Parameter(init_matrix(rng, (d, d), d), "attention.w_h"),
        )

    def parameters(self) -> list[Parameter]:
        return [self.w_x, self.w_h]


@dataclass
class GateParams:
    w_c: Parameter
    w_p: Parameter

    @classmethod
    def create(cls, rng: np.random.Generator, d: int) -> "GateParams":
        return cls(
            Parameter(init_matrix(rng, (d, d), d), "gate.w_c"),
            Parameter(init_matrix(rng, (d, d), d), "gate.w_p"),
        )

    def parameters(self) -> list[Parameter]:
        return [self.w_c, self.w_p]


@dataclass
class EpisodeMemory:
    M: Tensor
    t: int = 0

    @classmethod
    def empty(cls, d: int) -> "EpisodeMemory":
        return cls(Tensor(np.zeros(d)), 0)


def reset(memory: EpisodeMemory) -> EpisodeMemory:
    return EpisodeMemory.empty(memory.M.shape[-1])


@dataclass
class AttentionRecord:
    """Attention for one sentence (or a batch of them).

    ``columns`` holds one row per word: row i is column i of the d x n
    attention matrix.  ``m_flat`` concatenates those columns word by word,
    zero-padded (or truncated) to ``n_max`` words.  ``mask`` marks real words.
    """

    columns: Tensor
    m_flat: Tensor
    mask: np.ndarray = field(repr=False)

    @property
    def m_matrix(self) -> np.ndarray:
        return np.swapaxes(self.columns.data, -1, -2)

    @property
    def m_bar(self) -> np.ndarray:
        """Mean attention over the real words of each sentence."""
        m = self.mask[..., None]
        return (self.columns.data * m).sum(axis=-2) / np.maximum(m.sum(axis=-2), 1.0)

    def m_sum(self) -> np.ndarray:
        return (self.columns.data * self.mask[..., None]).sum(axis=-2)


def soft_attention(H, M, params: AttentionParams, n_max: int, mask=None) -> AttentionRecord:
    """sigmoid(W^x h_i + W^h M) for every word i; the memory term is shared
    by all columns.  Padding positions are zeroed before flattening."""
    n = H.shape[-2]
    if mask is None:
        mask = np.ones(H.shape[:-1])
    mem = matmul(M, params.w_h)
    mem = reshape(mem, (*mem.shape[:-1], 1, mem.shape[-1]))
    cols = sigmoid(add(matmul(H, params.w_x), mem))
    cols = mul(cols, np.asarray(mask, dtype=np.float64)[..., None])
    d = cols.shape[-1]
    flat = pad_axis(cols, -2, n_max)
    flat = reshape(flat, (*flat.shape[:-2], n_max * d))
    return AttentionRecord(cols, flat, np.asarray(mask, dtype=np.float64))


def gate(h_last, M, params: GateParams) -> Tensor:
    return tanh(add(matmul(h_last, params.w_c), matmul(M, params.w_p)))


def memory_update(h_last, memory: EpisodeMemory, params: GateParams) -> tuple[Tensor, EpisodeMemory]:
    """g = tanh(W^C h + W^P M);  M' = h + g * M."""
    g = gate(h_last, memory.M, params)
    M_next = add(h_last, mul(g, memory.M))
    return g, EpisodeMemory(M_next, memory.t + 1)
