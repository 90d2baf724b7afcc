"""Student: question-sentence encoder, state assembly, Q-network and DQN."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Any, Protocol, Sequence

import numpy as np

from .encoders import LstmLayer, init_matrix, lstm_stack_forward
from .numerics import (
    AdamState,
    ContractError,
    Parameter,
    ShapeError,
    Tape,
    Tensor,
    adam_step,
    add,
    backward,
    concat,
    matmul,
    mse,
    mul,
    no_grad,
    pick,
    reshape,
    tanh,
)

N_MATCH_FEATURES = 7


# -- question-sentence encoder ------------------------------------------------

@dataclass
class QSParams:
    """Interaction function plus the 3-layer question-sentence LSTM stack.

    ``interaction`` is ``"product"`` (elementwise product) or ``"mlp"``
    (one tanh layer over the concatenated pair).
    """

    layers: list[LstmLayer]
    interaction: str = "product"
    w_f: Parameter | None = None
    b_f: Parameter | None = None

    @classmethod
    def create(cls, rng, d: int, n_layers: int = 3, interaction: str = "product") -> "QSParams":
        if interaction not in ("product", "mlp"):
            raise ValueError(f"unknown interaction {interaction!r}")
        layers = [LstmLayer.create(rng, d, d, f"qs.layer{k + 1}") for k in range(n_layers)]
        w_f = b_f = None
        if interaction == "mlp":
            w_f = Parameter(init_matrix(rng, (2 * d, d), d), "qs.interaction.w")
            b_f = Parameter(np.zeros(d), "qs.interaction.b", decay=False)
        return cls(layers, interaction, w_f, b_f)

    def parameters(self) -> list[Parameter]:
        ps = [p for layer in self.layers for p in layer.parameters()]
        if self.interaction == "mlp":
            ps += [self.w_f, self.b_f]
        return ps


def interact(a, b, qs: QSParams) -> Tensor:
    """f(a, b); ``b`` broadcasts against ``a``."""
    if qs.interaction == "product":
        return mul(a, b)
    if a.shape != b.shape:
        b = add(Tensor(np.zeros(a.shape)), b)
    return tanh(add(matmul(concat([a, b], axis=-1), qs.w_f), qs.b_f))


def qs_encode(M, H, h_q, qs: QSParams, mask=None) -> Tensor:
    """o = last hidden of the stack over f(h_i, h_q), started from f(M, h_q).

    Shapes: M (d,) H (n, d) h_q (d,), or with a leading batch axis B.
    """
    if not (M.shape[-1] == H.shape[-1] == h_q.shape[-1]):
        raise ShapeError(f"qs_encode: widths {M.shape}, {H.shape}, {h_q.shape}")
    h0 = interact(M, h_q, qs)
    hq_rows = reshape(h_q, (*h_q.shape[:-1], 1, h_q.shape[-1]))
    tilde = interact(H, hq_rows, qs)
    _, o = lstm_stack_forward(tilde, qs.layers, initial_hidden=h0, mask=mask)
    return o


# -- state ---------------------------------------------------------------------

@dataclass
class AgentState:
    o: Tensor
    m_flat: Tensor | None
    h_q: Tensor

    @property
    def s(self) -> Tensor:
        return assemble_state(self.o, self.m_flat, self.h_q)


def assemble_state(o, m_flat, h_q) -> Tensor:
    """s = [o; m_flat; h_q].  ``m_flat`` is None when attention is ablated."""
    if o.shape[-1] != h_q.shape[-1]:
        raise ShapeError(f"state: o {o.shape} vs h_q {h_q.shape}")
    parts = [o] if m_flat is None else [o, m_flat]
    return concat([*parts, h_q], axis=-1)


def state_width(d: int, n_max: int, attention: bool = True) -> int:
    return d * (n_max + 2) if attention else 2 * d


# -- Q-network -----------------------------------------------------------------

@dataclass
class QNetwork:
    w1: Parameter
    b1: Parameter
    w2: Parameter
    b2: Parameter
    match: dict[str, Parameter] | None = None

    @classmethod
    def create(cls, rng, width: int, hidden: int, n_actions: int, match_features: bool = False,
               prefix: str = "qnet") -> "QNetwork":
        match = None
        if match_features:
            match = {
                "w_s": Parameter(init_matrix(rng, (width, hidden), hidden), f"{prefix}.match.w_s"),
                "w_f": Parameter(init_matrix(rng, (N_MATCH_FEATURES, hidden), hidden), f"{prefix}.match.w_f"),
                "b": Parameter(np.zeros(hidden), f"{prefix}.match.b", decay=False),
                "v": Parameter(init_matrix(rng, (hidden,), hidden), f"{prefix}.match.v"),
            }
        return cls(
            Parameter(init_matrix(rng, (width, hidden), hidden), f"{prefix}.w1"),
            Parameter(np.zeros(hidden), f"{prefix}.b1", decay=False),
            Parameter(init_matrix(rng, (hidden, n_actions), hidden), f"{prefix}.w2"),
            Parameter(np.zeros(n_actions), f"{prefix}.b2", decay=False),
            match,
        )

    @property
    def width(self) -> int:
        return self.w1.shape[0]

    @property
    def n_actions(self) -> int:
        return self.w2.shape[1]

    def parameters(self) -> list[Parameter]:
        ps = [self.w1, self.b1, self.w2, self.b2]
        if self.match:
            ps += list(self.match.values())
        return ps


def q_values(s, net: QNetwork, features=None) -> Tensor:
    """layer2(tanh(layer1(s))); with match features, a per-candidate score
    v . tanh(W_s s + W_f phi(a) + b) is added to each action's value."""
    if s.shape[-1] != net.width:
        raise ShapeError(f"Q-network expects state width {net.width}, got {s.shape[-1]}")
    q = add(matmul(tanh(add(matmul(s, net.w1), net.b1)), net.w2), net.b2)
    if net.match is not None and features is not None:
        feats = np.asarray(features, dtype=np.float64)
        hs = matmul(s, net.match["w_s"])
        hs = reshape(hs, (*hs.shape[:-1], 1, hs.shape[-1]))
        z = tanh(add(add(matmul(Tensor(feats), net.match["w_f"]), hs), net.match["b"]))
        q = add(q, matmul(z, net.match["v"]))
    return q


class QFunction(Protocol):
    """Anything the DQN update can train: maps stored states to Q-values."""

    def q_batch(self, states: Sequence[Any]) -> Tensor: ...

    def parameters(self) -> list[Parameter]: ...


class VectorQ:
    """A plain Q-network over fixed state vectors (used for sanity MDPs)."""

    def __init__(self, net: QNetwork):
        self.net = net

    @classmethod
    def create(cls, rng, width: int, hidden: int, n_actions: int) -> "VectorQ":
        return cls(QNetwork.create(rng, width, hidden, n_actions))

    def q_batch(self, states) -> Tensor:
        return q_values(Tensor(np.stack([np.asarray(s, dtype=np.float64) for s in states])), self.net)

    def parameters(self) -> list[Parameter]:
        return self.net.parameters()


# -- policy --------------------------------------------------------------------

def epsilon_greedy(q: np.ndarray, epsilon: float, rng: np.random.Generator) -> int:
    if not 0.0 <= epsilon <= 1.0:
        raise ContractError(f"epsilon must lie in [0, 1], got {epsilon}")
    q = np.asarray(q)
    if q.size == 0:
        raise ContractError("empty action set")
    if rng.random() < epsilon:
        return int(rng.integers(q.size))
    return int(np.argmax(q))  # first maximum: lowest index wins ties


def select_action(state, net: QFunction, epsilon: float, rng: np.random.Generator) -> int:
    with no_grad():
        q = net.q_batch([state]).data[0]
    return epsilon_greedy(q, epsilon, rng)


@dataclass
class EpsilonSchedule:
    """Linear decay from ``start`` to ``end`` over ``decay_steps``, then flat."""

    start: float = 0.1
    end: float = 0.01
    decay_steps: int = 10_000

    def __call__(self, step: int) -> float:
        if self.decay_steps <= 0 or step >= self.decay_steps:
            return self.end
        return self.start + (self.end - self.start) * step / self.decay_steps

    def table(self, total_steps: int, every: int = 1000) -> list[tuple[int, float]]:
        return [(s, self(s)) for s in range(0, total_steps + 1, every)]


# -- replay --------------------------------------------------------------------

@dataclass
class Transition:
    s: Any
    a: int
    r: float
    s_next: Any
    terminal: bool


class ReplayBuffer:
    """Fixed-capacity ring buffer; the oldest transition is evicted first."""

    def __init__(self, capacity: int = 10_000):
        self.capacity = capacity
        self._items: deque[Transition] = deque(maxlen=capacity)

    def __len__(self) -> int:
        return len(self._items)

    def __getitem__(self, i: int) -> Transition:
        return self._items[i]

    def add(self, transition: Transition) -> None:
        self._items.append(transition)

    def sample_indices(self, batch_size: int, rng: np.random.Generator) -> np.ndarray:
        return rng.choice(len(self._items), size=batch_size, replace=False)

    def sample(self, batch_size: int, rng: np.random.Generator) -> list[Transition]:
        return [self._items[i] for i in self.sample_indices(batch_size, rng)]

    def items(self) -> list[Transition]:
        return list(self._items)


# -- learning ------------------------------------------------------------------

@dataclass
class DQNStats:
    updates: int = 0
    skipped: int = 0
    syncs: int = 0
    losses: list[float] = field(default_factory=list)


def td_targets(batch: Sequence[Transition], target_net: QFunction, gamma: float) -> np.ndarray:
    y = np.array([t.r for t in batch], dtype=np.float64)
    live = [i for i, t in enumerate(batch) if not t.terminal]
    if live and gamma != 0.0:
        with no_grad():
            q_next = target_net.q_batch([batch[i].s_next for i in live]).data
        y[live] += gamma * q_next.max(axis=1)
    return y


def dqn_update(
    buffer: ReplayBuffer,
    net: QFunction,
    target_net: QFunction,
    gamma: float,
    batch_size: int,
    rng: np.random.Generator,
    adam: AdamState,
    stats: DQNStats | None = None,
) -> float | None:
    """One minibatch update of ``net``; returns the loss, or None when the
    buffer holds fewer than ``batch_size`` transitions."""
    if len(buffer) < batch_size:
        if stats is not None:
            stats.skipped += 1
        return None
    batch = buffer.sample(batch_size, rng)
    y = td_targets(batch, target_net, gamma)
    params = net.parameters()
    with Tape() as tape:
        q = net.q_batch([t.s for t in batch])
        loss = mse(pick(q, [t.a for t in batch]), y)
    backward(tape, loss)
    adam_step(params, adam)
    if stats is not None:
        stats.updates += 1
        stats.losses.append(loss.item())
    return loss.item()


def sync_target(net: QFunction, target_net: QFunction) -> None:
    src = {p.name: p for p in net.parameters()}
    for p in target_net.parameters():
        p.data = src[p.name].data.copy()
