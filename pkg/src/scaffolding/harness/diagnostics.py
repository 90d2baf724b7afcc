"""Self-checks: a finite-difference check of the whole student network and
a deterministic chain MDP for the DQN learner."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..numerics import AdamState, GradCheckReport, Parameter, grad_check, mse, no_grad, pick
from ..student import (
    EpsilonSchedule,
    QNetwork,
    ReplayBuffer,
    Transition,
    VectorQ,
    dqn_update,
    select_action,
    sync_target,
)
from .model import ModelSpec, ScaffoldNet, StateKey


def full_model_grad_check(seed: int, d: int = 8, n_sentences: int = 5, n_max: int = 6, n_actions: int = 9,
                          vocab: int = 20, batch: int = 3, interaction: str = "product",
                          tolerance: float = 1e-4) -> GradCheckReport:
    """Random episode, random targets; loss is the TD-style MSE on one
    chosen action per state.  Every parameter is checked, including the
    embeddings, both encoders, attention, gate, the QS stack and Q-net.
    Sentences vary in length and exceed ``n_max`` so padding and
    truncation of the attention vector are both exercised."""
    rng = np.random.default_rng(seed)
    spec = ModelSpec(vocab_size=vocab, n_actions=n_actions, d=d, n_max=n_max, hidden=d, interaction=interaction)
    net = ScaffoldNet(spec, rng)

    def sentence():
        return tuple(int(i) for i in rng.integers(2, vocab, size=int(rng.integers(2, n_max + 3))))

    stream = [sentence() for _ in range(n_sentences)]
    keys = [
        StateKey(stream, int(rng.integers(1, n_sentences + 1)), sentence(), sentence())
        for _ in range(batch)
    ]
    actions = [int(a) for a in rng.integers(0, n_actions, size=batch)]
    targets = rng.normal(size=batch)

    def closure():
        return mse(pick(net.q_batch(keys), actions), targets)

    return grad_check(closure, net.parameters(), tolerance=tolerance)


# -- deterministic chain MDP ---------------------------------------------------

LEFT, RIGHT = 0, 1


@dataclass
class ChainMDP:
    """States 0..n-1 in a row, start at 0.  LEFT from 0 stays put; RIGHT from
    the last state ends the episode with reward 1.  Every other step pays 0."""

    n: int = 5

    def step(self, s: int, a: int) -> tuple[int | None, float]:
        if a == RIGHT:
            return (None, 1.0) if s == self.n - 1 else (s + 1, 0.0)
        return max(s - 1, 0), 0.0

    def encode(self, s: int) -> np.ndarray:
        return np.eye(self.n)[s]


def value_iteration(mdp: ChainMDP, gamma: float, sweeps: int = 200) -> np.ndarray:
    """Exact optimal Q table, shape (n, 2)."""
    Q = np.zeros((mdp.n, 2))
    for _ in range(sweeps):
        new = np.empty_like(Q)
        for s in range(mdp.n):
            for a in (LEFT, RIGHT):
                nxt, r = mdp.step(s, a)
                new[s, a] = r + (0.0 if nxt is None else gamma * Q[nxt].max())
        Q = new
    return Q


@dataclass
class ChainResult:
    q: np.ndarray
    optimum: np.ndarray
    steps: int

    @property
    def greedy(self) -> np.ndarray:
        return np.argmax(self.q, axis=1)

    @property
    def policy_matches(self) -> bool:
        return bool(np.array_equal(self.greedy, np.argmax(self.optimum, axis=1)))


def train_chain(seed: int, steps: int = 20_000, gamma: float = 0.9, n: int = 5, hidden: int = 16,
                lr: float = 0.001, batch: int = 32, n_sync: int = 100, warmup: int = 100,
                max_episode: int = 30) -> ChainResult:
    """DQN (replay, target network, one update per step) on the chain."""
    mdp = ChainMDP(n)
    rng = np.random.default_rng(seed)
    net = VectorQ.create(rng, n, hidden, 2)
    target = VectorQ(QNetwork(*(Parameter(p.data.copy(), p.name, p.decay) for p in net.parameters())))
    adam = AdamState(lr=lr, weight_decay=0.0)
    buffer = ReplayBuffer(10_000)
    schedule = EpsilonSchedule(1.0, 0.1, steps // 2)
    s, t, updates = 0, 0, 0
    for k in range(steps):
        a = select_action(mdp.encode(s), net, schedule(k), rng)
        nxt, r = mdp.step(s, a)
        buffer.add(Transition(mdp.encode(s), a, r, None if nxt is None else mdp.encode(nxt), nxt is None))
        t += 1
        if nxt is None or t >= max_episode:  # time-outs are not terminal transitions
            s, t = 0, 0
        else:
            s = nxt
        if len(buffer) >= max(warmup, batch):
            dqn_update(buffer, net, target, gamma, batch, rng, adam)
            updates += 1
            if updates % n_sync == 0:
                sync_target(net, target)
    with no_grad():
        q = net.q_batch([mdp.encode(i) for i in range(n)]).data
    return ChainResult(q, value_iteration(mdp, gamma), steps)
