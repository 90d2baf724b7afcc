"""The training loop: episodes, teacher interaction, replay and evaluation."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..environment import Directive, EpisodeRunner, RewardKind, finish, skip, step
from ..numerics import AdamState, TrainingError, no_grad
from ..student import EpsilonSchedule, ReplayBuffer, Transition, dqn_update, epsilon_greedy, sync_target
from ..teacher import Curriculum, ImportanceTracker, generate_qa_dialog, importance, update_episode_attention
from .config import RunConfig
from .metrics import MetricsLog, MetricsRow
from .model import EpisodeView, ModelSpec, ScaffoldNet, StateKey
from .tasks import DialogEpisode, TravelEpisode


@dataclass
class TraceRow:
    sentence_id: int
    sentence: str
    importance: float | None
    question: str
    action: str
    reward: float | None

    def cells(self) -> list[str]:
        imp = "" if self.importance is None else f"{self.importance:.3f}"
        reward = "" if self.reward is None else f"{self.reward:g}"
        return [f"{self.sentence_id}: {self.sentence}", imp, self.question, self.action, reward]


@dataclass
class Window:
    """Counters accumulated between two evaluations."""

    losses: list[float] = field(default_factory=list)
    memory: list[float] = field(default_factory=list)
    asked: int = 0
    correct: int = 0
    eligible: int = 0
    teacher_used: int = 0
    returns: list[float] = field(default_factory=list)


def evaluate_items(net: ScaffoldNet, items: list[tuple[StateKey, int]], chunk: int = 64) -> float:
    """Greedy error rate (percent) over (state, gold action) pairs."""
    if not items:
        return float("nan")
    wrong = 0
    with no_grad():
        for i in range(0, len(items), chunk):
            part = items[i : i + chunk]
            q = net.q_batch([k for k, _ in part]).data
            wrong += int(np.sum(np.argmax(q, axis=1) != np.array([g for _, g in part])))
    return 100.0 * wrong / len(items)


def model_spec(config: RunConfig, task) -> ModelSpec:
    return ModelSpec(
        vocab_size=len(task.vocab),
        n_actions=task.n_actions,
        d=config.d,
        n_max=config.n_max_words,
        hidden=config.hidden_size,
        attention=config.variant != "SN-no-att",
        interaction=config.interaction,
        qs_layers=config.qs_layers,
        match_features=config.match_features and config.track == "dialog",
    )


class Trainer:
    """One training context: a single restart at a single learning rate."""

    def __init__(self, config: RunConfig, task, restart: int = 0, lr: float | None = None,
                 metrics: MetricsLog | None = None):
        self.config = config
        self.task = task
        self.restart = restart
        self.lr = config.lr_grid[0] if lr is None else lr
        init_seq, run_seq = np.random.SeedSequence([config.seed, restart, _lr_key(self.lr)]).spawn(2)
        self.net = ScaffoldNet(model_spec(config, task), np.random.default_rng(init_seq))
        self.target = self.net.clone()
        self.rng = np.random.default_rng(run_seq)
        self.adam = AdamState(lr=self.lr, weight_decay=config.weight_decay)
        self.buffer = ReplayBuffer(config.buffer)
        self.schedule = EpsilonSchedule(config.eps_start, config.eps_end, config.epsilon_decay_steps)
        self.curriculum = Curriculum(window=config.plateau_window, min_improvement=config.plateau_min)
        self.metrics = metrics
        self.steps = self.episodes = self.updates = self.syncs = 0
        self.eligible_turns = self.teacher_turns = 0
        self.epoch = 0
        self.order = np.arange(0)
        self.position = 0
        self.pending: tuple[StateKey, int, float] | None = None
        self.best: dict | None = None
        self.window = Window()
        self.loss_trace: list[float] = []
        self.action_trace: list[int] = []

    # -- acting ----------------------------------------------------------------

    @property
    def labels(self) -> list[str]:
        return self.task.labels

    def epsilon(self) -> float:
        return self.schedule(self.steps)

    def _act(self, view: EpisodeView, key: StateKey, learn: bool, rng) -> int:
        if learn and self.pending is not None:
            s, a, r = self.pending
            self.buffer.add(Transition(s, a, r, key, False))
            self.pending = None
        eps = self.epsilon() if learn else 0.0
        return epsilon_greedy(view.q(key), eps, rng)

    def _reward(self, key: StateKey, a: int, r: float, terminal: bool, learn: bool) -> None:
        if not learn:
            return
        if terminal:
            self.buffer.add(Transition(key, a, r, None, True))
        else:
            self.pending = (key, a, r)
        self.steps += 1
        self.action_trace.append(a)
        self._learn()

    def _learn(self) -> None:
        cfg = self.config
        if len(self.buffer) < max(cfg.warmup, cfg.batch):
            return
        loss = dqn_update(self.buffer, self.net, self.target, cfg.gamma, cfg.batch, self.rng, self.adam)
        if not np.isfinite(loss):
            raise TrainingError(f"non-finite loss at step {self.steps}")
        self.updates += 1
        self.window.losses.append(loss)
        self.loss_trace.append(loss)
        if self.updates % cfg.n_sync == 0:
            sync_target(self.net, self.target)
            self.syncs += 1

    def play(self, episode, learn: bool = True, trace: list[TraceRow] | None = None, rng=None):
        rng = self.rng if rng is None else rng
        if isinstance(episode, TravelEpisode):
            return self._play_travel(episode, learn, trace, rng)
        return self._play_dialog(episode, learn, trace, rng)

    def _runner(self, T: int) -> EpisodeRunner:
        return EpisodeRunner(T, self.config.max_trials, signed_terminal=self.config.signed_terminal)

    def _play_travel(self, ep: TravelEpisode, learn: bool, trace, rng) -> EpisodeRunner:
        cfg = self.config
        teacher = self.task.teacher
        phase = self.curriculum.phase
        T = len(ep)
        runner = self._runner(T)
        view = EpisodeView(self.net, ep.stream)
        tracker = ImportanceTracker.zeros(cfg.d)
        for t in range(T):
            view.advance(t)
            record = view.attention(ep.stream[t])
            value = None
            if record is not None:
                m_bar = record.m_bar[0] if cfg.attention_summary == "mean" else record.m_sum()[0]
                value = importance(m_bar, tracker)
                tracker = update_episode_attention(tracker, m_bar)
            steering = value if cfg.variant == "SN" else None
            while not runner.terminal and runner.cursor == t:
                qa = teacher.generate(ep.sentences[: t + 1], steering, phase, rng)
                if qa is None:
                    skip(runner)
                    if trace is not None:
                        trace.append(TraceRow(t + 1, ep.sentences[t], value, "", "", None))
                    break
                key = StateKey(ep.stream, t, ep.stream[t], self.task.ids(qa.question))
                a = self._act(view, key, learn, rng)
                event, directive = step(runner, self.labels[a], qa.answer, qa.sources)
                self.window.asked += 1
                self.window.correct += event.value > 0
                if trace is not None:
                    trace.append(TraceRow(t + 1, ep.sentences[t], value, qa.label(), self.labels[a], event.value))
                self._reward(key, a, event.value, directive is Directive.END, learn)
            if runner.terminal:
                break
        if not runner.terminal:
            view.advance(T)
            key = ep.final_key()
            a = self._act(view, key, learn, rng)
            event = finish(runner, self.labels[a], self.labels[ep.answer])
            if trace is not None:
                trace.append(TraceRow(T + 1, ep.question, None, "", self.labels[a], event.value))
            self._reward(key, a, event.value, True, learn)
        self.window.memory.append(view.memory_norm)
        self.window.returns.append(runner.total_reward)
        return runner

    def _play_dialog(self, ep: DialogEpisode, learn: bool, trace, rng) -> EpisodeRunner:
        cfg = self.config
        n = len(ep)
        runner = self._runner(max(n - 1, 1))
        view = EpisodeView(self.net, ep.stream)
        replay_pool = [(turn.user, turn.answer) for turn in ep.turns]
        for t in range(n - 1):
            turn = ep.turns[t]
            eligible = t > 0
            human = not eligible or rng.random() < cfg.human_fraction / 100.0
            if eligible:
                self.window.eligible += 1
                self.window.teacher_used += not human
                if learn:
                    self.eligible_turns += 1
                    self.teacher_turns += not human
            while not runner.terminal and runner.cursor == t:
                if human:
                    key, gold, sources, kind, label = ep.key(t), turn.answer, (t + 1,), RewardKind.CORPUS, turn.user
                else:
                    k, label, gold = generate_qa_dialog(replay_pool[:t], rng)
                    key, sources, kind = ep.key(t, ep.turns[k].user_ids), (k + 1,), RewardKind.TEACHER
                a = self._act(view, key, learn, rng)
                event, directive = step(runner, a, gold, sources, kind)
                self.window.asked += 1
                self.window.correct += event.value > 0
                if trace is not None:
                    trace.append(TraceRow(t + 1, turn.user, None, f"({sources[0]}) {label}", self.labels[a], event.value))
                self._reward(key, a, event.value, directive is Directive.END, learn)
            if runner.terminal:
                break
        if not runner.terminal:
            if n == 1:
                skip(runner)
            key = ep.key(n - 1)
            a = self._act(view, key, learn, rng)
            event = finish(runner, a, ep.turns[n - 1].answer)
            if trace is not None:
                trace.append(TraceRow(n, ep.turns[n - 1].user, None, "", self.labels[a], event.value))
            self._reward(key, a, event.value, True, learn)
        self.window.memory.append(view.memory_norm)
        self.window.returns.append(runner.total_reward)
        return runner

    # -- schedule ----------------------------------------------------------------

    def _next_episode(self):
        if self.position >= len(self.order):
            self.order = self.rng.permutation(len(self.task.train))
            self.position = 0
            self.epoch += 1
        ep = self.task.train[int(self.order[self.position])]
        self.position += 1
        return ep

    def _eval_due(self) -> bool:
        every = self.config.eval_every
        if every > 0:
            return self.episodes % every == 0
        return self.position >= len(self.order)

    def run(self, max_steps: int | None = None) -> "Trainer":
        """Play whole episodes until ``max_steps`` environment steps."""
        limit = self.config.max_steps if max_steps is None else max_steps
        while self.steps < limit:
            self.play(self._next_episode())
            self.episodes += 1
            if self._eval_due():
                self.evaluate()
        return self

    def evaluate(self) -> MetricsRow:
        val = evaluate_items(self.net, self.task.eval_items(self.task.val))
        test = evaluate_items(self.net, self.task.eval_items(self.task.test))
        self.curriculum.observe(val)
        w = self.window
        row = MetricsRow(
            restart=self.restart, lr=self.lr, step=self.steps, episode=self.episodes,
            train_loss=float(np.mean(w.losses)) if w.losses else float("nan"),
            val_error=val, test_error=test, epsilon=self.epsilon(),
            mean_memory=float(np.mean(w.memory)) if w.memory else float("nan"),
            asked=w.asked, correct=w.correct,
            teacher_fraction=(w.teacher_used / w.eligible) if w.eligible else float("nan"),
            mean_return=float(np.mean(w.returns)) if w.returns else float("nan"),
            updates=self.updates, syncs=self.syncs, phase=self.curriculum.phase.value,
        )
        if self.best is None or val < self.best["val"]:
            self.best = {
                "val": val, "test": test, "step": self.steps,
                "arrays": {p.name: p.data.copy() for p in self.net.parameters()},
            }
        if self.metrics is not None:
            self.metrics.append(row)
        self.window = Window()
        return row

    @property
    def teacher_fraction(self) -> float:
        """Share of eligible dialog turns whose question came from the teacher."""
        return self.teacher_turns / self.eligible_turns if self.eligible_turns else float("nan")

    def best_net(self) -> ScaffoldNet:
        net = self.net.clone()
        if self.best is not None:
            net.load_arrays(self.best["arrays"])
        return net


def _lr_key(lr: float) -> int:
    """A stable integer for seeding from a learning rate."""
    return int(round(lr * 1e9))
