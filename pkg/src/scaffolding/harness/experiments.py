"""Experiment drivers: restarts with model selection, evaluation, traces,
the supervised LSTM baseline and the human-question-fraction sweep."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..encoders import LstmLayer, embedding_table, init_matrix, pad_ids
from ..environment import oracle_answer
from ..numerics import (
    AdamState,
    Parameter,
    Tape,
    TrainingError,
    adam_step,
    add,
    backward,
    cross_entropy,
    embed,
    index,
    matmul,
    no_grad,
)
from .checkpoint import save_trainer
from .config import RunConfig
from .metrics import MetricsLog
from .model import ScaffoldNet
from .tasks import TravelEpisode, make_task
from .trainer import TraceRow, Trainer, evaluate_items

log = logging.getLogger(__name__)


@dataclass
class RestartResult:
    restart: int
    lr: float
    val_error: float
    test_error: float
    steps: int
    failed: str = ""


@dataclass
class TrainResult:
    best: Trainer | None
    results: list[RestartResult] = field(default_factory=list)

    @property
    def selected(self) -> RestartResult | None:
        ok = [r for r in self.results if not r.failed]
        return min(ok, key=lambda r: (r.val_error, r.restart, r.lr)) if ok else None

    @property
    def test_error(self) -> float:
        sel = self.selected
        return float("nan") if sel is None else sel.test_error


def train(config: RunConfig, task=None, metrics_path: str | Path | None = None,
          checkpoint_path: str | Path | None = None) -> TrainResult:
    """Every (learning rate, restart) pair trains independently; the one with
    the lowest validation error wins and its test error is reported.  A
    restart that diverges is recorded and skipped."""
    if config.variant == "lstm-baseline":
        raise ValueError("use train_lstm_baseline for the lstm-baseline variant")
    task = task if task is not None else make_task(config)
    metrics = MetricsLog(metrics_path, config.to_json())
    out = TrainResult(None)
    best_val = float("inf")
    for lr in config.lr_grid:
        for r in range(config.restarts):
            trainer = Trainer(config, task, restart=r, lr=lr, metrics=metrics)
            try:
                trainer.run()
                if trainer.best is None or trainer.best["step"] != trainer.steps:
                    trainer.evaluate()
            except TrainingError as exc:
                log.warning("restart %d (lr %g) diverged: %s", r, lr, exc)
                out.results.append(RestartResult(r, lr, float("nan"), float("nan"), trainer.steps, str(exc)))
                continue
            res = RestartResult(r, lr, trainer.best["val"], trainer.best["test"], trainer.steps)
            out.results.append(res)
            log.info("restart %d lr %g: val %.2f test %.2f", r, lr, res.val_error, res.test_error)
            if res.val_error < best_val:
                best_val = res.val_error
                out.best = trainer
    if out.best is not None and checkpoint_path is not None:
        save_trainer(out.best, checkpoint_path)
    return out


def evaluate(net: ScaffoldNet, task, split: str = "test") -> float:
    return evaluate_items(net, task.eval_items(getattr(task, split)))


def policy_error(policy, episodes) -> float:
    """Error rate (percent) of any ``episode -> action index`` policy on the
    episodes' final questions."""
    if not episodes:
        return float("nan")
    wrong = sum(int(policy(ep)) != ep.answer for ep in episodes)
    return 100.0 * wrong / len(episodes)


def oracle_student(task):
    """A policy that answers each final question with the symbolic oracle.
    Unanswerable questions map to -1, which never matches a gold action."""

    def policy(ep: TravelEpisode) -> int:
        answer = oracle_answer(ep.sentences, ep.question)
        return task.answer_index(answer) if answer in task.labels else -1

    return policy


def emit_trace(trainer: Trainer, episode, seed: int = 0, net: ScaffoldNet | None = None) -> list[TraceRow]:
    """One greedy episode with the teacher active; nothing is learned."""
    saved = trainer.net, trainer.window
    if net is not None:
        trainer.net = net
    rows: list[TraceRow] = []
    try:
        trainer.play(episode, learn=False, trace=rows, rng=np.random.default_rng(seed))
    finally:
        trainer.net, trainer.window = saved
    return rows


TRACE_HEADER = ["sentence", "importance", "question", "action", "reward"]


def format_trace(rows: list[TraceRow]) -> str:
    return "\t".join(TRACE_HEADER) + "\n" + "".join("\t".join(r.cells()) + "\n" for r in rows)


# -- supervised LSTM baseline --------------------------------------------------

class LstmClassifier:
    """One LSTM over the whole text followed by a linear layer to K classes."""

    def __init__(self, vocab_size: int, d: int, n_classes: int, rng: np.random.Generator):
        self.embedding = embedding_table(rng, vocab_size, d, "baseline.embedding")
        self.lstm = LstmLayer.create(rng, d, d, "baseline.lstm")
        self.w = Parameter(init_matrix(rng, (d, n_classes), d), "baseline.w")
        self.b = Parameter(np.zeros(n_classes), "baseline.b", decay=False)

    def parameters(self) -> list[Parameter]:
        return [self.embedding, *self.lstm.parameters(), self.w, self.b]

    def logits(self, seqs):
        ids, mask = pad_ids(seqs)
        H = self.lstm(embed(self.embedding, ids), mask)
        return add(matmul(index(H, (slice(None), -1)), self.w), self.b)


def _flatten(ep: TravelEpisode) -> tuple[int, ...]:
    return tuple(i for s in ep.stream for i in s) + ep.question_ids


@dataclass
class BaselineResult:
    model: LstmClassifier
    val_error: float
    test_error: float
    train_error: float
    initial_loss: float
    losses: list[float]


def _error(model: LstmClassifier, data, chunk: int = 128) -> float:
    if not data:
        return float("nan")
    wrong = 0
    with no_grad():
        for i in range(0, len(data), chunk):
            part = data[i : i + chunk]
            pred = np.argmax(model.logits([s for s, _ in part]).data, axis=1)
            wrong += int(np.sum(pred != np.array([y for _, y in part])))
    return 100.0 * wrong / len(data)


def train_lstm_baseline(config: RunConfig, task=None, epochs: int | None = None, batch: int = 32) -> BaselineResult:
    """Cross-entropy on the corpus answer only; no teacher, no RL.  The
    epoch with the lowest validation error is kept."""
    task = task if task is not None else make_task(config)
    if task.track != "travel-log":
        raise ValueError("the LSTM baseline is defined for the travel-log track")
    rng = np.random.default_rng([config.seed, 99])
    model = LstmClassifier(len(task.vocab), config.d, task.n_actions, rng)
    adam = AdamState(lr=config.lr_grid[-1], weight_decay=config.weight_decay)
    train_data = [(_flatten(ep), ep.answer) for ep in task.train]
    val_data = [(_flatten(ep), ep.answer) for ep in task.val]
    test_data = [(_flatten(ep), ep.answer) for ep in task.test]
    with no_grad():
        initial = cross_entropy(model.logits([s for s, _ in train_data]), [y for _, y in train_data]).item()
    losses = []
    best = (float("inf"), None)
    for _ in range(epochs or config.baseline_epochs):
        order = rng.permutation(len(train_data))
        for i in range(0, len(order), batch):
            part = [train_data[j] for j in order[i : i + batch]]
            with Tape() as tape:
                loss = cross_entropy(model.logits([s for s, _ in part]), [y for _, y in part])
            backward(tape, loss)
            adam_step(model.parameters(), adam)
            losses.append(loss.item())
        val = _error(model, val_data)
        if val < best[0]:
            best = (val, {p.name: p.data.copy() for p in model.parameters()})
    for p in model.parameters():
        p.data = best[1][p.name]
    return BaselineResult(model, best[0], _error(model, test_data), _error(model, train_data), initial, losses)


# -- human question fraction ---------------------------------------------------

@dataclass
class FractionResult:
    fraction: float
    test_error: float
    val_error: float
    teacher_fraction: float


def run_human_fraction(config: RunConfig, fractions=(10, 25, 50, 75, 100), task=None,
                       metrics_dir: str | Path | None = None) -> list[FractionResult]:
    """Train once per human-question percentage m and report test error.
    ``teacher_fraction`` audits how many eligible turns used the teacher."""
    if config.track != "dialog":
        raise ValueError("the human-fraction experiment runs on the dialog track")
    task = task if task is not None else make_task(config)
    out = []
    for m in fractions:
        cfg = config.replace(human_fraction=float(m))
        path = None if metrics_dir is None else Path(metrics_dir) / f"human_{int(m)}.tsv"
        result = train(cfg, task, metrics_path=path)
        trainer = result.best
        sel = result.selected
        out.append(FractionResult(
            float(m),
            float("nan") if sel is None else sel.test_error,
            float("nan") if sel is None else sel.val_error,
            float("nan") if trainer is None else trainer.teacher_fraction,
        ))
    return out
