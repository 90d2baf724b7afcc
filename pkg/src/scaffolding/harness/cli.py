"""Command-line entry point: ``scaffold <subcommand> ...``.

Configuration precedence: ``--set key=value`` flags > ``--config`` file >
the chosen ``--preset`` defaults.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path


from ..data import generate_dialogs, serialize_dialogs
from ..environment import UNANSWERABLE, generate_corpus, oracle_answer, read_corpus, write_corpus
from .checkpoint import load_trainer
from .config import ConfigError, resolve
from .experiments import emit_trace, evaluate, format_trace, run_human_fraction, train, train_lstm_baseline


def _config(args):
    overrides = {}
    for item in args.set or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        overrides[k] = v
    return resolve(args.preset, args.config, overrides)


def _add_config_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--preset", default="desk", choices=["desk", "paper"])
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one setting (repeatable)")


def cmd_gen_data(args) -> int:
    out = Path(args.out)
    if args.track == "travel-log":
        logs = generate_corpus(args.attractions, args.count, args.seed, args.max_moves)
        write_corpus(out, logs, {"seed": args.seed, "count": args.count, "max_moves": args.max_moves})
    else:
        out.write_text(serialize_dialogs(generate_dialogs(args.count, args.seed)), "utf-8")
    print(f"wrote {args.count} {args.track} records to {out}")
    return 0


def cmd_train(args) -> int:
    config = _config(args)
    if config.variant == "lstm-baseline":
        res = train_lstm_baseline(config)
        print(f"lstm-baseline\tval {res.val_error:.2f}\ttest {res.test_error:.2f}")
        return 0
    result = train(config, metrics_path=args.metrics, checkpoint_path=args.checkpoint)
    for r in result.results:
        status = f"failed: {r.failed}" if r.failed else f"val {r.val_error:.2f}\ttest {r.test_error:.2f}"
        print(f"restart {r.restart}\tlr {r.lr:g}\t{status}")
    sel = result.selected
    if sel is None:
        print("all restarts failed")
        return 1
    print(f"selected restart {sel.restart} lr {sel.lr:g}: test error {sel.test_error:.2f}")
    return 0


def cmd_eval(args) -> int:
    trainer = load_trainer(args.checkpoint)
    net = trainer.net if args.current else trainer.best_net()
    print(f"{args.split} error {evaluate(net, trainer.task, args.split):.2f}")
    return 0


def cmd_trace(args) -> int:
    trainer = load_trainer(args.checkpoint)
    episodes = getattr(trainer.task, args.split)
    rows = emit_trace(trainer, episodes[args.index], seed=args.seed, net=trainer.best_net())
    text = format_trace(rows)
    if args.out:
        Path(args.out).write_text(text, "utf-8")
    else:
        sys.stdout.write(text)
    return 0


def cmd_human_fraction(args) -> int:
    config = _config(args).replace(track="dialog")
    fractions = [float(x) for x in args.fractions.split(",")]
    print("m\ttest_error\tval_error\tteacher_fraction")
    for r in run_human_fraction(config, fractions, metrics_dir=args.metrics_dir):
        print(f"{r.fraction:g}\t{r.test_error:.2f}\t{r.val_error:.2f}\t{r.teacher_fraction:.3f}")
    return 0


def cmd_oracle(args) -> int:
    logs = read_corpus(args.corpus)
    log = logs[args.index]
    questions = args.question or [log.question]
    for q in questions:
        ans = oracle_answer(log, q, composite=True)
        print(f"{q}\t{'UNANSWERABLE' if ans is UNANSWERABLE or ans == UNANSWERABLE else ans}")
    return 0


def cmd_grad_check(args) -> int:
    from .diagnostics import full_model_grad_check

    worst = 0.0
    for seed in range(args.seeds):
        report = full_model_grad_check(seed)
        name, err = report.worst
        worst = max(worst, err)
        print(f"seed {seed}\tworst {name}\t{err:.3e}\t{'ok' if report.passed else 'FAIL'}")
    return 0 if worst < 1e-4 else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="scaffold", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate a travel-log or synthetic dialog corpus")
    p.add_argument("--track", choices=["travel-log", "dialog"], default="travel-log")
    p.add_argument("--attractions", type=int, default=5)
    p.add_argument("--count", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-moves", type=int, default=12)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train", help="train with restarts and keep the best")
    _add_config_args(p)
    p.add_argument("--metrics", help="append-only metrics TSV")
    p.add_argument("--checkpoint", help="where to save the selected restart")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="error rate of a checkpoint")
    p.add_argument("checkpoint")
    p.add_argument("--split", choices=["train", "val", "test"], default="test")
    p.add_argument("--current", action="store_true", help="use final rather than best-validation weights")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("trace", help="greedy episode trace as TSV")
    p.add_argument("checkpoint")
    p.add_argument("--split", choices=["train", "val", "test"], default="test")
    p.add_argument("--index", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("experiment-human-fraction", help="test error against the share of corpus questions")
    _add_config_args(p)
    p.add_argument("--fractions", default="10,25,50,75,100")
    p.add_argument("--metrics-dir")
    p.set_defaults(func=cmd_human_fraction)

    p = sub.add_parser("oracle", help="answer questions against a log of a corpus file")
    p.add_argument("corpus")
    p.add_argument("--index", type=int, default=0)
    p.add_argument("--question", action="append")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("grad-check", help="finite-difference check of the full network")
    p.add_argument("--seeds", type=int, default=5)
    p.set_defaults(func=cmd_grad_check)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
