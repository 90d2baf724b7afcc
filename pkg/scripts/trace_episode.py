"""Train a desk-scale SN (or load a checkpoint) and print one greedy test
episode in the sentence / importance / question / action / reward layout.

    python scripts/trace_episode.py --steps 5000 --index 3
    python scripts/trace_episode.py --checkpoint run.ckpt
"""

import argparse

from scaffolding.harness.checkpoint import load_trainer
from scaffolding.harness.config import resolve
from scaffolding.harness.experiments import emit_trace, format_trace
from scaffolding.harness.tasks import make_task
from scaffolding.harness.trainer import Trainer


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--checkpoint")
    parser.add_argument("--steps", type=int, default=5000)
    parser.add_argument("--index", type=int, default=0)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    args = parser.parse_args()

    if args.checkpoint:
        trainer = load_trainer(args.checkpoint)
    else:
        config = resolve("desk", None, dict(s.split("=", 1) for s in args.set))
        trainer = Trainer(config, make_task(config)).run(args.steps)
        trainer.evaluate()
    episode = trainer.task.test[args.index]
    print(format_trace(emit_trace(trainer, episode, seed=args.seed, net=trainer.best_net())), end="")


if __name__ == "__main__":
    main()
