"""Test error of SN, its two ablations and the supervised LSTM baseline on
the travel-log track, averaged over seeds.

    python scripts/ablation_table.py --seeds 0,1,2 --set n_attractions=5
"""

import argparse
import time

import numpy as np

from scaffolding.harness.config import resolve
from scaffolding.harness.experiments import train, train_lstm_baseline
from scaffolding.harness.tasks import TravelTask

VARIANTS = ("SN", "SN-no-imp", "SN-no-att", "lstm-baseline")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--preset", default="desk", choices=["desk", "paper"])
    parser.add_argument("--seeds", default="0,1,2")
    parser.add_argument("--variants", default=",".join(VARIANTS))
    parser.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    args = parser.parse_args()

    base = resolve(args.preset, None, dict(s.split("=", 1) for s in args.set))
    task = TravelTask(base)
    seeds = [int(s) for s in args.seeds.split(",")]
    print("variant\t" + "\t".join(f"seed {s}" for s in seeds) + "\tmean")
    for variant in args.variants.split(","):
        errors = []
        for seed in seeds:
            config = base.replace(variant=variant, seed=seed)
            start = time.perf_counter()
            if variant == "lstm-baseline":
                errors.append(train_lstm_baseline(config, task).test_error)
            else:
                errors.append(train(config, task).test_error)
            print(f"# {variant} seed {seed}: {errors[-1]:.1f} ({time.perf_counter() - start:.0f}s)", flush=True)
        print(f"{variant}\t" + "\t".join(f"{e:.1f}" for e in errors) + f"\t{np.mean(errors):.1f}", flush=True)


if __name__ == "__main__":
    main()
