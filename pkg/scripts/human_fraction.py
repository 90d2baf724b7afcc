"""Dialog test error against the percentage m of corpus (human) questions;
the remaining eligible turns are replaced by teacher replays.

    python scripts/human_fraction.py --fractions 10,25,50,75,100
"""

import argparse

from scaffolding.harness.config import resolve
from scaffolding.harness.experiments import run_human_fraction


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--preset", default="desk", choices=["desk", "paper"])
    parser.add_argument("--fractions", default="10,25,50,75,100")
    parser.add_argument("--metrics-dir")
    parser.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    args = parser.parse_args()

    config = resolve(args.preset, None, dict(s.split("=", 1) for s in args.set)).replace(track="dialog")
    fractions = [float(f) for f in args.fractions.split(",")]
    print("m\ttest_error\tteacher_share")
    for r in run_human_fraction(config, fractions, metrics_dir=args.metrics_dir):
        print(f"{r.fraction:g}\t{r.test_error:.1f}\t{r.teacher_fraction:.3f}", flush=True)


if __name__ == "__main__":
    main()
