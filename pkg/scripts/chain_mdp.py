"""DQN sanity check on the 5-state chain: learned Q-table against value
iteration for several seeds.

    python scripts/chain_mdp.py --seeds 0,1,2 --steps 20000
"""

import argparse

import numpy as np

from scaffolding.harness.diagnostics import train_chain


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--seeds", default="0,1,2")
    parser.add_argument("--steps", type=int, default=20_000)
    parser.add_argument("--gamma", type=float, default=0.9)
    args = parser.parse_args()

    np.set_printoptions(precision=4, suppress=True)
    for seed in (int(s) for s in args.seeds.split(",")):
        res = train_chain(seed, steps=args.steps, gamma=args.gamma)
        print(f"seed {seed}: policy matches optimum: {res.policy_matches}, Q(start, right) = {res.q[0, 1]:.4f}")
        print("learned\n", res.q, "\noptimal\n", res.optimum)


if __name__ == "__main__":
    main()
