#!/usr/bin/env python3
"""Attack the linear closed-loop gridworld victim across families and budgets.

Executes genuine bounded observation attacks per decision point (gradient
ascent, boundary walks, random blocks, latent-consistency attacks) and
prints reward drop / flip rate / virtual cost per configuration.

Usage:
    python scripts/run_linear_victim_demo.py [--episodes 4] [--steps 10]
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from attacksearch.configspace import (AllocationRule, AttackConfig,  # noqa: E402
                                      AttackFamily)
from attacksearch.evaluation import estimate_utility, make_baseline  # noqa: E402
from attacksearch.rngutil import Stream  # noqa: E402
from attacksearch.victims import LinearWorldModelVictim  # noqa: E402


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--episodes", type=int, default=4)
    parser.add_argument("--steps", type=int, default=10)
    parser.add_argument("--weight-seed", type=int, default=0)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    victim = LinearWorldModelVictim("gridworld-demo", weight_seed=args.weight_seed)
    baseline = make_baseline(victim, args.episodes, Stream(args.seed, (1,)).generator())
    print(f"clean return over {args.episodes} episodes: {baseline.j_clean:+.3f}\n")
    print(f"{'family':14s} {'eps':>4s} {'alloc':14s} {'drop':>7s} {'flip':>6s} "
          f"{'T(s)':>7s} {'U':>7s}")
    for family in AttackFamily:
        for epsilon in (2, 8, 20):
            for alloc in (AllocationRule.FIXED, AllocationRule.MARGIN_LINEAR):
                config = AttackConfig(family, epsilon, args.steps, 1, 0.75, 0, alloc)
                report = estimate_utility(victim, config, args.episodes, baseline,
                                          Stream(args.seed, (2,)).generator())
                print(f"{family.value:14s} {epsilon:4d} {alloc.value:14s} "
                      f"{report.drop:+7.3f} {report.flip:6.3f} "
                      f"{report.runtime:7.2f} {report.utility:+7.3f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
