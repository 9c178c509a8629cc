"""Monte Carlo convergence of the engine against the enumeration oracle.

Runs increasing trial counts on the small bundled worlds and reports the
worst per-outcome deviation from the exact per-candidate distribution.
"""

import argparse
import time
from pathlib import Path

from stagegate.engine import CampaignConfig
from stagegate.oracle import compare, enumerate_world, run_montecarlo
from stagegate.world import load_world

WORLDS = Path(__file__).resolve().parent.parent / "fixtures" / "worlds"


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--worlds", nargs="+",
                        default=[str(WORLDS / f"mc_{i:02d}.json") for i in range(1, 11)])
    parser.add_argument("--trials", type=int, nargs="+", default=[1000, 10_000])
    parser.add_argument("--seed", type=int, default=2024)
    args = parser.parse_args(argv)

    for path in args.worlds:
        world = load_world(Path(path))
        oracle = enumerate_world(world)
        for trials in args.trials:
            start = time.perf_counter()
            mc = run_montecarlo(world, CampaignConfig(seed=args.seed), trials)
            elapsed = time.perf_counter() - start
            worst = max(compare(oracle, mc).values(), default=0.0)
            print(f"{world.name:<12} trials={trials:<7} worst|delta|={worst:.4f} "
                  f"({elapsed:.1f}s)")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
