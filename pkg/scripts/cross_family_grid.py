"""Sweep the shared-prior grid and compare critic placements.

For each (agreement pi, error rate eps) cell, computes the exact survival
probability of a correlated false positive through an ungated pipeline with
no critic, one cross-family critic, and one same-family critic.
"""

import argparse

from stagegate.oracle import OracleConfig, candidate_outcomes
from stagegate.world import build_world


def fp_world(pi: float, eps: float):
    return build_world({
        "v": 1,
        "name": f"grid-{pi}-{eps}",
        "seed": 1,
        "target": {"target_ref": "lib", "revision": "v1",
                   "subsystem_partition": ["parsing"]},
        "agent_model": {"error_rate": eps, "family_agreement": pi},
        "candidates": [{"id": "fp", "scope": "parsing",
                        "ground_truth": "false_positive",
                        "error_class": "correlated_prior_error"}],
    })


def survival(world, cross: int, same: int) -> float:
    cfg = OracleConfig(skip_validation=True,
                       cross_family_critics=cross, same_family_critics=same)
    return candidate_outcomes(world.candidate("fp"), world, cfg)["disclosure"]


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--pi", type=float, nargs="+", default=[0.4, 0.6, 0.8, 1.0])
    parser.add_argument("--eps", type=float, nargs="+", default=[0.1, 0.3, 0.5])
    args = parser.parse_args(argv)

    print(f"{'pi':>5} {'eps':>5} {'no critic':>10} {'+cross':>10} {'+same':>10} {'strict':>7}")
    ok = True
    for pi in args.pi:
        for eps in args.eps:
            world = fp_world(pi, eps)
            none = survival(world, 0, 0)
            cross = survival(world, 1, 0)
            same = survival(world, 0, 1)
            strict = cross < same
            ok = ok and strict
            print(f"{pi:>5.2f} {eps:>5.2f} {none:>10.4f} {cross:>10.4f} "
                  f"{same:>10.4f} {'yes' if strict else 'NO':>7}")
    print("cross-family critic strictly stronger at every cell" if ok
          else "WARNING: some cells are not strict")
    return 0 if ok else 1


if __name__ == "__main__":
    raise SystemExit(main())
