import random
from pathlib import Path

import pytest

from stagegate.context import MemoryStore
from stagegate.engine import CampaignConfig, CampaignRunner
from stagegate.world import ScriptedBackend, World, build_world

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"
WORLDS = FIXTURES / "worlds"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def worlds_dir() -> Path:
    return WORLDS


def random_world_spec(rng: random.Random, name: str) -> dict:
    scopes = ["parsing", "auth", "io"]
    n = rng.randint(1, 3)
    candidates = []
    for i in range(n):
        candidates.append(
            {
                "id": f"{name}-c{i}",
                "wave": 1,
                "scope": scopes[i % 3],
                "ground_truth": rng.choice(["true_positive", "false_positive"]),
                "error_class": rng.choice(["reasoning_error", "correlated_prior_error"]),
            }
        )
    return {
        "v": 1,
        "name": name,
        "seed": rng.randint(0, 10**6),
        "target": {
            "target_ref": "rand-lib",
            "revision": "v1.0.0",
            "subsystem_partition": scopes,
        },
        "agent_model": {
            "error_rate": rng.choice([0.0, 0.1, 0.3, 0.5]),
            "family_agreement": rng.choice([0.4, 0.6, 0.8, 1.0]),
        },
        "validation_model": {
            "infeasible_rate": rng.choice([0.0, 0.2]),
            "error_rate": rng.choice([0.0, 0.1]),
        },
        "candidates": candidates,
    }


def run_world(world: World, seed: int = 0, **config_kw):
    config = CampaignConfig(seed=seed, **config_kw)
    backend = ScriptedBackend(world, random.Random(f"{seed}"))
    runner = CampaignRunner(
        config, world, store=MemoryStore(), backend=backend, audit_trail=False
    )
    state = runner.run()
    return runner, state


@pytest.fixture(scope="session")
def thousand_campaigns():
    """1000 randomly generated single-wave campaigns, shared across tests."""
    rng = random.Random(20260823)
    results = []
    for i in range(1000):
        world = build_world(random_world_spec(rng, f"rand{i}"))
        runner, state = run_world(world, seed=rng.randint(0, 10**9))
        results.append((world, runner, state))
    return results
