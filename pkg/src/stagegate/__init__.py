"""Stage-gated adversarial review campaigns: engine, sim harness, service."""

from .engine import (
    CampaignConfig,
    CampaignRunner,
    GateDecision,
    Learnings,
    run_campaign,
)
from .errors import StagegateError
from .model import Candidate, Claim, Origin, OverrideRecord, Stage
from .world import ScriptedBackend, World, build_world, load_world

__version__ = "0.1.0"

__all__ = [
    "CampaignConfig",
    "CampaignRunner",
    "Candidate",
    "Claim",
    "GateDecision",
    "Learnings",
    "Origin",
    "OverrideRecord",
    "ScriptedBackend",
    "Stage",
    "StagegateError",
    "World",
    "build_world",
    "load_world",
    "run_campaign",
    "__version__",
]
