"""Exact outcome distributions for scripted worlds, derived independently.

This module re-states the gate decision tables directly from the agent error
model and computes each candidate's terminal-outcome distribution in closed
form, branching only over the shared-prior latents.  It never imports the
engine's decision functions, so engine-vs-oracle agreement is a real check.

The oracle also supports hypothetical rosters the engine refuses to run
(same-family critics, arbitrarily many same-family promoters) for exact
counterfactual comparisons.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .errors import TooLargeToEnumerate
from .world import World, WorldCandidate

OUTCOMES = ("rejected_intake", "killed_A", "killed_B", "killed_C", "killed_D", "disclosure")


@dataclass(frozen=True)
class OracleConfig:
    stage_a_adversaries: int = 2
    stage_a_creatives: int = 1
    stage_b_adversaries: int = 3
    stage_b_creatives: int = 2
    cross_family_critics: int = 1
    same_family_critics: int = 0  # hypothetical roster; the engine refuses it
    skip_validation: bool = False
    max_candidates: int = 4096


@dataclass
class OracleResult:
    world_name: str
    per_candidate: dict  # cid -> {outcome: probability}
    config: OracleConfig = OracleConfig()

    def p(self, cid: str, outcome: str) -> float:
        return self.per_candidate[cid].get(outcome, 0.0)

    def expected(self, outcome: str) -> float:
        return sum(dist.get(outcome, 0.0) for dist in self.per_candidate.values())


def _kill_prob(is_fp: bool, p_err: float) -> float:
    """Per-reviewer kill probability: truth XOR error."""
    return (1.0 - p_err) if is_fp else p_err


def _promote_prob(is_fp: bool, p_err: float) -> float:
    """Per-creative plausible-argument probability: truth XOR error."""
    return p_err if is_fp else (1.0 - p_err)


def _pass_review(is_fp: bool, p_err: float, n_adv: int, n_cre: int) -> float:
    """P(no adversarial kill and at least one plausible creative argument)."""
    no_kill = (1.0 - _kill_prob(is_fp, p_err)) ** n_adv
    some_arg = 1.0 - (1.0 - _promote_prob(is_fp, p_err)) ** n_cre
    return no_kill * some_arg


def _conditional_outcomes(
    wc: WorldCandidate, world: World, cfg: OracleConfig, p_def: float, p_crit: float
) -> dict[str, float]:
    """Outcome distribution given the per-agent error probabilities."""
    is_fp = wc.ground_truth == "false_positive"
    vm = world.validation_model

    pass_a = _pass_review(is_fp, p_def, cfg.stage_a_adversaries, cfg.stage_a_creatives)
    pass_b = _pass_review(is_fp, p_def, cfg.stage_b_adversaries, cfg.stage_b_creatives)

    if cfg.skip_validation:
        refute = 0.0
    else:
        # A refutation needs the check to be runnable and to land on Refuted:
        # false positives refute unless the validator errs, true positives
        # refute only when it does.
        refute_given_run = (1.0 - vm.error_rate) if is_fp else vm.error_rate
        refute = (1.0 - vm.infeasible_rate) * refute_given_run

    q_cross = _kill_prob(is_fp, p_crit)
    q_same = _kill_prob(is_fp, p_def)

    def kill_d_normal() -> float:
        survive = ((1.0 - q_cross) ** cfg.cross_family_critics) * (
            (1.0 - q_same) ** cfg.same_family_critics
        )
        return 1.0 - survive

    dist = {o: 0.0 for o in OUTCOMES}
    dist["killed_A"] = 1.0 - pass_a
    dist["killed_B"] = pass_a * (1.0 - pass_b)
    dist["killed_C"] = pass_a * pass_b * refute
    reach_d = pass_a * pass_b * (1.0 - refute)

    if wc.critic_partial_subclaim:
        # First critique is a partial objection; any other critic may still
        # kill outright.  Otherwise the candidate re-enters stage B once.
        n_other_cross = max(cfg.cross_family_critics - 1, 0)
        survive_others = ((1.0 - q_cross) ** n_other_cross) * (
            (1.0 - q_same) ** cfg.same_family_critics
        )
        dist["killed_D"] += reach_d * (1.0 - survive_others)
        reenter = reach_d * survive_others
        dist["killed_B"] += reenter * (1.0 - pass_b)
        dist["killed_C"] += reenter * pass_b * refute
        second_d = reenter * pass_b * (1.0 - refute)
        dist["killed_D"] += second_d * kill_d_normal()
        dist["disclosure"] += second_d * (1.0 - kill_d_normal())
    else:
        dist["killed_D"] += reach_d * kill_d_normal()
        dist["disclosure"] += reach_d * (1.0 - kill_d_normal())
    return dist


def _latent_branches(eps: float) -> list[tuple[bool, float]]:
    if eps <= 0.0:
        return [(False, 1.0)]
    if eps >= 1.0:
        return [(True, 1.0)]
    return [(True, eps), (False, 1.0 - eps)]


def candidate_outcomes(wc: WorldCandidate, world: World, cfg: OracleConfig) -> dict[str, float]:
    """Exact terminal-outcome distribution for one world candidate."""
    if wc.omit_self_critique:
        return {**{o: 0.0 for o in OUTCOMES}, "rejected_intake": 1.0}

    eps = wc.error_rate if wc.error_rate is not None else world.agent_model.error_rate
    pi = world.agent_model.family_agreement

    if wc.error_mode == "until_resurrected":
        # Pre-resurrection, every reviewer reads the claim wrong.
        return _conditional_outcomes(wc, world, cfg, p_def=1.0, p_crit=1.0)

    if wc.error_class != "correlated_prior_error":
        return _conditional_outcomes(wc, world, cfg, p_def=eps, p_crit=eps)

    # Shared-prior class: branch over the default-family and critic-family
    # latents; conditional on those, per-agent errors are independent.
    dist = {o: 0.0 for o in OUTCOMES}
    for latent_def, p_ld in _latent_branches(eps):
        for latent_crit, p_lc in _latent_branches(eps):
            p_def = pi * (1.0 if latent_def else 0.0) + (1.0 - pi) * eps
            p_crit = pi * (1.0 if latent_crit else 0.0) + (1.0 - pi) * eps
            sub = _conditional_outcomes(wc, world, cfg, p_def, p_crit)
            weight = p_ld * p_lc
            for outcome, prob in sub.items():
                dist[outcome] += weight * prob
    return dist


def enumerate_world(world: World, cfg: OracleConfig = OracleConfig()) -> OracleResult:
    if len(world.candidates) > cfg.max_candidates:
        raise TooLargeToEnumerate(
            f"world has {len(world.candidates)} candidates (cap {cfg.max_candidates})"
        )
    per = {wc.id: candidate_outcomes(wc, world, cfg) for wc in world.candidates}
    return OracleResult(world_name=world.name, per_candidate=per, config=cfg)


# --- Monte Carlo over the real engine --------------------------------------

@dataclass
class MonteCarloResult:
    world_name: str
    trials: int
    per_candidate: dict  # cid -> {outcome: frequency}

    def p(self, cid: str, outcome: str) -> float:
        return self.per_candidate[cid].get(outcome, 0.0)


def _terminal_outcome(candidate) -> str:
    from .model import StateKind

    if candidate.state.kind is StateKind.DISCLOSURE_READY:
        return "disclosure"
    if candidate.state.kind is StateKind.KILLED:
        return f"killed_{candidate.state.stage.value}"
    return "in_flight"


def run_montecarlo(world: World, config, trials: int) -> MonteCarloResult:
    """Repeated engine runs with derived seeds; returns outcome frequencies."""
    from .context import MemoryStore
    from .engine import CampaignRunner
    from .world import ScriptedBackend

    counts: dict[str, dict[str, int]] = {wc.id: {} for wc in world.candidates}
    for trial in range(trials):
        backend = ScriptedBackend(world, random.Random(f"{config.seed}:{trial}"))
        runner = CampaignRunner(
            config, world, store=MemoryStore(), backend=backend, audit_trail=False
        )
        state = runner.run()
        for wc in world.candidates:
            cand = state.candidates.get(wc.id)
            outcome = "rejected_intake" if cand is None else _terminal_outcome(cand)
            counts[wc.id][outcome] = counts[wc.id].get(outcome, 0) + 1
    per = {
        cid: {outcome: n / trials for outcome, n in tally.items()}
        for cid, tally in counts.items()
    }
    return MonteCarloResult(world_name=world.name, trials=trials, per_candidate=per)


def compare(oracle: OracleResult, mc: MonteCarloResult) -> dict[str, float]:
    """Largest |oracle - monte carlo| deviation per outcome bucket."""
    worst: dict[str, float] = {}
    for cid, dist in oracle.per_candidate.items():
        for outcome in OUTCOMES:
            diff = abs(dist.get(outcome, 0.0) - mc.per_candidate.get(cid, {}).get(outcome, 0.0))
            if diff > worst.get(outcome, 0.0):
                worst[outcome] = diff
    return worst
