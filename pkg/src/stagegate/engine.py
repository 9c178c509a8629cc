"""The orchestrator: prepare, generation waves, stages A-D, re-seeding.

Gate rules are pure functions over verdict sets so every stored decision can
be re-derived in audit.  Campaign execution is strictly sequential and
deterministic under scripted backends with a fixed seed; timestamps are a
logical counter in sim mode.
"""

from __future__ import annotations

import dataclasses
import json
import random
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from . import model
from .context import (
    CampaignContext,
    ContextView,
    DEFAULT_SELECTIVE_ALLOWLIST,
    ExposureLedger,
    Fragment,
    FragmentKind,
    PreparedTarget,
    ViewKind,
    content_digest,
    derive_view,
)
from .errors import (
    ConfigError,
    ContaminatedCheck,
    EmptyWave,
    MissingValidation,
    OverlappingScopes,
    RosterIncomplete,
    SameFamilyCritic,
)
from .gateway import (
    AgentSpec,
    Direction,
    Gateway,
    Role,
    TaskSpec,
    Tier,
    Verdict,
)
from .model import (
    Candidate,
    Claim,
    DefectClass,
    Event,
    EventKind,
    Origin,
    OverrideRecord,
    SourceStratum,
    Stage,
    StateKind,
    new_candidate,
    transition,
)
from .rules import Rule, evaluate_compliance, inject
from .validation import (
    CheckSpec,
    Recalibration,
    SeverityVector,
    ValidationResult,
    execute as execute_check,
    recalibrate,
)
from .world import ScriptedBackend, World


class LogicalClock:
    """Monotone logical timestamps so sim event logs are byte-stable."""

    def __init__(self):
        self._t = -1

    def __call__(self) -> float:
        self._t += 1
        return float(self._t)


@dataclass(frozen=True)
class CampaignConfig:
    campaign_id: str = "campaign"
    seed: int = 0
    default_family: str = "family-1"
    critic_family: str = "family-2"
    hunter_count: int = 3
    stage_a_creatives: int = 1
    stage_a_adversaries: int = 2
    stage_b_creatives: int = 2
    stage_b_adversaries: int = 3
    stage_c_assessors: int = 2
    stage_d_critics: int = 1
    reseed_cadence: int = 2  # completed candidates between learning refreshes
    parallelism: int = 4
    skip_validation: bool = False
    max_reentries: int = 2
    backend: str = "scripted"
    timeout_s: float = 600.0

    def to_record(self) -> dict:
        return dataclasses.asdict(self)

    @staticmethod
    def from_record(rec: dict) -> "CampaignConfig":
        known = {f.name for f in dataclasses.fields(CampaignConfig)}
        return CampaignConfig(**{k: v for k, v in rec.items() if k in known})


@dataclass(frozen=True)
class StageRoster:
    stage: Stage
    creative: tuple[tuple[AgentSpec, ViewKind], ...] = ()
    adversarial: tuple[tuple[AgentSpec, ViewKind], ...] = ()
    critics: tuple[tuple[AgentSpec, ViewKind], ...] = ()
    validators: tuple[AgentSpec, ...] = ()


def build_rosters(config: CampaignConfig) -> dict[Stage, StageRoster]:
    """Construct the per-stage rosters and enforce their shape invariants."""
    fam, tier = config.default_family, Tier.WORKHORSE

    def spec(agent_id, role, family=fam, tier=tier):
        return AgentSpec(agent_id, config.backend, family, tier, role)

    if config.stage_a_creatives != 1 or config.stage_a_adversaries != 2:
        raise ConfigError(
            "Stage A requires exactly 1 creative and 2 adversarial agents "
            f"(got {config.stage_a_creatives}/{config.stage_a_adversaries})"
        )
    if config.stage_b_creatives != 2 or config.stage_b_adversaries != 3:
        raise ConfigError(
            "Stage B requires exactly 2 creative and 3 adversarial agents "
            f"(got {config.stage_b_creatives}/{config.stage_b_adversaries})"
        )
    if config.stage_d_critics < 1:
        raise ConfigError("Stage D requires at least one critic")
    if config.critic_family == config.default_family:
        raise SameFamilyCritic(
            f"critic family must differ from the campaign default ({config.default_family})"
        )

    rosters = {
        Stage.A: StageRoster(
            stage=Stage.A,
            creative=((spec("a-creative", Role.CREATIVE), ViewKind.FULL_SYNTHESIS),),
            adversarial=(
                (spec("a-adv-1", Role.ADVERSARIAL), ViewKind.CLAIM_ONLY),
                (spec("a-adv-2", Role.ADVERSARIAL), ViewKind.CLAIM_ONLY),
            ),
        ),
        Stage.B: StageRoster(
            stage=Stage.B,
            creative=(
                (spec("b-creative-full", Role.CREATIVE), ViewKind.FULL_SYNTHESIS),
                (spec("b-creative-cold", Role.CREATIVE), ViewKind.COLD_START),
            ),
            adversarial=(
                (spec("b-adv-informed", Role.ADVERSARIAL), ViewKind.FULL_SYNTHESIS),
                (spec("b-adv-naive", Role.ADVERSARIAL), ViewKind.CLAIM_ONLY),
                (
                    spec("b-adv-senior", Role.ADVERSARIAL, tier=Tier.SENIOR),
                    ViewKind.SELECTIVE_SUMMARY,
                ),
            ),
        ),
        Stage.C: StageRoster(
            stage=Stage.C,
            validators=(spec("c-validator", Role.VALIDATOR),),
            adversarial=tuple(
                (spec(f"c-assessor-{i + 1}", Role.ADVERSARIAL), ViewKind.SELECTIVE_SUMMARY)
                for i in range(config.stage_c_assessors)
            ),
        ),
        Stage.D: StageRoster(
            stage=Stage.D,
            critics=tuple(
                (
                    spec(f"d-critic-{i + 1}", Role.CRITIC, family=config.critic_family),
                    ViewKind.MINIMAL_SUMMARY,
                )
                for i in range(config.stage_d_critics)
            ),
        ),
    }
    return rosters


@dataclass
class GateDecision:
    candidate_id: str
    stage: Stage
    outcome: str  # promote | kill | partial_kill_reentry | promote_provisional
    verdict_refs: tuple[str, ...] = ()
    cold_start_divergence: bool = False
    unanimity_warning: bool = False
    human_review: bool = False
    reason: str = ""
    wave: int = 1
    view_kinds: dict = field(default_factory=dict)  # agent_id -> view kind value
    validation_status: Optional[str] = None
    recalibration: Optional[dict] = None
    target_stage: Optional[str] = None

    def __post_init__(self):
        if self.outcome == "promote_provisional" and self.stage is not Stage.C:
            raise ValueError("promote_provisional is a Stage-C outcome")

    def to_record(self) -> dict:
        rec = dataclasses.asdict(self)
        rec["stage"] = self.stage.value
        return rec


@dataclass(frozen=True)
class Learnings:
    wave: int
    promoted_patterns: tuple[tuple[str, str], ...]
    killed_classes: tuple[tuple[str, str], ...]
    rule_refs: tuple[str, ...] = ()
    promoted_archetypes: tuple[str, ...] = ()
    killed_archetypes: tuple[str, ...] = ()

    def to_record(self) -> dict:
        return {
            "wave": self.wave,
            "promoted_patterns": [list(p) for p in self.promoted_patterns],
            "killed_classes": [list(k) for k in self.killed_classes],
            "rule_refs": list(self.rule_refs),
            "promoted_archetypes": list(self.promoted_archetypes),
            "killed_archetypes": list(self.killed_archetypes),
        }


# --- gate decision rules ---------------------------------------------------

def _is_code_grounded_kill(v: Verdict) -> bool:
    return (
        v.role is Role.ADVERSARIAL
        and v.direction is Direction.KILL
        and bool(v.code_grounded)
    )


def _is_plausible_argument(v: Verdict) -> bool:
    return (
        v.direction is Direction.PROMOTE
        and v.exploitation is not None
        and v.exploitation.plausible
    )


def unanimity_monitor(verdicts: Sequence[Verdict]) -> bool:
    """Unanimity in either direction on a panel of >=3 agents is low-signal.

    Abstentions are not dissent: a panel where every deciding agent points
    the same way is still unanimous, provided at least two agents decided.
    """
    if len(verdicts) < 3:
        return False
    directions = [
        v.direction
        for v in verdicts
        if v.direction not in (Direction.ABSTAIN, Direction.REFUSED)
    ]
    return len(directions) >= 2 and len(set(directions)) == 1


def decide_stage_a(
    adversarial: Sequence[Verdict], creative_output: Verdict, candidate_id: str = "", wave: int = 1
) -> GateDecision:
    if len(adversarial) != 2 or creative_output is None:
        raise RosterIncomplete(
            f"Stage A needs 2 adversarial verdicts and 1 creative output, "
            f"got {len(adversarial)} adversarial"
        )
    kills = [v for v in adversarial if _is_code_grounded_kill(v)]
    decision = GateDecision(candidate_id=candidate_id, stage=Stage.A, outcome="promote", wave=wave)
    if kills:
        decision.outcome = "kill"
        decision.reason = kills[0].rationale
    elif not _is_plausible_argument(creative_output):
        decision.outcome = "kill"
        decision.reason = creative_output.rationale or "no plausible exploitation argument"
        if creative_output.direction is Direction.ABSTAIN:
            decision.human_review = True  # creative silence is a kill, but a human checks it
    return decision


def decide_stage_b(
    verdicts: Sequence[Verdict], view_kinds: dict[str, ViewKind], candidate_id: str = "", wave: int = 1
) -> GateDecision:
    adversarial = [v for v in verdicts if v.role is Role.ADVERSARIAL]
    creative = [v for v in verdicts if v.role is Role.CREATIVE]
    if len(adversarial) != 3 or len(creative) != 2:
        raise RosterIncomplete(
            f"Stage B needs 3 adversarial and 2 creative verdicts, "
            f"got {len(adversarial)}/{len(creative)}"
        )
    decision = GateDecision(candidate_id=candidate_id, stage=Stage.B, outcome="promote", wave=wave)
    kills = [v for v in adversarial if _is_code_grounded_kill(v)]
    if kills:
        decision.outcome = "kill"
        decision.reason = kills[0].rationale
    elif not any(_is_plausible_argument(v) for v in creative):
        decision.outcome = "kill"
        decision.reason = "no creative agent produced a plausible exploitation argument"
        if all(v.direction is Direction.ABSTAIN for v in creative):
            decision.human_review = True

    # Cold-start divergence: the ColdStart creative or ClaimOnly adversary
    # disagreeing with the informed majority is flagged, never silently outvoted.
    def signal(v: Verdict) -> str:
        if v.role is Role.ADVERSARIAL:
            return "kill" if v.direction is Direction.KILL else "promote"
        return "promote" if _is_plausible_argument(v) else "kill"

    informed = [
        v
        for v in verdicts
        if view_kinds.get(v.agent_id) in (ViewKind.FULL_SYNTHESIS, ViewKind.SELECTIVE_SUMMARY)
    ]
    outliers = [
        v
        for v in verdicts
        if view_kinds.get(v.agent_id) in (ViewKind.CLAIM_ONLY, ViewKind.COLD_START)
    ]
    if informed and outliers:
        counts = Counter(signal(v) for v in informed)
        majority = "kill" if counts["kill"] > counts["promote"] else "promote"
        if any(signal(v) != majority for v in outliers):
            decision.cold_start_divergence = True
            decision.human_review = True
    return decision


def decide_stage_c(
    validation: Optional[ValidationResult],
    severity_before: Optional[SeverityVector],
    adversarial_assessments: Sequence[SeverityVector],
    candidate_id: str = "",
    wave: int = 1,
) -> GateDecision:
    if validation is None:
        raise MissingValidation("Stage C may never be skipped without a validation attempt")
    decision = GateDecision(
        candidate_id=candidate_id,
        stage=Stage.C,
        outcome="promote",
        wave=wave,
        validation_status=validation.status,
    )
    if validation.status == "Refuted":
        decision.outcome = "kill"
        decision.reason = f"empirical: {validation.transcript_ref}"
    elif validation.status == "Infeasible":
        decision.outcome = "promote_provisional"
        decision.reason = "validation infeasible; advancing provisionally"
    elif validation.status == "Confirmed":
        if severity_before is not None and adversarial_assessments:
            recal = recalibrate(severity_before, list(adversarial_assessments))
            decision.recalibration = {
                "before": severity_before.vector,
                "before_score": severity_before.score,
                "after": recal.final.vector,
                "after_score": recal.final.score,
                "direction": recal.direction,
            }
    else:
        raise ValueError(f"unknown validation status: {validation.status}")
    return decision


def decide_stage_d(
    critic_verdicts: Sequence[Verdict],
    default_family: str,
    candidate_id: str = "",
    wave: int = 1,
) -> GateDecision:
    if not critic_verdicts:
        raise RosterIncomplete("Stage D needs at least one critic verdict")
    for v in critic_verdicts:
        if v.model_family and v.model_family == default_family:
            raise SameFamilyCritic(
                f"critic {v.agent_id} belongs to the campaign default family"
            )
    decision = GateDecision(candidate_id=candidate_id, stage=Stage.D, outcome="promote", wave=wave)
    kills = [v for v in critic_verdicts if v.direction is Direction.KILL]
    partials = [v for v in critic_verdicts if v.direction is Direction.PARTIAL_KILL]
    if kills:
        decision.outcome = "kill"
        decision.reason = kills[0].rationale
    elif partials:
        decision.outcome = "partial_kill_reentry"
        decision.target_stage = Stage.B.value
        decision.reason = (
            f"subclaim refuted by independent critique: {partials[0].refuted_subclaim}"
        )
    return decision


def rederive_outcome(decision: GateDecision, verdicts: dict[str, Verdict]) -> str:
    """Recompute a stored decision from its verdict set (audit path)."""
    vs = [verdicts[ref] for ref in decision.verdict_refs if ref in verdicts]
    if decision.stage is Stage.A:
        adv = [v for v in vs if v.role is Role.ADVERSARIAL]
        cre = [v for v in vs if v.role is Role.CREATIVE]
        return decide_stage_a(adv, cre[0] if cre else None).outcome
    if decision.stage is Stage.B:
        kinds = {aid: ViewKind(k) for aid, k in decision.view_kinds.items()}
        return decide_stage_b(vs, kinds).outcome
    if decision.stage is Stage.C:
        status = decision.validation_status or "Infeasible"
        return {"Refuted": "kill", "Confirmed": "promote", "Infeasible": "promote_provisional"}[status]
    if decision.stage is Stage.D:
        return decide_stage_d(vs, default_family="").outcome
    raise ValueError(f"unknown stage {decision.stage}")


def reseed(wave: int, wave_results: Sequence[tuple[Candidate, GateDecision]]) -> Learnings:
    """Distill a completed wave into learnings for the next generation round."""
    if not wave_results:
        raise EmptyWave(f"wave {wave} has no gate decisions to learn from")
    promoted, killed_cls = [], []
    promoted_arch, killed_arch = [], []
    for cand, decision in wave_results:
        archetype = ""
        if cand.history and cand.history[0].payload:
            archetype = cand.history[0].payload.get("archetype", "")
        if decision.outcome == "kill":
            killed_cls.append((cand.claim.summary, decision.reason))
            if archetype:
                killed_arch.append(archetype)
        else:
            promoted.append((cand.claim.summary, decision.reason or "survived all gates"))
            if archetype:
                promoted_arch.append(archetype)
    return Learnings(
        wave=wave,
        promoted_patterns=tuple(promoted),
        killed_classes=tuple(killed_cls),
        promoted_archetypes=tuple(dict.fromkeys(promoted_arch)),
        killed_archetypes=tuple(dict.fromkeys(killed_arch)),
    )


# --- campaign state and runner --------------------------------------------

@dataclass
class CampaignState:
    config: CampaignConfig
    world: Optional[World] = None
    prepared: Optional[PreparedTarget] = None
    candidates: dict = field(default_factory=dict)  # cid -> Candidate
    decisions: list = field(default_factory=list)  # GateDecision
    verdict_index: dict = field(default_factory=dict)  # payload_ref -> Verdict
    funnel_records: list = field(default_factory=list)
    journal: list = field(default_factory=list)
    learnings_history: list = field(default_factory=list)
    severities: dict = field(default_factory=dict)  # cid -> final vector
    intake_rejected: int = 0
    gateway: Optional[Gateway] = None
    store: object = None

    def final_decision(self, cid: str) -> Optional[GateDecision]:
        for decision in reversed(self.decisions):
            if decision.candidate_id == cid:
                return decision
        return None


_STRATA = (
    SourceStratum.PRIOR_DEFECTS,
    SourceStratum.GIT_HOTSPOTS,
    SourceStratum.NORMATIVE_SPEC,
    SourceStratum.BUG_ARCHETYPES,
)


class CampaignRunner:
    """Executes one campaign against a world (scripted) or live backends."""

    def __init__(
        self,
        config: CampaignConfig,
        world: World,
        campaign_dir: Optional[Path] = None,
        store=None,
        backend=None,
        rules: Sequence[Rule] = (),
        audit_trail: bool = True,
    ):
        from .context import DiskStore, MemoryStore

        self.config = config
        self.world = world
        self.rosters = build_rosters(config)
        self.dir = Path(campaign_dir) if campaign_dir else None
        if self.dir:
            self.dir.mkdir(parents=True, exist_ok=True)
        self.clock = LogicalClock()
        self.audit_trail = audit_trail
        if store is None:
            store = DiskStore(self.dir) if self.dir else MemoryStore()
        ledger_path = self.dir / "exposure.log" if (self.dir and audit_trail) else None
        self.ledger = ExposureLedger(ledger_path)
        backend = backend or ScriptedBackend(world, random.Random(f"{config.seed}"))
        self.backend = backend
        injected = inject(list(rules))
        self.compliance_checks = injected.compliance_checks
        self.rules = list(rules)
        self.state = CampaignState(config=config, world=world, store=store)
        self.gateway = Gateway(
            backends={config.backend: backend},
            ledger=self.ledger,
            clock=self.clock,
            transcript_dir=(self.dir / "transcripts") if (self.dir and audit_trail) else None,
            rules_section=injected.section,
            timeout_s=config.timeout_s,
            journal=self._journal,
        )
        self.state.gateway = self.gateway
        self._task_seq = 0
        self._verdict_history: dict[str, list] = {}  # cid -> [(summary, pre_kill)]
        self._creative_rationale: dict[str, str] = {}
        self._reentries: dict[str, int] = {}

    # --- plumbing ----------------------------------------------------------

    def _journal(self, event: dict) -> None:
        entry = dict(event)
        entry.setdefault("ts", self.clock())
        self.state.journal.append(entry)
        if self.dir and self.audit_trail:
            with (self.dir / "events.log").open("a") as fh:
                fh.write(json.dumps(entry, sort_keys=True) + "\n")

    def _funnel(self, record: dict) -> None:
        self.state.funnel_records.append(record)

    def _next_task_id(self) -> str:
        self._task_seq += 1
        return f"task-{self._task_seq}"

    def _append_event(self, cid: str, kind: EventKind, payload_ref: str, payload: dict) -> Candidate:
        cand = self.state.candidates[cid]
        event = Event(
            seq=cand.last_seq + 1,
            timestamp=self.clock(),
            kind=kind,
            payload_ref=payload_ref,
            payload=payload,
        )
        cand = transition(cand, event)
        self.state.candidates[cid] = cand
        return cand

    def _context_for(self, cid: str) -> CampaignContext:
        return CampaignContext(
            prepared=self.state.prepared,
            prior_verdicts=list(self._verdict_history.get(cid, [])),
            creative_rationale=self._creative_rationale.get(cid),
            rules_text=[r.text for r in self.rules],
        )

    def _dispatch_verdict(
        self, spec: AgentSpec, cid: str, stage: Stage, kind: ViewKind, task_kind: str = "review"
    ) -> tuple[Verdict, ViewKind]:
        cand = self.state.candidates[cid]
        view = derive_view(cand, kind, self._context_for(cid))
        task = TaskSpec(
            kind=task_kind,
            candidate_id=cid,
            stage=stage.value,
            task_id=self._next_task_id(),
        )
        refusals_before = self.gateway.refusal_count
        response, answered_by = self.gateway.dispatch_resolved(spec, task, view)
        if self.gateway.refusal_count > refusals_before:
            self._append_event(
                cid,
                EventKind.REFUSAL_RECORDED,
                f"refusal:{task.task_id}",
                {"agent_id": spec.agent_id, "stage": stage.value},
            )
        if response.kind == "refusal":
            # Senior refusal escalated to the human queue: absence of evidence.
            verdict = Verdict(
                agent_id=spec.agent_id,
                role=spec.role,
                direction=Direction.ABSTAIN,
                rationale="task refused and escalated to the human queue",
                model_family=spec.model_family,
            )
        else:
            verdict = response.body
            if self.compliance_checks and isinstance(verdict, Verdict):
                flagged = evaluate_compliance(self.compliance_checks, verdict.to_record())
                if flagged:
                    self._journal(
                        {"kind": "compliance_flag", "candidate_id": cid, "rules": flagged}
                    )
        ref = f"verdict:{cid}:{self.state.candidates[cid].last_seq + 1}"
        self.state.verdict_index[ref] = verdict
        self._append_event(
            cid,
            EventKind.VERDICT_RECORDED,
            ref,
            {"agent_id": verdict.agent_id, "direction": verdict.direction.value},
        )
        summary = f"{verdict.agent_id} [{verdict.direction.value}] {verdict.rationale}"
        self._verdict_history.setdefault(cid, []).append((summary, False))
        if verdict.role is Role.CREATIVE and verdict.direction is Direction.PROMOTE:
            self._creative_rationale[cid] = verdict.rationale
        return verdict, kind

    def _verdict_refs_for(self, cid: str, count: int) -> tuple[str, ...]:
        refs = [ref for ref in self.state.verdict_index if ref.startswith(f"verdict:{cid}:")]
        refs.sort(key=lambda r: int(r.rsplit(":", 1)[1]))
        return tuple(refs[-count:])

    def _record_decision(self, decision: GateDecision, cid: str) -> None:
        self.state.decisions.append(decision)
        if decision.unanimity_warning:
            self._journal(
                {
                    "kind": "unanimity_warning",
                    "candidate_id": cid,
                    "stage": decision.stage.value,
                }
            )
        if decision.cold_start_divergence:
            self._journal(
                {
                    "kind": "cold_start_divergence",
                    "candidate_id": cid,
                    "stage": decision.stage.value,
                }
            )
        if self.dir and self.audit_trail:
            with (self.dir / "decisions.log").open("a") as fh:
                fh.write(json.dumps(decision.to_record(), sort_keys=True) + "\n")

    # --- prepare -----------------------------------------------------------

    def run_prepare(self) -> PreparedTarget:
        target = self.world.target
        dev_head = not target.has_release
        if dev_head:
            self._journal(
                {"kind": "no_release_branch", "target": target.target_ref}
            )
        campaign_view = ContextView(
            kind=ViewKind.FULL_SYNTHESIS,
            candidate_id="campaign",
            content=(Fragment(FragmentKind.TARGET_REF, target.target_ref),),
            content_digest=content_digest(
                (Fragment(FragmentKind.TARGET_REF, target.target_ref),)
            ),
        )
        brief, hotspots = "", []
        for i in range(3):  # three parallel research agents
            spec = AgentSpec(
                f"research-{i + 1}", self.config.backend, self.config.default_family,
                Tier.WORKHORSE, Role.HUNTER,
            )
            task = TaskSpec(kind="research", task_id=self._next_task_id())
            response, _ = self.gateway.dispatch_resolved(spec, task, campaign_view)
            if response.kind != "refusal" and isinstance(response.body, dict):
                brief = brief or response.body.get("prior_art", "")
                hotspots = hotspots or response.body.get("hotspots", [])
        prepared = PreparedTarget(
            target_ref=target.target_ref,
            revision=target.revision if not dev_head else f"{target.revision}@head",
            prior_art_brief=brief,
            hotspot_list=tuple((r, int(n)) for r, n in hotspots),
            subsystem_partition=target.subsystem_partition,
            dev_head_warning=dev_head,
        )
        self.state.prepared = prepared
        return prepared

    # --- generation --------------------------------------------------------

    def run_generation_wave(self, wave: int, learnings: Optional[Learnings]) -> list[str]:
        if self.config.hunter_count < 3:
            raise ConfigError("generation needs at least 3 hunters")
        partition = list(self.state.prepared.subsystem_partition)
        if len(partition) < self.config.hunter_count:
            raise OverlappingScopes(
                f"partition has {len(partition)} scopes for {self.config.hunter_count} hunters"
            )
        groups: list[list[str]] = [[] for _ in range(self.config.hunter_count)]
        for i, scope in enumerate(partition):
            groups[i % self.config.hunter_count].append(scope)
        assigned: set[str] = set()
        for group in groups:
            overlap = assigned.intersection(group)
            if overlap:
                raise OverlappingScopes(f"scopes assigned twice: {sorted(overlap)}")
            assigned.update(group)

        new_ids: list[str] = []
        for i, scopes in enumerate(groups):
            spec = AgentSpec(
                f"hunter-{i + 1}", self.config.backend, self.config.default_family,
                Tier.WORKHORSE, Role.HUNTER,
            )
            instructions = {
                "wave": wave,
                "scopes": scopes,
                "killed_archetypes": list(learnings.killed_archetypes) if learnings else [],
                "promoted_archetypes": list(learnings.promoted_archetypes) if learnings else [],
            }
            cand_stub = Candidate(
                id="campaign",
                target_ref=self.state.prepared.target_ref,
                claim=Claim("hunt", DefectClass.SPEC_DEFECT, "hunt task"),
                origin=Origin(spec.agent_id, wave, _STRATA[i % len(_STRATA)], scopes[0] if scopes else ""),
            )
            view = derive_view(cand_stub, ViewKind.FULL_SYNTHESIS, self._context_for("campaign"))
            task = TaskSpec(
                kind="hunt",
                task_id=self._next_task_id(),
                instructions=json.dumps(instructions, sort_keys=True),
            )
            response, _ = self.gateway.dispatch_resolved(spec, task, view)
            if response.kind == "refusal":
                continue
            for entry in response.body or []:
                if not entry.get("self_critique"):
                    self.state.intake_rejected += 1
                    self._funnel({"kind": "intake_rejected", "wave": wave})
                    self._journal(
                        {
                            "kind": "intake_rejected",
                            "hunter_id": spec.agent_id,
                            "reason": "MissingSelfCritique",
                            "title": entry.get("title", ""),
                        }
                    )
                    continue
                claim = Claim(
                    title=entry["title"],
                    defect_class=DefectClass(entry["defect_class"]),
                    summary=entry["summary"],
                    entry_points=tuple(entry.get("entry_points", ())),
                    claimed_severity=entry.get("claimed_severity"),
                )
                origin = Origin(
                    hunter_id=spec.agent_id,
                    wave=wave,
                    source_stratum=_STRATA[i % len(_STRATA)],
                    scope_stratum=entry["scope"],
                )
                cand = new_candidate(
                    entry["id"],
                    self.state.prepared.target_ref,
                    claim,
                    origin,
                    timestamp=self.clock(),
                    payload={
                        "self_critique": entry["self_critique"],
                        "archetype": entry.get("archetype", ""),
                    },
                )
                self.state.candidates[cand.id] = cand
                self._funnel({"kind": "generated", "wave": wave, "candidate_id": cand.id})
                new_ids.append(cand.id)
        return new_ids

    # --- stages ------------------------------------------------------------

    def _enter_stage(self, cid: str, stage: Stage) -> None:
        self._append_event(
            cid, EventKind.DISPATCHED, f"stage:{stage.value}:{cid}", {"stage": stage.value}
        )
        self._funnel(
            {
                "kind": "stage_entered",
                "wave": self.state.candidates[cid].origin.wave,
                "stage": stage.value,
                "candidate_id": cid,
            }
        )

    def _finish_gate(self, cid: str, decision: GateDecision, verdict_count: int) -> None:
        decision.verdict_refs = self._verdict_refs_for(cid, verdict_count)
        self._record_decision(decision, cid)
        payload = {
            "stage": decision.stage.value,
            "outcome": "kill" if decision.outcome == "kill" else (
                "partial_kill_reentry" if decision.outcome == "partial_kill_reentry" else "promote"
            ),
            "reason_ref": decision.verdict_refs[0] if decision.outcome == "kill" and decision.verdict_refs else None,
            "unanimity_warning": decision.unanimity_warning,
            "human_review": decision.human_review,
            "target_stage": decision.target_stage,
        }
        self._append_event(
            cid, EventKind.GATE_DECIDED, f"decision:{cid}:{decision.stage.value}", payload
        )
        self._funnel(
            {
                "kind": "gate",
                "wave": decision.wave,
                "stage": decision.stage.value,
                "candidate_id": cid,
                "outcome": decision.outcome,
            }
        )

    def _run_stage_a(self, cid: str) -> None:
        self._enter_stage(cid, Stage.A)
        roster = self.rosters[Stage.A]
        wave = self.state.candidates[cid].origin.wave
        creative_spec, creative_kind = roster.creative[0]
        creative, _ = self._dispatch_verdict(creative_spec, cid, Stage.A, creative_kind)
        adversarial = [
            self._dispatch_verdict(spec, cid, Stage.A, kind)[0]
            for spec, kind in roster.adversarial
        ]
        decision = decide_stage_a(adversarial, creative, candidate_id=cid, wave=wave)
        decision.unanimity_warning = unanimity_monitor(adversarial + [creative])
        self._finish_gate(cid, decision, verdict_count=3)

    def _run_stage_b(self, cid: str) -> None:
        self._enter_stage(cid, Stage.B)
        roster = self.rosters[Stage.B]
        wave = self.state.candidates[cid].origin.wave
        verdicts: list[Verdict] = []
        view_kinds: dict[str, ViewKind] = {}
        for spec, kind in roster.creative + roster.adversarial:
            verdict, used = self._dispatch_verdict(spec, cid, Stage.B, kind)
            verdicts.append(verdict)
            view_kinds[verdict.agent_id] = used
        decision = decide_stage_b(verdicts, view_kinds, candidate_id=cid, wave=wave)
        decision.view_kinds = {aid: k.value for aid, k in view_kinds.items()}
        decision.unanimity_warning = unanimity_monitor(verdicts)
        self._finish_gate(cid, decision, verdict_count=5)

    def _run_stage_c(self, cid: str) -> None:
        self._enter_stage(cid, Stage.C)
        cand = self.state.candidates[cid]
        wave = cand.origin.wave

        if self.config.skip_validation:
            # Gate disabled (experiment configuration): everything advances
            # provisionally, exactly as if validation were never feasible.
            result = ValidationResult("Infeasible", "validation-disabled", "pass", 0.0)
            decision = decide_stage_c(result, None, (), candidate_id=cid, wave=wave)
            self._apply_validation(cid, result, decision)
            return

        roster = self.rosters[Stage.C]
        validator = roster.validators[0]
        view = derive_view(cand, ViewKind.FULL_SYNTHESIS, self._context_for(cid))
        task = TaskSpec(
            kind="validate", candidate_id=cid, stage=Stage.C.value, task_id=self._next_task_id()
        )
        response, _ = self.gateway.dispatch_resolved(validator, task, view)
        if response.kind == "refusal":
            # Refusal is not evidence; without an executed check the attempt
            # is infeasible until a human or reassigned validator steps in.
            status = "Infeasible"
        else:
            status = response.body["status"]

        wc = self.world.candidate(cid) if self.world else None
        observable = f"target emits the observable claimed for {cid}"
        if wc is not None and wc.contaminated_first_check:
            bad = CheckSpec(
                candidate_id=cid,
                kind="scripted_oracle",
                expected_observable=observable,
                observable_source="poc_internal",
                oracle_outcome=status,
            )
            try:
                execute_check(bad, self.state.prepared)
            except ContaminatedCheck as exc:
                self._journal(
                    {"kind": "contaminated_check_rejected", "candidate_id": cid, "error": str(exc)}
                )
        check = CheckSpec(
            candidate_id=cid,
            kind="scripted_oracle",
            expected_observable=observable,
            observable_source="target",
            oracle_outcome=status,
        )
        result = execute_check(
            check,
            self.state.prepared,
            transcript_dir=(self.dir / "transcripts") if (self.dir and self.audit_trail) else None,
        )

        severity_before = None
        assessments: list[SeverityVector] = []
        if result.status == "Confirmed" and cand.claim.claimed_severity:
            severity_before = SeverityVector.from_vector(cand.claim.claimed_severity)
            for spec, kind in roster.adversarial:
                aview = derive_view(cand, kind, self._context_for(cid))
                atask = TaskSpec(
                    kind="assess_severity",
                    candidate_id=cid,
                    stage=Stage.C.value,
                    task_id=self._next_task_id(),
                )
                aresp, _ = self.gateway.dispatch_resolved(spec, atask, aview)
                if aresp.kind == "refusal":
                    continue
                vector = (aresp.body or {}).get("severity_vector")
                if vector:
                    assessments.append(SeverityVector.from_vector(vector))
        decision = decide_stage_c(
            result, severity_before, assessments, candidate_id=cid, wave=wave
        )
        self._apply_validation(cid, result, decision)

    def _apply_validation(self, cid: str, result: ValidationResult, decision: GateDecision) -> None:
        self._record_decision(decision, cid)
        self._append_event(
            cid,
            EventKind.VALIDATED,
            f"validation:{cid}",
            {
                "status": result.status,
                "transcript_ref": result.transcript_ref,
                "reason_ref": f"validation:{cid}" if result.status == "Refuted" else None,
            },
        )
        if decision.recalibration:
            self.state.severities[cid] = decision.recalibration["after"]
            self._funnel(
                {
                    "kind": "calibration",
                    "candidate_id": cid,
                    "direction": decision.recalibration["direction"],
                }
            )
        self._funnel(
            {
                "kind": "gate",
                "wave": decision.wave,
                "stage": Stage.C.value,
                "candidate_id": cid,
                "outcome": decision.outcome,
            }
        )

    def _run_stage_d(self, cid: str) -> None:
        self._enter_stage(cid, Stage.D)
        roster = self.rosters[Stage.D]
        wave = self.state.candidates[cid].origin.wave
        verdicts = [
            self._dispatch_verdict(spec, cid, Stage.D, kind, task_kind="critique")[0]
            for spec, kind in roster.critics
        ]
        decision = decide_stage_d(
            verdicts, self.config.default_family, candidate_id=cid, wave=wave
        )
        if len(verdicts) >= 3:
            decision.unanimity_warning = unanimity_monitor(verdicts)
        self._finish_gate(cid, decision, verdict_count=len(verdicts))

    # --- candidate + campaign loops ---------------------------------------

    def run_candidate(self, cid: str) -> Candidate:
        stage_fns = {
            Stage.A: self._run_stage_a,
            Stage.B: self._run_stage_b,
            Stage.C: self._run_stage_c,
            Stage.D: self._run_stage_d,
        }
        while True:
            cand = self.state.candidates[cid]
            st = cand.state
            if st.terminal:
                break
            if st.kind is StateKind.REENTRY:
                self._reentries[cid] = self._reentries.get(cid, 0) + 1
                if self._reentries[cid] > self.config.max_reentries:
                    self._journal({"kind": "reentry_limit", "candidate_id": cid})
                    self._append_event(
                        cid,
                        EventKind.OVERRIDDEN,
                        f"forcekill:{cid}",
                        {"action": "force_kill", "reason_ref": "reentry limit"},
                    )
                    continue
                self._append_event(
                    cid, EventKind.DISPATCHED, f"reentry:{cid}", {"stage": st.stage.value}
                )
                continue
            stage = Stage.A if st.kind is StateKind.GENERATED else st.stage
            stage_fns[stage](cid)
        cand = self.state.candidates[cid]
        if cand.state.kind is StateKind.DISCLOSURE_READY:
            self._funnel(
                {
                    "kind": "disclosure_ready",
                    "wave": cand.origin.wave,
                    "candidate_id": cand.id,
                }
            )
        if self.state.store is not None:
            self.state.store.persist(cand)
        return cand

    def run(self) -> CampaignState:
        self.run_prepare()
        learnings: Optional[Learnings] = None
        completed: list[tuple[Candidate, GateDecision]] = []
        since_reseed = 0
        waves = self.world.waves() or [1]
        for wave in waves:
            ids = self.run_generation_wave(wave, learnings)
            for cid in ids:
                cand = self.run_candidate(cid)
                decision = self.state.final_decision(cid)
                if decision is not None:
                    completed.append((cand, decision))
                    since_reseed += 1
                if completed and since_reseed >= self.config.reseed_cadence:
                    learnings = reseed(wave, completed)
                    self.state.learnings_history.append(learnings)
                    self._journal({"kind": "reseeded", "wave": wave})
                    since_reseed = 0
            if completed and since_reseed:
                learnings = reseed(wave, completed)
                self.state.learnings_history.append(learnings)
                since_reseed = 0
        self._write_outputs()
        return self.state

    def resurrect_and_continue(self, override: OverrideRecord) -> Candidate:
        """Apply a resurrection override and re-run the candidate's pipeline."""
        cid = override.candidate_id
        cand = self.state.candidates[cid]
        cand = model.resurrect(cand, override)
        self.state.candidates[cid] = cand
        # Pre-kill context stays recorded but is excluded from fresh views.
        self._verdict_history[cid] = [
            (summary, True) for summary, _ in self._verdict_history.get(cid, [])
        ]
        self._creative_rationale.pop(cid, None)
        if isinstance(self.backend, ScriptedBackend):
            self.backend.note_resurrected(cid)
        self._journal({"kind": "resurrected", "candidate_id": cid})
        result = self.run_candidate(cid)
        self._write_outputs()
        return result

    def _write_outputs(self) -> None:
        if not (self.dir and self.audit_trail):
            return
        (self.dir / "config.json").write_text(
            json.dumps(self.config.to_record(), indent=1, sort_keys=True)
        )
        with (self.dir / "funnel.log").open("w") as fh:
            for rec in self.state.funnel_records:
                fh.write(json.dumps(rec, sort_keys=True) + "\n")


def run_campaign(
    config: CampaignConfig,
    world: World,
    campaign_dir: Optional[Path] = None,
    store=None,
    backend=None,
    rules: Sequence[Rule] = (),
    audit_trail: bool = True,
) -> CampaignState:
    runner = CampaignRunner(
        config,
        world,
        campaign_dir=campaign_dir,
        store=store,
        backend=backend,
        rules=rules,
        audit_trail=audit_trail,
    )
    state = runner.run()
    state.runner = runner  # kept for overrides / resumption
    return state
