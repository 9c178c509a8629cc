"""Ground-truth worlds and the deterministic scripted agent backend.

A world file declares candidates with ground-truth labels and a two-class
agent error model: plain reasoning errors are independent per agent, while
correlated-prior errors are shared within a model family through a latent
per-(candidate, family) draw followed with probability ``family_agreement``.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .context import ContextView
from .errors import InvalidWorld
from .gateway import (
    AgentResponse,
    AgentSpec,
    Direction,
    Exploitation,
    Role,
    TaskSpec,
    Tier,
    Verdict,
)

WORLD_SCHEMA_VERSION = 1

# Default same-family agreement when both agents err on a shared-prior class.
DEFAULT_FAMILY_AGREEMENT = 0.6


@dataclass(frozen=True)
class AgentModel:
    error_rate: float = 0.0
    family_agreement: float = DEFAULT_FAMILY_AGREEMENT
    refusal_rate: float = 0.0
    senior_refusal_rate: float = 0.0

    def __post_init__(self):
        for name in ("error_rate", "family_agreement", "refusal_rate", "senior_refusal_rate"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise InvalidWorld(f"agent_model.{name} must lie in [0, 1], got {value}")


@dataclass(frozen=True)
class ValidationModel:
    infeasible_rate: float = 0.0
    error_rate: float = 0.0

    def __post_init__(self):
        for name in ("infeasible_rate", "error_rate"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise InvalidWorld(f"validation_model.{name} must lie in [0, 1], got {value}")


@dataclass(frozen=True)
class WorldTarget:
    target_ref: str
    revision: str
    has_release: bool = True
    prior_art: str = ""
    hotspots: tuple[tuple[str, int], ...] = ()
    subsystem_partition: tuple[str, ...] = ()


@dataclass(frozen=True)
class WorldCandidate:
    id: str
    wave: int
    title: str
    defect_class: str
    summary: str
    entry_points: tuple[str, ...]
    scope: str
    ground_truth: str  # true_positive | false_positive
    error_class: str = "reasoning_error"  # or correlated_prior_error
    error_rate: Optional[float] = None  # per-candidate override of the model rate
    error_mode: str = "always"  # or until_resurrected
    overclaimed: bool = False
    claimed_severity: Optional[str] = None
    assessed_severity: Optional[str] = None
    archetype: str = ""
    omit_self_critique: bool = False
    contaminated_first_check: bool = False
    critic_partial_subclaim: Optional[str] = None

    def __post_init__(self):
        if self.ground_truth not in ("true_positive", "false_positive"):
            raise InvalidWorld(f"{self.id}: bad ground_truth {self.ground_truth!r}")
        if self.error_class not in ("reasoning_error", "correlated_prior_error"):
            raise InvalidWorld(f"{self.id}: bad error_class {self.error_class!r}")
        if self.error_mode not in ("always", "until_resurrected"):
            raise InvalidWorld(f"{self.id}: bad error_mode {self.error_mode!r}")
        if self.error_rate is not None and not 0.0 <= self.error_rate <= 1.0:
            raise InvalidWorld(f"{self.id}: error_rate out of range")


@dataclass(frozen=True)
class World:
    name: str
    seed: int
    target: WorldTarget
    candidates: tuple[WorldCandidate, ...]
    agent_model: AgentModel = AgentModel()
    validation_model: ValidationModel = ValidationModel()

    def __post_init__(self):
        ids = [c.id for c in self.candidates]
        if len(ids) != len(set(ids)):
            raise InvalidWorld("candidate ids must be unique")
        partition = set(self.target.subsystem_partition)
        for cand in self.candidates:
            if partition and cand.scope not in partition:
                raise InvalidWorld(f"{cand.id}: scope {cand.scope!r} outside the partition")

    def candidate(self, cid: str) -> WorldCandidate:
        for cand in self.candidates:
            if cand.id == cid:
                return cand
        raise InvalidWorld(f"unknown world candidate: {cid}")

    def waves(self) -> list[int]:
        return sorted({c.wave for c in self.candidates})

    def candidates_for(self, wave: int, scope: Optional[str] = None) -> list[WorldCandidate]:
        return [
            c
            for c in self.candidates
            if c.wave == wave and (scope is None or c.scope == scope)
        ]


def build_world(spec: dict) -> World:
    """Validate a world spec dict and freeze it into a World."""
    if spec.get("v", WORLD_SCHEMA_VERSION) != WORLD_SCHEMA_VERSION:
        raise InvalidWorld(f"unsupported world schema version: {spec.get('v')}")
    try:
        target = WorldTarget(
            target_ref=spec["target"]["target_ref"],
            revision=spec["target"]["revision"],
            has_release=spec["target"].get("has_release", True),
            prior_art=spec["target"].get("prior_art", ""),
            hotspots=tuple((r, int(n)) for r, n in spec["target"].get("hotspots", [])),
            subsystem_partition=tuple(spec["target"].get("subsystem_partition", [])),
        )
        candidates = tuple(
            WorldCandidate(
                id=c["id"],
                wave=int(c.get("wave", 1)),
                title=c.get("title", c["id"]),
                defect_class=c.get("defect_class", "logic"),
                summary=c.get("summary", f"claimed defect {c['id']}"),
                entry_points=tuple(c.get("entry_points", ["src/main.c:1"])),
                scope=c["scope"],
                ground_truth=c["ground_truth"],
                error_class=c.get("error_class", "reasoning_error"),
                error_rate=c.get("error_rate"),
                error_mode=c.get("error_mode", "always"),
                overclaimed=bool(c.get("overclaimed", False)),
                claimed_severity=c.get("claimed_severity"),
                assessed_severity=c.get("assessed_severity"),
                archetype=c.get("archetype", ""),
                omit_self_critique=bool(c.get("omit_self_critique", False)),
                contaminated_first_check=bool(c.get("contaminated_first_check", False)),
                critic_partial_subclaim=c.get("critic_partial_subclaim"),
            )
            for c in spec["candidates"]
        )
        world = World(
            name=spec.get("name", "world"),
            seed=int(spec.get("seed", 0)),
            target=target,
            candidates=candidates,
            agent_model=AgentModel(**spec.get("agent_model", {})),
            validation_model=ValidationModel(**spec.get("validation_model", {})),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidWorld(f"malformed world spec: {exc}") from exc
    return world


def load_world(path: Path) -> World:
    return build_world(json.loads(Path(path).read_text()))


def template_world(name: str = "basic", seed: int = 7) -> dict:
    """A small editable world spec; written by ``stagegate world generate``."""
    return {
        "v": WORLD_SCHEMA_VERSION,
        "name": name,
        "seed": seed,
        "target": {
            "target_ref": "demo-lib",
            "revision": "v1.2.3",
            "has_release": True,
            "prior_art": "Historical defects: two parser overflows, one state-machine bypass.",
            "hotspots": [["parser", 42], ["session", 17], ["io", 5]],
            "subsystem_partition": ["parsing", "session", "io"],
        },
        "agent_model": {
            "error_rate": 0.0,
            "family_agreement": DEFAULT_FAMILY_AGREEMENT,
            "refusal_rate": 0.0,
        },
        "validation_model": {"infeasible_rate": 0.0, "error_rate": 0.0},
        "candidates": [
            {
                "id": "cand-parse-1",
                "wave": 1,
                "title": "Length check bypass in header parser",
                "defect_class": "memory-safety",
                "summary": "Claimed out-of-bounds read when header length exceeds buffer.",
                "entry_points": ["src/parser.c:118"],
                "scope": "parsing",
                "ground_truth": "true_positive",
                "claimed_severity": "CVSS:3.1/AV:N/AC:L/PR:N/UI:N/S:U/C:H/I:N/A:N",
            },
            {
                "id": "cand-session-1",
                "wave": 1,
                "title": "Alleged stale-session reuse window",
                "defect_class": "logic",
                "summary": "Claimed race allowing reuse of an expired session token.",
                "entry_points": ["src/session.c:54"],
                "scope": "session",
                "ground_truth": "false_positive",
            },
        ],
    }


class ScriptedBackend:
    """Deterministic agent backend driven by a World and a seeded RNG.

    Refusals are drawn after the substantive answer is computed and the
    answer is cached per task id, so a reassigned dispatch returns exactly
    what the refusing agent would have said.  This keeps refusal handling
    neutral with respect to the outcome distribution.
    """

    def __init__(self, world: World, rng: random.Random):
        self.world = world
        self.rng = rng
        self._family_latent: dict[tuple[str, str], bool] = {}
        self._pending: dict[str, AgentResponse] = {}
        self.resurrected: set[str] = set()
        self._partial_done: set[str] = set()

    def note_resurrected(self, candidate_id: str) -> None:
        # Post-resurrection review sees the uplifted claim (new trigger path),
        # so scripted error_mode=until_resurrected candidates read true again.
        self.resurrected.add(candidate_id)

    # --- error model -------------------------------------------------------

    def _draw_error(self, cand: WorldCandidate, family: str) -> bool:
        if cand.error_mode == "until_resurrected":
            return cand.id not in self.resurrected
        eps = cand.error_rate if cand.error_rate is not None else self.world.agent_model.error_rate
        if cand.error_class == "correlated_prior_error":
            key = (cand.id, family)
            if key not in self._family_latent:
                self._family_latent[key] = self.rng.random() < eps
            if self.rng.random() < self.world.agent_model.family_agreement:
                return self._family_latent[key]
        return self.rng.random() < eps

    # --- dispatch ----------------------------------------------------------

    def submit(self, spec: AgentSpec, task: TaskSpec, view: ContextView, task_text: str) -> AgentResponse:
        if task.reassigned_from is not None:
            cached = self._pending.pop(task.task_id, None)
            if cached is not None:
                cached.agent_id = spec.agent_id
                return cached

        response = self._answer(spec, task, view)

        refusal_rate = (
            self.world.agent_model.refusal_rate
            if spec.tier is Tier.WORKHORSE
            else self.world.agent_model.senior_refusal_rate
        )
        if refusal_rate > 0 and self.rng.random() < refusal_rate:
            self._pending[task.task_id] = response
            return AgentResponse(
                agent_id=spec.agent_id,
                kind="refusal",
                refusal_reason="scripted policy refusal",
            )
        return response

    def _answer(self, spec: AgentSpec, task: TaskSpec, view: ContextView) -> AgentResponse:
        if task.kind == "hunt":
            return self._hunt(spec, task)
        if task.kind == "research":
            return AgentResponse(
                agent_id=spec.agent_id,
                kind="candidate_batch",
                body={
                    "prior_art": self.world.target.prior_art,
                    "hotspots": [list(h) for h in self.world.target.hotspots],
                },
            )
        if task.kind == "review":
            return self._review(spec, task)
        if task.kind == "critique":
            return self._critique(spec, task)
        if task.kind == "validate":
            return self._validate(spec, task)
        if task.kind == "assess_severity":
            return self._assess(spec, task)
        raise ValueError(f"scripted backend cannot handle task kind {task.kind!r}")

    def _hunt(self, spec: AgentSpec, task: TaskSpec) -> AgentResponse:
        params = json.loads(task.instructions) if task.instructions else {}
        wave = int(params.get("wave", 1))
        scopes = params.get("scopes")
        killed_archetypes = set(params.get("killed_archetypes", []))
        batch = []
        for cand in self.world.candidates_for(wave):
            if scopes is not None and cand.scope not in scopes:
                continue
            if cand.archetype and cand.archetype in killed_archetypes:
                continue  # later waves avoid previously-killed failure classes
            entry = {
                "id": cand.id,
                "title": cand.title,
                "defect_class": cand.defect_class,
                "summary": cand.summary,
                "entry_points": list(cand.entry_points),
                "scope": cand.scope,
                "claimed_severity": cand.claimed_severity,
                "archetype": cand.archetype,
            }
            if not cand.omit_self_critique:
                entry["self_critique"] = (
                    f"{cand.id}: the trigger may be unreachable from untrusted input."
                )
            batch.append(entry)
        return AgentResponse(agent_id=spec.agent_id, kind="candidate_batch", body=batch)

    def _review(self, spec: AgentSpec, task: TaskSpec) -> AgentResponse:
        cand = self.world.candidate(task.candidate_id)
        err = self._draw_error(cand, spec.model_family)
        is_fp = cand.ground_truth == "false_positive"
        if spec.role is Role.ADVERSARIAL:
            wants_kill = is_fp != err  # truth XOR error
            if wants_kill:
                verdict = Verdict(
                    agent_id=spec.agent_id,
                    role=Role.ADVERSARIAL,
                    direction=Direction.KILL,
                    rationale=f"{cand.id}: claimed trigger does not hold against the code",
                    evidence_refs=(f"{cand.entry_points[0]}" if cand.entry_points else "spec",),
                    code_grounded=True,
                    confidence=0.9,
                    model_family=spec.model_family,
                )
            else:
                verdict = Verdict(
                    agent_id=spec.agent_id,
                    role=Role.ADVERSARIAL,
                    direction=Direction.PROMOTE,
                    rationale=f"{cand.id}: no code-grounded objection found",
                    confidence=0.6,
                    model_family=spec.model_family,
                )
        elif spec.role is Role.CREATIVE:
            argues_real = (not is_fp) != err
            if argues_real:
                verdict = Verdict(
                    agent_id=spec.agent_id,
                    role=Role.CREATIVE,
                    direction=Direction.PROMOTE,
                    rationale=f"{cand.id}: exploitation path developed",
                    confidence=0.8,
                    exploitation=Exploitation(
                        trigger_path=f"{cand.entry_points[0] if cand.entry_points else 'spec text'}"
                        f" via crafted input",
                        preconditions=("attacker-controlled input reaches the entry point",),
                    ),
                    model_family=spec.model_family,
                )
            else:
                verdict = Verdict(
                    agent_id=spec.agent_id,
                    role=Role.CREATIVE,
                    direction=Direction.ABSTAIN,
                    rationale=f"{cand.id}: unable to develop a credible trigger",
                    confidence=0.4,
                    model_family=spec.model_family,
                )
        else:
            raise ValueError(f"review task dispatched to role {spec.role}")
        return AgentResponse(agent_id=spec.agent_id, kind="verdict", body=verdict)

    def _critique(self, spec: AgentSpec, task: TaskSpec) -> AgentResponse:
        cand = self.world.candidate(task.candidate_id)
        if cand.critic_partial_subclaim and cand.id not in self._partial_done:
            self._partial_done.add(cand.id)
            verdict = Verdict(
                agent_id=spec.agent_id,
                role=Role.CRITIC,
                direction=Direction.PARTIAL_KILL,
                rationale=f"{cand.id}: one subclaim does not survive independent review",
                refuted_subclaim=cand.critic_partial_subclaim,
                confidence=0.7,
                model_family=spec.model_family,
            )
            return AgentResponse(agent_id=spec.agent_id, kind="verdict", body=verdict)
        err = self._draw_error(cand, spec.model_family)
        is_fp = cand.ground_truth == "false_positive"
        objects = is_fp != err
        if objects:
            verdict = Verdict(
                agent_id=spec.agent_id,
                role=Role.CRITIC,
                direction=Direction.KILL,
                rationale=f"{cand.id}: independent critique finds the claim unsupported",
                confidence=0.85,
                model_family=spec.model_family,
            )
        else:
            verdict = Verdict(
                agent_id=spec.agent_id,
                role=Role.CRITIC,
                direction=Direction.PROMOTE,
                rationale=f"{cand.id}: no objection from independent critique",
                confidence=0.7,
                model_family=spec.model_family,
            )
        return AgentResponse(agent_id=spec.agent_id, kind="verdict", body=verdict)

    def _validate(self, spec: AgentSpec, task: TaskSpec) -> AgentResponse:
        cand = self.world.candidate(task.candidate_id)
        vm = self.world.validation_model
        if vm.infeasible_rate > 0 and self.rng.random() < vm.infeasible_rate:
            status = "Infeasible"
        else:
            err = vm.error_rate > 0 and self.rng.random() < vm.error_rate
            truly_real = cand.ground_truth == "true_positive"
            status = ("Confirmed" if truly_real else "Refuted") if not err else (
                "Refuted" if truly_real else "Confirmed"
            )
        return AgentResponse(
            agent_id=spec.agent_id,
            kind="validation_report",
            body={"status": status, "candidate_id": cand.id},
        )

    def _assess(self, spec: AgentSpec, task: TaskSpec) -> AgentResponse:
        cand = self.world.candidate(task.candidate_id)
        vector = (
            cand.assessed_severity
            if (cand.overclaimed and cand.assessed_severity)
            else cand.claimed_severity
        )
        return AgentResponse(
            agent_id=spec.agent_id,
            kind="verdict",
            body={"severity_vector": vector, "candidate_id": cand.id},
        )
