"""Uniform dispatch over agent backends with role mandates and refusal routing.

Task text is assembled deterministically: role mandate, then injected rules,
then view fragments, in that fixed order.  Refusals are first-class responses,
never silently retried; a workhorse refusal reroutes to the senior tier of the
same family, a senior refusal escalates to the human queue.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Optional, Protocol

from .context import ContextView, ExposureLedger
from .errors import BackendUnavailable, ConfigError, DispatchTimeout

DEFAULT_DISPATCH_TIMEOUT_S = 600.0


class Tier(str, Enum):
    WORKHORSE = "workhorse"
    SENIOR = "senior"


class Role(str, Enum):
    HUNTER = "hunter"
    CREATIVE = "creative"
    ADVERSARIAL = "adversarial"
    VALIDATOR = "validator"
    CRITIC = "critic"
    ARBITER = "arbiter"


class Direction(str, Enum):
    PROMOTE = "promote"
    KILL = "kill"
    PARTIAL_KILL = "partial_kill"
    ABSTAIN = "abstain"
    REFUSED = "refused"


@dataclass(frozen=True)
class AgentSpec:
    agent_id: str
    backend: str  # "scripted" | "live"
    model_family: str
    tier: Tier
    role: Role


@dataclass(frozen=True)
class Exploitation:
    """Structured plausible-exploitation argument a creative agent must emit."""

    trigger_path: str
    preconditions: tuple[str, ...]

    @property
    def plausible(self) -> bool:
        return bool(self.trigger_path and self.preconditions)


@dataclass(frozen=True)
class Verdict:
    agent_id: str
    role: Role
    direction: Direction
    rationale: str
    evidence_refs: tuple[str, ...] = ()
    code_grounded: Optional[bool] = None
    confidence: float = 0.5
    exploitation: Optional[Exploitation] = None
    refuted_subclaim: Optional[str] = None
    model_family: str = ""

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError("confidence must lie in [0, 1]")
        if self.role is Role.ADVERSARIAL and self.direction is Direction.KILL:
            if self.code_grounded is None:
                raise ValueError("adversarial kill must state whether it is code-grounded")
        if self.direction is Direction.PARTIAL_KILL and not self.refuted_subclaim:
            raise ValueError("partial kill must name the refuted subclaim")

    def to_record(self) -> dict:
        return {
            "agent_id": self.agent_id,
            "role": self.role.value,
            "direction": self.direction.value,
            "rationale": self.rationale,
            "evidence_refs": list(self.evidence_refs),
            "code_grounded": self.code_grounded,
            "confidence": self.confidence,
            "exploitation": (
                {
                    "trigger_path": self.exploitation.trigger_path,
                    "preconditions": list(self.exploitation.preconditions),
                }
                if self.exploitation
                else None
            ),
            "refuted_subclaim": self.refuted_subclaim,
            "model_family": self.model_family,
        }


@dataclass(frozen=True)
class TaskSpec:
    kind: str  # hunt | review | validate | assess_severity | critique | research
    candidate_id: Optional[str] = None
    stage: Optional[str] = None
    instructions: str = ""
    task_id: str = ""
    reassigned_from: Optional[str] = None


@dataclass
class AgentResponse:
    agent_id: str
    kind: str  # verdict | candidate_batch | validation_report | refusal
    body: object = None
    raw_transcript_ref: str = ""
    refusal_reason: str = ""

    def __post_init__(self):
        if self.kind == "refusal" and not self.refusal_reason:
            raise ValueError("refusal responses must carry a refusal_reason")


@dataclass(frozen=True)
class RoutingDecision:
    action: str  # reassign_senior | escalate_human
    replacement: Optional[AgentSpec] = None


class Backend(Protocol):
    def submit(self, spec: AgentSpec, task: TaskSpec, view: ContextView, task_text: str) -> AgentResponse: ...


# Role mandates.  Adversarial text must never ask for betterment of the
# candidate; creative text must never ask for destruction of it.  The purity
# test asserts on these exact markers.
ROLE_MANDATES = {
    Role.ADVERSARIAL: (
        "KILL MANDATE. Your sole task is to destroy this candidate claim: "
        "attack reachability, preconditions, and plausible triggers. A kill "
        "requires a code-grounded refutation. Do not soften the claim and do "
        "not help its author."
    ),
    Role.CREATIVE: (
        "CREATIVE MANDATE. Argue that this candidate is a real defect. "
        "Develop the exploitation path: a concrete trigger path and the "
        "preconditions it needs. Emit the structured exploitation argument."
    ),
    Role.HUNTER: (
        "HUNTER MANDATE. Search your assigned subsystem scope for candidate "
        "defects using your context stratum. For every candidate, attach a "
        "self-critique stating why it might not be exploitable."
    ),
    Role.VALIDATOR: (
        "VALIDATION MANDATE. Execute the supplied check against the target "
        "and report only what the target itself observably did."
    ),
    Role.CRITIC: (
        "INDEPENDENT CRITIQUE MANDATE. You are given minimal context on "
        "purpose. Assess the claim on its own terms and report any objection, "
        "including partial objections to a single subclaim."
    ),
    Role.ARBITER: (
        "ARBITER MANDATE. Weigh the recorded verdicts and report the decision "
        "the stage rule implies."
    ),
}

# Markers the purity property asserts on (lowercase substring match).
FORBIDDEN_MARKERS = {
    Role.ADVERSARIAL: ("improve", "suggest", "strengthen the claim"),
    Role.CREATIVE: ("refute", "disprove", "kill mandate"),
}
REQUIRED_MARKERS = {
    Role.ADVERSARIAL: ("kill mandate",),
    Role.CREATIVE: ("exploitation",),
}


def assemble_task(spec: AgentSpec, task: TaskSpec, view: ContextView, rules_section: str = "") -> str:
    """Deterministic prompt assembly: mandate, rules, then view fragments."""
    parts = [ROLE_MANDATES[spec.role]]
    if task.instructions:
        parts.append(task.instructions)
    if rules_section:
        parts.append(rules_section)
    for frag in view.content:
        parts.append(f"[{frag.kind.value}]\n{frag.text}")
    return "\n\n".join(parts)


class Gateway:
    """Dispatch surface shared by the engine, CLI, and tests.

    Records one exposure per dispatch before the backend is invoked and keeps
    running dispatch/refusal counters for the funnel and the refusal-rate op.
    """

    def __init__(
        self,
        backends: dict[str, Backend],
        ledger: ExposureLedger,
        clock: Callable[[], float],
        transcript_dir: Optional[Path] = None,
        rules_section: str = "",
        timeout_s: float = DEFAULT_DISPATCH_TIMEOUT_S,
        journal: Optional[Callable[[dict], None]] = None,
    ):
        self.backends = backends
        self.ledger = ledger
        self.clock = clock
        self.transcript_dir = Path(transcript_dir) if transcript_dir else None
        self.rules_section = rules_section
        self.timeout_s = timeout_s
        self.journal = journal or (lambda event: None)
        self.dispatch_count = 0
        self.refusal_count = 0
        self.escalation_queue: list[dict] = []

    def dispatch(self, spec: AgentSpec, task: TaskSpec, view: ContextView) -> AgentResponse:
        backend = self.backends.get(spec.backend)
        if backend is None:
            raise BackendUnavailable(f"no backend registered for {spec.backend!r}")
        self.ledger.record_exposure(
            spec.agent_id,
            view,
            timestamp=self.clock(),
            role=spec.role.value,
            stage=task.stage,
        )
        task_text = assemble_task(spec, task, view, self.rules_section)
        self.dispatch_count += 1
        try:
            response = backend.submit(spec, task, view, task_text)
        except DispatchTimeout as exc:
            # Absence of review is not refutation: a timed-out reviewer abstains.
            response = AgentResponse(
                agent_id=spec.agent_id,
                kind="verdict",
                body=Verdict(
                    agent_id=spec.agent_id,
                    role=spec.role,
                    direction=Direction.ABSTAIN,
                    rationale=f"dispatch timed out: {exc}",
                    model_family=spec.model_family,
                ),
            )
        if response.kind == "refusal":
            self.refusal_count += 1
        self._persist_transcript(spec, task, task_text, response)
        return response

    def _persist_transcript(self, spec, task, task_text, response) -> None:
        if not self.transcript_dir:
            return
        self.transcript_dir.mkdir(parents=True, exist_ok=True)
        ref = f"{task.task_id or task.kind}-{spec.agent_id}-{self.dispatch_count}"
        path = self.transcript_dir / f"{ref}.json"
        path.write_text(
            json.dumps(
                {
                    "agent_id": spec.agent_id,
                    "task": dataclasses.asdict(task),
                    "task_text": task_text,
                    "response_kind": response.kind,
                    "refusal_reason": response.refusal_reason,
                },
                indent=1,
                sort_keys=True,
            )
        )
        response.raw_transcript_ref = ref

    def handle_refusal(self, response: AgentResponse, spec: AgentSpec) -> RoutingDecision:
        """Route a refusal; it is never evidence in either direction."""
        if response.kind != "refusal":
            raise ValueError("handle_refusal requires a refusal response")
        self.journal(
            {
                "kind": "refusal",
                "agent_id": spec.agent_id,
                "tier": spec.tier.value,
                "reason": response.refusal_reason,
            }
        )
        if spec.tier is Tier.WORKHORSE:
            replacement = dataclasses.replace(
                spec, tier=Tier.SENIOR, agent_id=f"{spec.agent_id}+senior"
            )
            return RoutingDecision(action="reassign_senior", replacement=replacement)
        entry = {
            "agent_id": spec.agent_id,
            "reason": response.refusal_reason,
            "ts": self.clock(),
        }
        self.escalation_queue.append(entry)
        return RoutingDecision(action="escalate_human")

    def dispatch_resolved(
        self, spec: AgentSpec, task: TaskSpec, view: ContextView
    ) -> tuple[AgentResponse, Optional[AgentSpec]]:
        """Dispatch and resolve at most one refusal reroute.

        Returns the final response plus the spec that actually answered.  A
        senior-tier refusal leaves the escalation-queue entry and returns the
        refusal itself; the caller must treat it as absence of evidence.
        """
        response = self.dispatch(spec, task, view)
        if response.kind != "refusal":
            return response, spec
        routing = self.handle_refusal(response, spec)
        if routing.action == "reassign_senior":
            retask = dataclasses.replace(task, reassigned_from=spec.agent_id)
            self.journal(
                {
                    "kind": "reassignment",
                    "from": spec.agent_id,
                    "to": routing.replacement.agent_id,
                }
            )
            retry = self.dispatch(routing.replacement, retask, view)
            return retry, routing.replacement
        return response, None

    def refusal_rate(self) -> float:
        if self.dispatch_count == 0:
            raise ConfigError("refusal_rate requires at least one dispatch")
        return self.refusal_count / self.dispatch_count


class LiveHTTPBackend:
    """HTTP backend: JSON request/response against a configured endpoint.

    Credentials come from environment variables and are never logged.  Refusal
    detection prefers an explicit structured field; otherwise a configurable
    marker-phrase classifier is applied to the response text.
    """

    def __init__(
        self,
        endpoint: str,
        token: Optional[str] = None,
        max_tokens: int = 4096,
        refusal_markers: tuple[str, ...] = ("i cannot assist", "i must decline"),
        timeout_s: float = DEFAULT_DISPATCH_TIMEOUT_S,
        session=None,
    ):
        import requests

        self.endpoint = endpoint
        self.token = token
        self.max_tokens = max_tokens
        self.refusal_markers = tuple(m.lower() for m in refusal_markers)
        self.timeout_s = timeout_s
        self.session = session or requests.Session()

    def submit(self, spec: AgentSpec, task: TaskSpec, view: ContextView, task_text: str) -> AgentResponse:
        import requests

        headers = {}
        if self.token:
            headers["Authorization"] = f"Bearer {self.token}"
        payload = {
            "task_text": task_text,
            "role": spec.role.value,
            "view_fragments": [f.to_record() for f in view.content],
            "max_tokens": self.max_tokens,
        }
        try:
            resp = self.session.post(
                self.endpoint, json=payload, headers=headers, timeout=self.timeout_s
            )
        except requests.Timeout as exc:
            raise DispatchTimeout(str(exc)) from exc
        except requests.RequestException as exc:
            raise BackendUnavailable(str(exc)) from exc
        data = resp.json()
        if data.get("refused") or self._looks_refused(data.get("text", "")):
            return AgentResponse(
                agent_id=spec.agent_id,
                kind="refusal",
                refusal_reason=data.get("refusal_reason") or data.get("text", "refused"),
            )
        return AgentResponse(agent_id=spec.agent_id, kind=data.get("kind", "verdict"), body=data)

    def _looks_refused(self, text: str) -> bool:
        lowered = text.lower()
        return any(marker in lowered for marker in self.refusal_markers)
