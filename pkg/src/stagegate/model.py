"""Candidate domain types and the lifecycle state machine.

The event history is the single source of truth: ``Candidate.state`` is a
cache that must always equal ``replay_state(history)``.  All transitions go
through :func:`transition`, which validates legality and sequence numbers and
returns a new candidate (the input is never mutated).
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional

from .errors import IllegalTransition, MissingAuthorization, NotKilled, StaleSequence


class Stage(str, Enum):
    A = "A"
    B = "B"
    C = "C"
    D = "D"


class DefectClass(str, Enum):
    MEMORY_SAFETY = "memory-safety"
    LOGIC = "logic"
    CRYPTO_ORACLE = "crypto-oracle"
    SPEC_DEFECT = "spec-defect"
    OTHER = "other"


class SourceStratum(str, Enum):
    PRIOR_DEFECTS = "prior-defects"
    GIT_HOTSPOTS = "git-hotspots"
    NORMATIVE_SPEC = "normative-spec"
    BUG_ARCHETYPES = "bug-archetypes"


class EventKind(str, Enum):
    GENERATED = "generated"
    DISPATCHED = "dispatched"
    VERDICT_RECORDED = "verdict_recorded"
    GATE_DECIDED = "gate_decided"
    VALIDATED = "validated"
    OVERRIDDEN = "overridden"
    RESEEDED = "reseeded"
    REFUSAL_RECORDED = "refusal_recorded"


class StateKind(str, Enum):
    GENERATED = "generated"
    IN_STAGE = "in_stage"
    DISCLOSURE_READY = "disclosure_ready"
    KILLED = "killed"
    REENTRY = "reentry"


# Candidate flags
FLAG_PROVISIONAL = "provisional"
FLAG_RESURRECTED = "resurrected"
FLAG_UNANIMITY_WARNED = "unanimity_warned"
FLAG_HUMAN_REVIEW = "human_review"
FLAG_DEV_HEAD = "dev_head_target"


@dataclass(frozen=True)
class LifecycleState:
    kind: StateKind
    stage: Optional[Stage] = None
    reason_ref: Optional[str] = None

    def describe(self) -> str:
        if self.kind is StateKind.IN_STAGE:
            return f"InStage({self.stage.value})"
        if self.kind is StateKind.KILLED:
            return f"Killed({self.stage.value if self.stage else '?'})"
        if self.kind is StateKind.REENTRY:
            return f"Reentry({self.stage.value})"
        return self.kind.value

    @property
    def terminal(self) -> bool:
        return self.kind in (StateKind.KILLED, StateKind.DISCLOSURE_READY)


GENERATED = LifecycleState(StateKind.GENERATED)


def in_stage(stage: Stage) -> LifecycleState:
    return LifecycleState(StateKind.IN_STAGE, stage)


def killed(stage: Stage, reason_ref: Optional[str] = None) -> LifecycleState:
    return LifecycleState(StateKind.KILLED, stage, reason_ref)


def reentry(stage: Stage) -> LifecycleState:
    return LifecycleState(StateKind.REENTRY, stage)


DISCLOSURE_READY = LifecycleState(StateKind.DISCLOSURE_READY)


@dataclass(frozen=True)
class Claim:
    title: str
    defect_class: DefectClass
    summary: str
    entry_points: tuple[str, ...] = ()
    claimed_severity: Optional[str] = None  # canonical CVSS v3.1 vector, if claimed

    def __post_init__(self):
        if not self.title or not self.summary:
            raise ValueError("claim title and summary must be non-empty")
        if not self.entry_points and self.defect_class is not DefectClass.SPEC_DEFECT:
            raise ValueError("entry_points may be empty only for spec-defect claims")


@dataclass(frozen=True)
class Origin:
    hunter_id: str
    wave: int
    source_stratum: SourceStratum
    scope_stratum: str

    def __post_init__(self):
        if self.wave < 1:
            raise ValueError("wave must be >= 1")


@dataclass(frozen=True)
class Event:
    seq: int
    timestamp: float
    kind: EventKind
    payload_ref: str
    payload: dict = field(default_factory=dict)

    def to_record(self) -> dict:
        return {
            "seq": self.seq,
            "ts": self.timestamp,
            "kind": self.kind.value,
            "payload_ref": self.payload_ref,
            "payload": self.payload,
        }

    @staticmethod
    def from_record(rec: dict) -> "Event":
        return Event(
            seq=rec["seq"],
            timestamp=rec["ts"],
            kind=EventKind(rec["kind"]),
            payload_ref=rec["payload_ref"],
            payload=rec.get("payload", {}),
        )


@dataclass
class Candidate:
    id: str
    target_ref: str
    claim: Claim
    origin: Origin
    state: LifecycleState = GENERATED
    flags: frozenset = frozenset()
    history: tuple[Event, ...] = ()

    @property
    def last_seq(self) -> int:
        return self.history[-1].seq if self.history else -1

    def to_record(self) -> dict:
        return {
            "id": self.id,
            "target_ref": self.target_ref,
            "claim": {
                "title": self.claim.title,
                "defect_class": self.claim.defect_class.value,
                "summary": self.claim.summary,
                "entry_points": list(self.claim.entry_points),
                "claimed_severity": self.claim.claimed_severity,
            },
            "origin": {
                "hunter_id": self.origin.hunter_id,
                "wave": self.origin.wave,
                "source_stratum": self.origin.source_stratum.value,
                "scope_stratum": self.origin.scope_stratum,
            },
            "state": _state_record(self.state),
            "flags": sorted(self.flags),
            "history": [e.to_record() for e in self.history],
        }

    @staticmethod
    def from_record(rec: dict) -> "Candidate":
        claim = Claim(
            title=rec["claim"]["title"],
            defect_class=DefectClass(rec["claim"]["defect_class"]),
            summary=rec["claim"]["summary"],
            entry_points=tuple(rec["claim"]["entry_points"]),
            claimed_severity=rec["claim"].get("claimed_severity"),
        )
        origin = Origin(
            hunter_id=rec["origin"]["hunter_id"],
            wave=rec["origin"]["wave"],
            source_stratum=SourceStratum(rec["origin"]["source_stratum"]),
            scope_stratum=rec["origin"]["scope_stratum"],
        )
        events = tuple(Event.from_record(e) for e in rec["history"])
        cand = Candidate(
            id=rec["id"],
            target_ref=rec["target_ref"],
            claim=claim,
            origin=origin,
            history=events,
        )
        cand.state, cand.flags = replay_state(events)
        return cand


def _state_record(state: LifecycleState) -> dict:
    return {
        "kind": state.kind.value,
        "stage": state.stage.value if state.stage else None,
        "reason_ref": state.reason_ref,
    }


@dataclass(frozen=True)
class OverrideRecord:
    operator_id: str
    action: str  # resurrect | force_kill | set_severity | approve_disclosure
    candidate_id: str
    justification: str
    timestamp: float
    human_channel: bool = True
    target_stage: Optional[Stage] = None
    severity_vector: Optional[str] = None

    def __post_init__(self):
        if not self.justification:
            raise ValueError("override justification must be non-empty")

    def to_record(self) -> dict:
        return {
            "operator_id": self.operator_id,
            "action": self.action,
            "candidate_id": self.candidate_id,
            "justification": self.justification,
            "ts": self.timestamp,
            "human_channel": self.human_channel,
            "target_stage": self.target_stage.value if self.target_stage else None,
            "severity_vector": self.severity_vector,
        }

    @staticmethod
    def from_record(rec: dict) -> "OverrideRecord":
        return OverrideRecord(
            operator_id=rec["operator_id"],
            action=rec["action"],
            candidate_id=rec["candidate_id"],
            justification=rec["justification"],
            timestamp=rec["ts"],
            human_channel=rec.get("human_channel", False),
            target_stage=Stage(rec["target_stage"]) if rec.get("target_stage") else None,
            severity_vector=rec.get("severity_vector"),
        )


# --- state machine ---------------------------------------------------------

def _stage_of(state: LifecycleState) -> Optional[Stage]:
    """The review stage a candidate is currently awaiting, if any."""
    if state.kind is StateKind.GENERATED:
        return Stage.A
    if state.kind is StateKind.IN_STAGE:
        return state.stage
    return None


_NEXT_STAGE = {Stage.A: Stage.B, Stage.B: Stage.C, Stage.C: Stage.D}


def _apply(state: LifecycleState, flags: frozenset, event: Event):
    """One step of the state machine; raises IllegalTransition on misuse."""
    kind = event.kind
    p = event.payload

    if kind is EventKind.GENERATED:
        if state is not None:
            raise IllegalTransition(state.describe(), "generated")
        return GENERATED, flags

    if state is None:
        raise IllegalTransition("<none>", kind.value)

    if kind is EventKind.DISPATCHED:
        if state.kind is StateKind.REENTRY:
            return in_stage(state.stage), flags
        if state.kind is StateKind.GENERATED:
            return in_stage(Stage.A), flags
        if state.kind is StateKind.IN_STAGE:
            return state, flags
        raise IllegalTransition(state.describe(), "dispatched")

    if kind in (EventKind.VERDICT_RECORDED, EventKind.REFUSAL_RECORDED, EventKind.RESEEDED):
        if state.terminal and kind is EventKind.VERDICT_RECORDED:
            raise IllegalTransition(state.describe(), kind.value)
        return state, flags

    if kind is EventKind.GATE_DECIDED:
        stage = Stage(p["stage"])
        outcome = p["outcome"]
        cur = _stage_of(state)
        if cur is None or cur is not stage:
            raise IllegalTransition(state.describe(), f"gate_decided({outcome}@{stage.value})")
        if p.get("unanimity_warning"):
            flags = flags | {FLAG_UNANIMITY_WARNED}
        if p.get("human_review"):
            flags = flags | {FLAG_HUMAN_REVIEW}
        if outcome == "kill":
            return killed(stage, p.get("reason_ref") or event.payload_ref), flags
        if outcome == "promote":
            if stage is Stage.D:
                return DISCLOSURE_READY, flags
            if stage is Stage.C:
                # Stage-C promotion is driven by a validated event, not a gate
                # decision; a bare promote here would bypass the empirical gate.
                raise IllegalTransition(state.describe(), "gate_decided(promote@C)")
            return in_stage(_NEXT_STAGE[stage]), flags
        if outcome == "partial_kill_reentry":
            if stage is not Stage.D:
                raise IllegalTransition(state.describe(), f"partial_kill_reentry@{stage.value}")
            return reentry(Stage(p.get("target_stage", "B"))), flags
        raise IllegalTransition(state.describe(), f"gate_decided({outcome})")

    if kind is EventKind.VALIDATED:
        status = p["status"]
        if _stage_of(state) is not Stage.C:
            raise IllegalTransition(state.describe(), f"validated({status})")
        if status == "Refuted":
            return killed(Stage.C, p.get("reason_ref") or event.payload_ref), flags
        if status == "Confirmed":
            return in_stage(Stage.D), flags
        if status == "Infeasible":
            return in_stage(Stage.D), flags | {FLAG_PROVISIONAL}
        raise IllegalTransition(state.describe(), f"validated({status})")

    if kind is EventKind.OVERRIDDEN:
        action = p.get("action")
        if action == "resurrect":
            if state.kind is not StateKind.KILLED:
                raise NotKilled(f"cannot resurrect from {state.describe()}")
            if not p.get("human_channel"):
                raise MissingAuthorization("resurrection requires the human channel")
            target = Stage(p.get("target_stage") or "A")
            if target not in (Stage.A, Stage.B, Stage.C):
                raise IllegalTransition(state.describe(), f"resurrect->{target.value}")
            return in_stage(target), flags | {FLAG_RESURRECTED}
        if action == "force_kill":
            if state.kind is StateKind.KILLED:
                return state, flags
            stage = _stage_of(state) or Stage.D
            return killed(stage, p.get("reason_ref") or event.payload_ref), flags
        if action in ("set_severity", "approve_disclosure"):
            return state, flags
        raise IllegalTransition(state.describe(), f"overridden({action})")

    raise IllegalTransition(state.describe(), kind.value)


def replay_state(history: Iterable[Event]):
    """Replay a full history from scratch; returns (state, flags)."""
    state: Optional[LifecycleState] = None
    flags: frozenset = frozenset()
    for event in history:
        state, flags = _apply(state, flags, event)
    if state is None:
        raise ValueError("empty history")
    return state, flags


def transition(candidate: Candidate, event: Event) -> Candidate:
    """Apply one event; returns an updated copy, leaving the input untouched."""
    if event.seq != candidate.last_seq + 1:
        raise StaleSequence(
            f"expected seq {candidate.last_seq + 1}, got {event.seq} for {candidate.id}"
        )
    base = candidate.state if candidate.history else None
    new_state, new_flags = _apply(base, candidate.flags, event)
    return dataclasses.replace(
        candidate,
        state=new_state,
        flags=new_flags,
        history=candidate.history + (event,),
    )


def resurrect(candidate: Candidate, override: OverrideRecord) -> Candidate:
    """Return a killed candidate to an active stage via a human override."""
    if override.action != "resurrect":
        raise ValueError(f"not a resurrection override: {override.action}")
    if candidate.state.kind is not StateKind.KILLED:
        raise NotKilled(f"{candidate.id} is {candidate.state.describe()}")
    if not override.human_channel:
        raise MissingAuthorization("only the human channel may resurrect")
    event = Event(
        seq=candidate.last_seq + 1,
        timestamp=override.timestamp,
        kind=EventKind.OVERRIDDEN,
        payload_ref=f"override:{override.operator_id}:{override.timestamp}",
        payload={
            "action": "resurrect",
            "human_channel": override.human_channel,
            "target_stage": (override.target_stage or Stage.A).value,
            "operator_id": override.operator_id,
            "justification": override.justification,
        },
    )
    return transition(candidate, event)


def new_candidate(
    cid: str,
    target_ref: str,
    claim: Claim,
    origin: Origin,
    timestamp: float = 0.0,
    payload: Optional[dict] = None,
) -> Candidate:
    """Construct a fresh candidate with its initial ``generated`` event."""
    event = Event(
        seq=0,
        timestamp=timestamp,
        kind=EventKind.GENERATED,
        payload_ref=f"gen:{cid}",
        payload=payload or {},
    )
    cand = Candidate(id=cid, target_ref=target_ref, claim=claim, origin=origin)
    state, flags = _apply(None, frozenset(), event)
    cand.state = state
    cand.flags = flags
    cand.history = (event,)
    return cand
