"""Context views, the exposure ledger, and durable candidate storage.

Views are built from typed fragments so isolation is auditable: each view
kind has a hard allowlist of fragment kinds, and every dispatch appends an
ExposureRecord capturing exactly what the agent saw (by digest).
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .errors import CorruptRecord, NotFound
from .model import Candidate, Event, Stage

SCHEMA_VERSION = 1


class ViewKind(str, Enum):
    FULL_SYNTHESIS = "FullSynthesis"
    CLAIM_ONLY = "ClaimOnly"
    SELECTIVE_SUMMARY = "SelectiveSummary"
    COLD_START = "ColdStart"
    MINIMAL_SUMMARY = "MinimalSummary"


class FragmentKind(str, Enum):
    CLAIM_TITLE = "claim_title"
    CLAIM_DEFECT_CLASS = "claim_defect_class"
    CLAIM_SEVERITY = "claim_severity"
    CLAIM_ENTRY_POINTS = "claim_entry_points"
    CLAIM_SUMMARY = "claim_summary"
    TARGET_REF = "target_ref"
    CREATIVE_RATIONALE = "creative_rationale"
    PRIOR_VERDICT = "prior_verdict"
    PRIOR_ART = "prior_art"
    HOTSPOTS = "hotspots"
    RULES = "rules"
    VALIDATION_STATUS = "validation_status"


CLAIM_FRAGMENTS = frozenset(
    {
        FragmentKind.CLAIM_TITLE,
        FragmentKind.CLAIM_DEFECT_CLASS,
        FragmentKind.CLAIM_SEVERITY,
        FragmentKind.CLAIM_ENTRY_POINTS,
        FragmentKind.CLAIM_SUMMARY,
    }
)

# Hard content allowlist per view kind.  ClaimOnly and MinimalSummary are
# closed sets; ColdStart adds the pinned target; SelectiveSummary may carry
# anything except the creative track's full rationale.
ALLOWED_FRAGMENTS = {
    ViewKind.FULL_SYNTHESIS: frozenset(FragmentKind),
    ViewKind.CLAIM_ONLY: CLAIM_FRAGMENTS,
    ViewKind.COLD_START: CLAIM_FRAGMENTS | {FragmentKind.TARGET_REF},
    ViewKind.MINIMAL_SUMMARY: frozenset(
        {FragmentKind.CLAIM_SUMMARY, FragmentKind.CLAIM_ENTRY_POINTS}
    ),
    ViewKind.SELECTIVE_SUMMARY: frozenset(FragmentKind) - {FragmentKind.CREATIVE_RATIONALE},
}

DEFAULT_SELECTIVE_ALLOWLIST = CLAIM_FRAGMENTS | {
    FragmentKind.VALIDATION_STATUS,
    FragmentKind.PRIOR_VERDICT,
}


@dataclass(frozen=True)
class Fragment:
    kind: FragmentKind
    text: str

    def to_record(self) -> dict:
        return {"kind": self.kind.value, "text": self.text}


@dataclass(frozen=True)
class ContextView:
    kind: ViewKind
    candidate_id: str
    content: tuple[Fragment, ...]
    content_digest: str

    def fragment_kinds(self) -> set[FragmentKind]:
        return {f.kind for f in self.content}


@dataclass(frozen=True)
class ExposureRecord:
    agent_id: str
    candidate_id: str
    view_kind: ViewKind
    content_digest: str
    timestamp: float
    role: str = ""
    stage: Optional[str] = None
    fragment_kinds: tuple[str, ...] = ()

    def to_record(self) -> dict:
        return {
            "v": SCHEMA_VERSION,
            "agent_id": self.agent_id,
            "candidate_id": self.candidate_id,
            "view_kind": self.view_kind.value,
            "content_digest": self.content_digest,
            "ts": self.timestamp,
            "role": self.role,
            "stage": self.stage,
            "fragment_kinds": list(self.fragment_kinds),
        }

    @staticmethod
    def from_record(rec: dict) -> "ExposureRecord":
        return ExposureRecord(
            agent_id=rec["agent_id"],
            candidate_id=rec["candidate_id"],
            view_kind=ViewKind(rec["view_kind"]),
            content_digest=rec["content_digest"],
            timestamp=rec["ts"],
            role=rec.get("role", ""),
            stage=rec.get("stage"),
            fragment_kinds=tuple(rec.get("fragment_kinds", ())),
        )


@dataclass(frozen=True)
class PreparedTarget:
    target_ref: str
    revision: str
    prior_art_brief: str
    hotspot_list: tuple[tuple[str, int], ...]  # (region label, churn count), ranked
    subsystem_partition: tuple[str, ...]
    dev_head_warning: bool = False

    def __post_init__(self):
        labels = list(self.subsystem_partition)
        if len(labels) != len(set(labels)):
            raise ValueError("subsystem partition labels must be pairwise distinct")


@dataclass
class CampaignContext:
    """Everything derive_view may draw on beyond the candidate itself."""

    prepared: Optional[PreparedTarget] = None
    prior_verdicts: list = field(default_factory=list)  # (verdict summary, pre_kill: bool)
    creative_rationale: Optional[str] = None
    rules_text: list = field(default_factory=list)
    validation_status: Optional[str] = None
    selective_allowlist: frozenset = frozenset(DEFAULT_SELECTIVE_ALLOWLIST)
    prekill_in_full_synthesis: bool = True


def _canonical(fragments: Sequence[Fragment]) -> bytes:
    return json.dumps(
        [f.to_record() for f in fragments], sort_keys=True, separators=(",", ":")
    ).encode()


def content_digest(fragments: Sequence[Fragment]) -> str:
    return hashlib.sha256(_canonical(fragments)).hexdigest()


def _claim_fragments(candidate: Candidate) -> list[Fragment]:
    claim = candidate.claim
    frags = [
        Fragment(FragmentKind.CLAIM_TITLE, claim.title),
        Fragment(FragmentKind.CLAIM_DEFECT_CLASS, claim.defect_class.value),
        Fragment(FragmentKind.CLAIM_SUMMARY, claim.summary),
        Fragment(FragmentKind.CLAIM_ENTRY_POINTS, "\n".join(claim.entry_points)),
    ]
    if claim.claimed_severity:
        frags.insert(2, Fragment(FragmentKind.CLAIM_SEVERITY, claim.claimed_severity))
    return frags


def derive_view(
    candidate: Candidate, kind: ViewKind, campaign: Optional[CampaignContext] = None
) -> ContextView:
    """Build a view of the given kind; content honors the kind's allowlist."""
    ctx = campaign or CampaignContext()
    fragments: list[Fragment] = []

    if kind is ViewKind.CLAIM_ONLY:
        fragments = _claim_fragments(candidate)
    elif kind is ViewKind.MINIMAL_SUMMARY:
        fragments = [
            Fragment(FragmentKind.CLAIM_SUMMARY, candidate.claim.summary),
            Fragment(
                FragmentKind.CLAIM_ENTRY_POINTS, "\n".join(candidate.claim.entry_points)
            ),
        ]
    elif kind is ViewKind.COLD_START:
        fragments = _claim_fragments(candidate)
        fragments.append(Fragment(FragmentKind.TARGET_REF, candidate.target_ref))
    elif kind in (ViewKind.FULL_SYNTHESIS, ViewKind.SELECTIVE_SUMMARY):
        fragments = _claim_fragments(candidate)
        fragments.append(Fragment(FragmentKind.TARGET_REF, candidate.target_ref))
        if ctx.prepared is not None:
            fragments.append(Fragment(FragmentKind.PRIOR_ART, ctx.prepared.prior_art_brief))
            fragments.append(
                Fragment(
                    FragmentKind.HOTSPOTS,
                    "\n".join(f"{r} ({n})" for r, n in ctx.prepared.hotspot_list),
                )
            )
        if ctx.creative_rationale and kind is ViewKind.FULL_SYNTHESIS:
            fragments.append(
                Fragment(FragmentKind.CREATIVE_RATIONALE, ctx.creative_rationale)
            )
        for summary, pre_kill in ctx.prior_verdicts:
            if pre_kill and not (
                kind is ViewKind.FULL_SYNTHESIS and ctx.prekill_in_full_synthesis
            ):
                continue
            fragments.append(Fragment(FragmentKind.PRIOR_VERDICT, summary))
        if ctx.validation_status:
            fragments.append(
                Fragment(FragmentKind.VALIDATION_STATUS, ctx.validation_status)
            )
        if ctx.rules_text:
            fragments.append(Fragment(FragmentKind.RULES, "\n".join(ctx.rules_text)))
        if kind is ViewKind.SELECTIVE_SUMMARY:
            allow = frozenset(ctx.selective_allowlist) & ALLOWED_FRAGMENTS[kind]
            fragments = [f for f in fragments if f.kind in allow]
    else:
        raise ValueError(f"unknown view kind: {kind}")

    return ContextView(
        kind=kind,
        candidate_id=candidate.id,
        content=tuple(fragments),
        content_digest=content_digest(fragments),
    )


# --- isolation audit -------------------------------------------------------

# Which view kinds each (role, stage) pairing may legally receive.  Stage
# None covers out-of-stage work (hunting, research, validation execution).
LEGAL_VIEWS = {
    ("creative", "A"): {ViewKind.FULL_SYNTHESIS},
    ("adversarial", "A"): {ViewKind.CLAIM_ONLY},
    ("creative", "B"): {ViewKind.FULL_SYNTHESIS, ViewKind.COLD_START},
    ("adversarial", "B"): {
        ViewKind.FULL_SYNTHESIS,
        ViewKind.CLAIM_ONLY,
        ViewKind.SELECTIVE_SUMMARY,
    },
    ("adversarial", "C"): {ViewKind.FULL_SYNTHESIS, ViewKind.SELECTIVE_SUMMARY},
    ("validator", "C"): {ViewKind.FULL_SYNTHESIS},
    ("critic", "D"): {ViewKind.MINIMAL_SUMMARY},
    ("hunter", None): {ViewKind.FULL_SYNTHESIS},
    ("arbiter", None): {ViewKind.FULL_SYNTHESIS},
}


@dataclass(frozen=True)
class Violation:
    record: ExposureRecord
    reason: str


def audit_exposures(records: Iterable[ExposureRecord]) -> list[Violation]:
    """Return every exposure whose content or routing breaks isolation."""
    violations = []
    for rec in records:
        allowed = ALLOWED_FRAGMENTS[rec.view_kind]
        bad = [k for k in rec.fragment_kinds if FragmentKind(k) not in allowed]
        if bad:
            violations.append(
                Violation(rec, f"view {rec.view_kind.value} carries forbidden fragments: {bad}")
            )
        if rec.role:
            legal = LEGAL_VIEWS.get((rec.role, rec.stage))
            if legal is not None and rec.view_kind not in legal:
                violations.append(
                    Violation(
                        rec,
                        f"view {rec.view_kind.value} illegal for role={rec.role} "
                        f"stage={rec.stage}",
                    )
                )
    return violations


class ExposureLedger:
    """Append-only exposure ledger, optionally mirrored to a file."""

    def __init__(self, path: Optional[Path] = None):
        self.path = Path(path) if path else None
        self.records: list[ExposureRecord] = []
        if self.path and self.path.exists():
            for line in self.path.read_text().splitlines():
                if line.strip():
                    self.records.append(ExposureRecord.from_record(json.loads(line)))

    def record_exposure(
        self,
        agent_id: str,
        view: ContextView,
        timestamp: float,
        role: str = "",
        stage: Optional[str] = None,
    ) -> ExposureRecord:
        rec = ExposureRecord(
            agent_id=agent_id,
            candidate_id=view.candidate_id,
            view_kind=view.kind,
            content_digest=view.content_digest,
            timestamp=timestamp,
            role=role,
            stage=stage,
            fragment_kinds=tuple(f.kind.value for f in view.content),
        )
        self.records.append(rec)
        if self.path:
            with self.path.open("a") as fh:
                fh.write(json.dumps(rec.to_record(), sort_keys=True) + "\n")
        return rec

    def audit(self) -> list[Violation]:
        return audit_exposures(self.records)

    def __len__(self) -> int:
        return len(self.records)


# --- candidate persistence -------------------------------------------------

def _line_for(record: dict) -> str:
    body = dict(record)
    body["v"] = SCHEMA_VERSION
    payload = json.dumps(body, sort_keys=True, separators=(",", ":"))
    digest = hashlib.sha256(payload.encode()).hexdigest()[:16]
    return json.dumps({"h": digest, "r": body}, sort_keys=True, separators=(",", ":"))


def _parse_line(line: str) -> dict:
    outer = json.loads(line)
    body = outer["r"]
    payload = json.dumps(body, sort_keys=True, separators=(",", ":"))
    digest = hashlib.sha256(payload.encode()).hexdigest()[:16]
    if digest != outer["h"]:
        raise CorruptRecord(f"event record digest mismatch ({outer['h']} != {digest})")
    return body


class MemoryStore:
    """In-memory store; used by the Monte Carlo harness for throughput."""

    def __init__(self):
        self._candidates: dict[str, Candidate] = {}

    def persist(self, candidate: Candidate) -> None:
        self._candidates[candidate.id] = candidate

    def load(self, candidate_id: str) -> Candidate:
        try:
            return self._candidates[candidate_id]
        except KeyError:
            raise NotFound(f"unknown candidate: {candidate_id}") from None

    def list_ids(self) -> list[str]:
        return sorted(self._candidates)


class DiskStore:
    """One directory per candidate: append-only event log plus a snapshot.

    Layout under a campaign directory:
        candidates/<cid>/events.log    one digested record per line
        candidates/<cid>/snapshot      full candidate record
    """

    def __init__(self, campaign_dir: Path):
        self.root = Path(campaign_dir) / "candidates"
        self.root.mkdir(parents=True, exist_ok=True)
        self._meta: dict[str, dict] = {}

    def _dir(self, candidate_id: str) -> Path:
        return self.root / candidate_id

    def persist(self, candidate: Candidate) -> None:
        cdir = self._dir(candidate.id)
        cdir.mkdir(parents=True, exist_ok=True)
        log = cdir / "events.log"
        existing = 0
        if log.exists():
            existing = sum(1 for ln in log.read_text().splitlines() if ln.strip())
        with log.open("a") as fh:
            for event in candidate.history[existing:]:
                fh.write(_line_for(event.to_record()) + "\n")
        snapshot = candidate.to_record()
        snapshot_min = {k: v for k, v in snapshot.items() if k != "history"}
        snapshot_min["v"] = SCHEMA_VERSION
        (cdir / "snapshot").write_text(json.dumps(snapshot_min, sort_keys=True, indent=1))
        self._meta[candidate.id] = snapshot_min

    def load(self, candidate_id: str) -> Candidate:
        cdir = self._dir(candidate_id)
        log = cdir / "events.log"
        snap = cdir / "snapshot"
        if not log.exists() or not snap.exists():
            raise NotFound(f"unknown candidate: {candidate_id}")
        meta = json.loads(snap.read_text())
        events = tuple(
            Event.from_record(_parse_line(ln))
            for ln in log.read_text().splitlines()
            if ln.strip()
        )
        record = dict(meta)
        record["history"] = [e.to_record() for e in events]
        return Candidate.from_record(record)

    def list_ids(self) -> list[str]:
        if not self.root.exists():
            return []
        return sorted(p.name for p in self.root.iterdir() if p.is_dir())
