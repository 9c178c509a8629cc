"""Codified-lesson ledger: rules with incident provenance, transfer, injection.

Rules are immutable once added; amendments create successor rules.  Advisory
rules become prompt constraints; compliance-check rules additionally register
a machine-checkable predicate evaluated against agent output after the fact.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence

from .errors import DanglingIncident

RULES_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class Rule:
    rule_id: str
    text: str
    kind: str  # advisory | compliance_check
    origin_incident: str  # payload_ref of the backing event
    domain_tags: tuple[str, ...]
    created_at: float
    predicate: Optional[str] = None  # compliance_check: named predicate spec

    def __post_init__(self):
        if not self.text:
            raise ValueError("rule text must be non-empty")
        if self.kind not in ("advisory", "compliance_check"):
            raise ValueError(f"unknown rule kind: {self.kind}")

    def to_record(self) -> dict:
        return {
            "v": RULES_SCHEMA_VERSION,
            "rule_id": self.rule_id,
            "text": self.text,
            "kind": self.kind,
            "origin_incident": self.origin_incident,
            "domain_tags": list(self.domain_tags),
            "created_at": self.created_at,
            "predicate": self.predicate,
        }

    @staticmethod
    def from_record(rec: dict) -> "Rule":
        return Rule(
            rule_id=rec["rule_id"],
            text=rec["text"],
            kind=rec["kind"],
            origin_incident=rec["origin_incident"],
            domain_tags=tuple(rec["domain_tags"]),
            created_at=rec["created_at"],
            predicate=rec.get("predicate"),
        )


# Compliance predicates over agent output records.  Specs look like
# "nonempty:<field>" or "mentions:<field>:<substring>".
def check_predicate(spec: str, output: dict) -> bool:
    op, _, rest = spec.partition(":")
    if op == "nonempty":
        return bool(output.get(rest))
    if op == "mentions":
        fieldname, _, needle = rest.partition(":")
        return needle in str(output.get(fieldname, ""))
    raise ValueError(f"unknown compliance predicate: {spec}")


class RuleLedger:
    """Per-campaign rule store with an incident resolver for provenance."""

    def __init__(
        self,
        incident_resolver: Callable[[str], bool],
        path: Optional[Path] = None,
    ):
        self._resolve = incident_resolver
        self.path = Path(path) if path else None
        self.rules: list[Rule] = []
        if self.path and self.path.exists():
            for line in self.path.read_text().splitlines():
                if line.strip():
                    self.rules.append(Rule.from_record(json.loads(line)))

    def add_rule(
        self,
        incident_ref: str,
        text: str,
        kind: str = "advisory",
        tags: Sequence[str] = (),
        created_at: float = 0.0,
        predicate: Optional[str] = None,
    ) -> Rule:
        if not self._resolve(incident_ref):
            raise DanglingIncident(f"incident does not resolve: {incident_ref}")
        rule = Rule(
            rule_id=f"R{len(self.rules) + 1:04d}",
            text=text,
            kind=kind,
            origin_incident=incident_ref,
            domain_tags=tuple(tags),
            created_at=created_at,
            predicate=predicate,
        )
        self.rules.append(rule)
        if self.path:
            with self.path.open("a") as fh:
                fh.write(json.dumps(rule.to_record(), sort_keys=True) + "\n")
        return rule

    def audit_provenance(self) -> list[str]:
        """Rule ids whose originating incident no longer resolves."""
        return [r.rule_id for r in self.rules if not self._resolve(r.origin_incident)]

    def export(self, path: Path) -> None:
        with Path(path).open("w") as fh:
            for rule in self.rules:
                fh.write(json.dumps(rule.to_record(), sort_keys=True) + "\n")

    @staticmethod
    def load_rules(path: Path) -> list[Rule]:
        rules = []
        for line in Path(path).read_text().splitlines():
            if line.strip():
                rules.append(Rule.from_record(json.loads(line)))
        return rules


def select_transfer(rules: Iterable[Rule], target_tags: Sequence[str]) -> list[Rule]:
    """Rules applicable to a new campaign: any shared domain tag, stable order."""
    wanted = set(target_tags)
    selected = [r for r in rules if wanted.intersection(r.domain_tags)]
    return sorted(selected, key=lambda r: r.rule_id)


@dataclass
class InjectedAssembly:
    """Rules rendered for prompt injection plus registered post-hoc checks."""

    section: str
    compliance_checks: tuple[Rule, ...] = ()


def inject(rules: Sequence[Rule]) -> InjectedAssembly:
    """Render rules deterministically (rule_id order) for task assembly."""
    ordered = sorted(rules, key=lambda r: r.rule_id)
    if not ordered:
        return InjectedAssembly(section="")
    lines = ["CAMPAIGN RULES (binding constraints):"]
    for rule in ordered:
        lines.append(f"{rule.rule_id} [{rule.kind}]: {rule.text}")
    checks = tuple(r for r in ordered if r.kind == "compliance_check")
    return InjectedAssembly(section="\n".join(lines), compliance_checks=checks)


def evaluate_compliance(checks: Sequence[Rule], output: dict) -> list[str]:
    """Rule ids whose predicate the given agent output violates."""
    flagged = []
    for rule in checks:
        if rule.predicate and not check_predicate(rule.predicate, output):
            flagged.append(rule.rule_id)
    return flagged
