"""Funnel accounting over neutral campaign log records.

The input is a sequence of flat dict records as the engine emits them
(``funnel.log`` lines): generated, intake_rejected, stage_entered, gate,
disclosure_ready, calibration.  Entrant counts are cumulative and therefore
monotone down the pipeline within a wave; the ``occupancy`` snapshot is the
in-flight roster and may legitimately be larger at a later stage mid-flight.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Optional

STAGES = ("A", "B", "C", "D")

_KILL_OUTCOMES = {"kill"}
_EXIT_OUTCOMES = {"kill", "promote", "promote_provisional", "partial_kill_reentry"}


@dataclass
class StageCounts:
    entrants: int = 0
    kills: int = 0
    promotes: int = 0  # includes provisional promotions
    provisional: int = 0
    reentries: int = 0

    @property
    def exits(self) -> int:
        return self.kills + self.promotes + self.reentries

    @property
    def occupancy(self) -> int:
        return self.entrants - self.exits

    def to_record(self) -> dict:
        return {
            "entrants": self.entrants,
            "kills": self.kills,
            "promotes": self.promotes,
            "provisional": self.provisional,
            "reentries": self.reentries,
            "occupancy": self.occupancy,
        }


@dataclass
class FunnelReport:
    generated: int = 0
    intake_rejected: int = 0
    survivors: int = 0
    aggregate: dict = field(default_factory=lambda: {s: StageCounts() for s in STAGES})
    per_wave: dict = field(default_factory=dict)  # wave -> {stage -> StageCounts}
    calibration: Counter = field(default_factory=Counter)

    def stage(self, stage: str, wave: Optional[int] = None) -> StageCounts:
        if wave is None:
            return self.aggregate[stage]
        return self.per_wave.get(wave, {s: StageCounts() for s in STAGES})[stage]

    @property
    def total_kills(self) -> int:
        return sum(c.kills for c in self.aggregate.values())

    def to_record(self) -> dict:
        return {
            "generated": self.generated,
            "intake_rejected": self.intake_rejected,
            "survivors": self.survivors,
            "total_kills": self.total_kills,
            "aggregate": {s: c.to_record() for s, c in self.aggregate.items()},
            "per_wave": {
                str(w): {s: c.to_record() for s, c in stages.items()}
                for w, stages in sorted(self.per_wave.items())
            },
            "calibration": dict(self.calibration),
        }


def funnel(records: Iterable[dict]) -> FunnelReport:
    """Aggregate campaign log records into a funnel report."""
    report = FunnelReport()
    for rec in records:
        kind = rec.get("kind")
        wave = rec.get("wave", 1)
        if kind == "generated":
            report.generated += 1
            continue
        if kind == "intake_rejected":
            report.intake_rejected += 1
            continue
        if kind == "disclosure_ready":
            report.survivors += 1
            continue
        if kind == "calibration":
            report.calibration[rec.get("direction", "unchanged")] += 1
            continue
        if kind not in ("stage_entered", "gate"):
            continue
        stage = rec["stage"]
        wave_stages = report.per_wave.setdefault(wave, {s: StageCounts() for s in STAGES})
        for counts in (report.aggregate[stage], wave_stages[stage]):
            if kind == "stage_entered":
                counts.entrants += 1
            else:
                outcome = rec["outcome"]
                if outcome in _KILL_OUTCOMES:
                    counts.kills += 1
                elif outcome == "partial_kill_reentry":
                    counts.reentries += 1
                elif outcome in ("promote", "promote_provisional"):
                    counts.promotes += 1
                    if outcome == "promote_provisional":
                        counts.provisional += 1
    return report


def stage_kill_rates(report: FunnelReport, wave: Optional[int] = None) -> dict[str, float]:
    """Kill fraction per stage over stage entrants; stages with no entrants
    are absent rather than reported as zero."""
    rates = {}
    for stage in STAGES:
        counts = report.stage(stage, wave)
        if counts.entrants > 0:
            rates[stage] = counts.kills / counts.entrants
    return rates


def overall_kill_rate(report: FunnelReport) -> Optional[float]:
    entrants = report.aggregate["A"].entrants
    if entrants == 0:
        return None
    return report.total_kills / entrants


def check_closure(report: FunnelReport) -> list[str]:
    """Arithmetic-closure violations; an empty list means the funnel balances."""
    problems = []
    for stage in STAGES:
        counts = report.aggregate[stage]
        if counts.occupancy < 0:
            problems.append(
                f"stage {stage}: more exits ({counts.exits}) than entrants ({counts.entrants})"
            )
    for wave, stages in report.per_wave.items():
        prev = None
        for stage in STAGES:
            entrants = stages[stage].entrants
            if prev is not None and entrants > prev:
                problems.append(
                    f"wave {wave}: stage {stage} entrants ({entrants}) exceed the "
                    f"previous stage's ({prev})"
                )
            # Re-entries legitimately raise later-stage entrants within a wave.
            prev = entrants + stages[stage].reentries
    survivors_bound = report.aggregate["D"].promotes
    if report.survivors > survivors_bound:
        problems.append(
            f"{report.survivors} disclosure-ready exceeds stage-D promotions ({survivors_bound})"
        )
    return problems


def calibration_report(records: Iterable[dict]) -> dict:
    """Severity recalibration tally: how many moved down, up, or held."""
    tally = Counter()
    for rec in records:
        if rec.get("kind") == "calibration":
            tally[rec.get("direction", "unchanged")] += 1
    total = sum(tally.values())
    return {
        "total": total,
        "down": tally.get("down", 0),
        "up": tally.get("up", 0),
        "unchanged": tally.get("unchanged", 0),
    }


def precision_recall(candidates: dict, world) -> dict:
    """Disclosure precision/recall against world ground truth.

    ``candidates`` maps candidate id to Candidate; a candidate counts as
    disclosed when its lifecycle reached disclosure-ready.
    """
    from .model import StateKind

    disclosed = {
        cid
        for cid, cand in candidates.items()
        if cand.state.kind is StateKind.DISCLOSURE_READY
    }
    true_ids = {c.id for c in world.candidates if c.ground_truth == "true_positive"}
    tp = len(disclosed & true_ids)
    fp = len(disclosed - true_ids)
    fn = len(true_ids - disclosed)
    precision = tp / (tp + fp) if disclosed else None
    recall = tp / (tp + fn) if true_ids else None
    return {
        "disclosed": len(disclosed),
        "true_positives": tp,
        "false_positives": fp,
        "missed": fn,
        "precision": precision,
        "recall": recall,
    }


def to_table(report: FunnelReport) -> str:
    """Human-readable funnel table."""
    lines = [
        f"{'stage':<6}{'entrants':>9}{'kills':>7}{'promotes':>9}{'reentry':>8}{'occupancy':>10}{'kill%':>7}"
    ]
    rates = stage_kill_rates(report)
    for stage in STAGES:
        counts = report.aggregate[stage]
        rate = f"{rates[stage] * 100:.0f}%" if stage in rates else "-"
        lines.append(
            f"{stage:<6}{counts.entrants:>9}{counts.kills:>7}{counts.promotes:>9}"
            f"{counts.reentries:>8}{counts.occupancy:>10}{rate:>7}"
        )
    overall = overall_kill_rate(report)
    lines.append(
        f"generated={report.generated} intake_rejected={report.intake_rejected} "
        f"survivors={report.survivors} total_kills={report.total_kills}"
        + (f" overall_kill_rate={overall * 100:.0f}%" if overall is not None else "")
    )
    return "\n".join(lines)


def load_records(path) -> list[dict]:
    from pathlib import Path

    return [
        json.loads(line)
        for line in Path(path).read_text().splitlines()
        if line.strip()
    ]
