"""Empirical validation: check execution, contamination screening, CVSS.

A check may only claim Confirmed when the expected observable was produced by
the target itself; checks whose observable comes from the PoC's own
computation are rejected before anything runs.
"""

from __future__ import annotations

import json
import math
import subprocess
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Sequence

from .context import PreparedTarget
from .errors import ContaminatedCheck, MalformedVector, ProvisioningFailure


@dataclass(frozen=True)
class SandboxLimits:
    cpu_seconds: int = 30
    wall_seconds: float = 60.0
    disk_bytes: int = 64 * 1024 * 1024


@dataclass(frozen=True)
class CheckSpec:
    candidate_id: str
    kind: str  # local_exec | remote_exec | scripted_oracle
    command: tuple[str, ...] = ()
    expected_observable: str = ""
    observable_source: str = "target"  # target | poc_internal
    provisioning_descriptor: Optional[str] = None
    oracle_outcome: Optional[str] = None  # scripted_oracle only

    def __post_init__(self):
        if not self.expected_observable:
            raise ValueError("expected_observable must be non-empty")
        if self.kind == "remote_exec" and not self.provisioning_descriptor:
            raise ValueError("remote_exec checks need a provisioning descriptor")


@dataclass(frozen=True)
class ValidationResult:
    status: str  # Confirmed | Refuted | Infeasible
    transcript_ref: str
    contamination_check: str  # pass | fail
    runtime_seconds: float

    def __post_init__(self):
        if self.status == "Confirmed" and self.contamination_check != "pass":
            raise ValueError("Confirmed requires a passing contamination check")

    def to_record(self) -> dict:
        return {
            "status": self.status,
            "transcript_ref": self.transcript_ref,
            "contamination_check": self.contamination_check,
            "runtime_seconds": self.runtime_seconds,
        }


class NoopProvisioner:
    """Default provisioner for remote checks: cannot provision anything."""

    def provision(self, descriptor: str):
        raise ProvisioningFailure("no remote provisioner configured")


class LocalSandboxProvisioner:
    """Runs 'remote' checks locally in a fresh sandboxed working directory."""

    def __init__(self, limits: SandboxLimits = SandboxLimits()):
        self.limits = limits

    def provision(self, descriptor: str):
        return tempfile.mkdtemp(prefix="stagegate-remote-")


def _run_sandboxed(command: Sequence[str], limits: SandboxLimits, workdir: Optional[str] = None):
    """Execute a command with its own working directory and resource caps."""
    import resource

    cwd = workdir or tempfile.mkdtemp(prefix="stagegate-check-")

    def _limit():
        resource.setrlimit(resource.RLIMIT_CPU, (limits.cpu_seconds, limits.cpu_seconds))
        resource.setrlimit(resource.RLIMIT_FSIZE, (limits.disk_bytes, limits.disk_bytes))

    return subprocess.run(
        list(command),
        cwd=cwd,
        capture_output=True,
        text=True,
        timeout=limits.wall_seconds,
        preexec_fn=_limit,
    )


def execute(
    check: CheckSpec,
    target: Optional[PreparedTarget] = None,
    provisioner=None,
    limits: SandboxLimits = SandboxLimits(),
    transcript_dir: Optional[Path] = None,
    clock: Optional[Callable[[], float]] = None,
) -> ValidationResult:
    """Run one empirical check; Infeasible when the environment cannot host it."""
    if check.observable_source != "target":
        raise ContaminatedCheck(
            f"check for {check.candidate_id} observes its own computation "
            f"(observable_source={check.observable_source})"
        )

    started = time.monotonic()
    transcript: dict = {
        "candidate_id": check.candidate_id,
        "kind": check.kind,
        "expected_observable": check.expected_observable,
        "target": target.target_ref if target else None,
    }

    if check.kind == "scripted_oracle":
        status = check.oracle_outcome or "Infeasible"
        transcript["oracle_outcome"] = status
        runtime = max(time.monotonic() - started, 1e-6)
    elif check.kind in ("local_exec", "remote_exec"):
        workdir = None
        if check.kind == "remote_exec":
            prov = provisioner or NoopProvisioner()
            try:
                workdir = prov.provision(check.provisioning_descriptor or "")
            except ProvisioningFailure as exc:
                transcript["provisioning_error"] = str(exc)
                ref = _persist_transcript(transcript, check, transcript_dir)
                return ValidationResult("Infeasible", ref, "pass", 0.0)
        try:
            proc = _run_sandboxed(check.command, limits, workdir)
        except (subprocess.TimeoutExpired, OSError) as exc:
            transcript["execution_error"] = str(exc)
            ref = _persist_transcript(transcript, check, transcript_dir)
            return ValidationResult("Infeasible", ref, "pass", time.monotonic() - started)
        observed = proc.stdout + proc.stderr
        transcript["exit_code"] = proc.returncode
        transcript["observed"] = observed[-8192:]
        status = "Confirmed" if check.expected_observable in observed else "Refuted"
        runtime = max(time.monotonic() - started, 1e-6)
    else:
        raise ValueError(f"unknown check kind: {check.kind}")

    ref = _persist_transcript(transcript, check, transcript_dir)
    return ValidationResult(status, ref, "pass", runtime)


def _persist_transcript(transcript: dict, check: CheckSpec, transcript_dir: Optional[Path]) -> str:
    ref = f"check-{check.candidate_id}-{check.kind}"
    if transcript_dir:
        transcript_dir.mkdir(parents=True, exist_ok=True)
        (transcript_dir / f"{ref}.json").write_text(json.dumps(transcript, indent=1, sort_keys=True))
    return ref


# --- CVSS v3.1 base score --------------------------------------------------

_METRICS = ("AV", "AC", "PR", "UI", "S", "C", "I", "A")

_WEIGHTS = {
    "AV": {"N": 0.85, "A": 0.62, "L": 0.55, "P": 0.2},
    "AC": {"L": 0.77, "H": 0.44},
    "UI": {"N": 0.85, "R": 0.62},
    "C": {"N": 0.0, "L": 0.22, "H": 0.56},
    "I": {"N": 0.0, "L": 0.22, "H": 0.56},
    "A": {"N": 0.0, "L": 0.22, "H": 0.56},
}
_PR_WEIGHTS = {
    "U": {"N": 0.85, "L": 0.62, "H": 0.27},
    "C": {"N": 0.85, "L": 0.68, "H": 0.5},
}
_ALLOWED = {
    "AV": set("NALP"),
    "AC": set("LH"),
    "PR": set("NLH"),
    "UI": set("NR"),
    "S": set("UC"),
    "C": set("NLH"),
    "I": set("NLH"),
    "A": set("NLH"),
}


def parse_vector(vector: str) -> dict[str, str]:
    parts = vector.strip().split("/")
    if parts and parts[0].upper().startswith("CVSS:"):
        if parts[0] != "CVSS:3.1":
            raise MalformedVector(f"unsupported CVSS version prefix: {parts[0]}")
        parts = parts[1:]
    metrics: dict[str, str] = {}
    for part in parts:
        if ":" not in part:
            raise MalformedVector(f"malformed metric component: {part!r}")
        key, value = part.split(":", 1)
        key, value = key.upper(), value.upper()
        if key not in _ALLOWED:
            raise MalformedVector(f"unknown metric: {key}")
        if key in metrics:
            raise MalformedVector(f"duplicate metric: {key}")
        if value not in _ALLOWED[key]:
            raise MalformedVector(f"bad value {value!r} for metric {key}")
        metrics[key] = value
    missing = [m for m in _METRICS if m not in metrics]
    if missing:
        raise MalformedVector(f"missing base metrics: {missing}")
    return metrics


def _roundup(value: float) -> float:
    scaled = int(round(value * 100000))
    if scaled % 10000 == 0:
        return scaled / 100000.0
    return (math.floor(scaled / 10000) + 1) / 10.0


def cvss_base_score(vector: str) -> float:
    """CVSS v3.1 base score (one decimal) for a canonical base vector."""
    m = parse_vector(vector)
    scope_changed = m["S"] == "C"
    iss = 1.0 - (1.0 - _WEIGHTS["C"][m["C"]]) * (1.0 - _WEIGHTS["I"][m["I"]]) * (
        1.0 - _WEIGHTS["A"][m["A"]]
    )
    if scope_changed:
        impact = 7.52 * (iss - 0.029) - 3.25 * (iss - 0.02) ** 15
    else:
        impact = 6.42 * iss
    exploitability = (
        8.22
        * _WEIGHTS["AV"][m["AV"]]
        * _WEIGHTS["AC"][m["AC"]]
        * _PR_WEIGHTS[m["S"]][m["PR"]]
        * _WEIGHTS["UI"][m["UI"]]
    )
    if impact <= 0:
        return 0.0
    if scope_changed:
        return _roundup(min(1.08 * (impact + exploitability), 10.0))
    return _roundup(min(impact + exploitability, 10.0))


def canonical_vector(vector: str) -> str:
    m = parse_vector(vector)
    return "CVSS:3.1/" + "/".join(f"{k}:{m[k]}" for k in _METRICS)


@dataclass(frozen=True)
class SeverityVector:
    vector: str
    score: float
    version: str = "3.1"

    @staticmethod
    def from_vector(vector: str) -> "SeverityVector":
        canon = canonical_vector(vector)
        return SeverityVector(vector=canon, score=cvss_base_score(canon))

    def __post_init__(self):
        # The stored score is never trusted; it must equal the recomputation.
        if abs(cvss_base_score(self.vector) - self.score) > 1e-9:
            raise ValueError("severity score does not match its vector")


@dataclass(frozen=True)
class Recalibration:
    final: SeverityVector
    direction: str  # down | up | unchanged


def recalibrate(
    claimed: SeverityVector,
    assessments: Sequence[SeverityVector],
    human_choice: Optional[SeverityVector] = None,
) -> Recalibration:
    """Adopt the minimum-score assessment unless a human override selects otherwise."""
    if not assessments:
        raise ValueError("recalibrate needs at least one assessment")
    chosen = human_choice or min(assessments, key=lambda sv: (sv.score, sv.vector))
    if chosen.score < claimed.score:
        direction = "down"
    elif chosen.score > claimed.score:
        direction = "up"
    else:
        direction = "unchanged"
    return Recalibration(final=chosen, direction=direction)
