#!/usr/bin/env python3
"""Regenerate the checked-in fixtures under fixtures/.

Everything here is deterministic; re-running overwrites the same content.
"""

import json
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
FIX = ROOT / "fixtures"


def _write_jsonl(path: Path, records):
    with path.open("w") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def funnel_wave(records, wave, a_total, a_kills, b_kills, c_kills, d_kills):
    """Emit per-candidate record streams for one fully completed wave."""
    b_total = a_total - a_kills
    c_total = b_total - b_kills
    d_total = c_total - c_kills
    for i in range(a_total):
        cid = f"w{wave}-c{i + 1:03d}"
        records.append({"kind": "generated", "wave": wave, "candidate_id": cid})
        records.append({"kind": "stage_entered", "wave": wave, "stage": "A", "candidate_id": cid})
        if i < a_kills:
            records.append({"kind": "gate", "wave": wave, "stage": "A", "candidate_id": cid, "outcome": "kill"})
            continue
        records.append({"kind": "gate", "wave": wave, "stage": "A", "candidate_id": cid, "outcome": "promote"})
        records.append({"kind": "stage_entered", "wave": wave, "stage": "B", "candidate_id": cid})
        if i < a_kills + b_kills:
            records.append({"kind": "gate", "wave": wave, "stage": "B", "candidate_id": cid, "outcome": "kill"})
            continue
        records.append({"kind": "gate", "wave": wave, "stage": "B", "candidate_id": cid, "outcome": "promote"})
        records.append({"kind": "stage_entered", "wave": wave, "stage": "C", "candidate_id": cid})
        if i < a_kills + b_kills + c_kills:
            records.append({"kind": "gate", "wave": wave, "stage": "C", "candidate_id": cid, "outcome": "kill"})
            continue
        records.append({"kind": "gate", "wave": wave, "stage": "C", "candidate_id": cid, "outcome": "promote"})
        records.append({"kind": "stage_entered", "wave": wave, "stage": "D", "candidate_id": cid})
        if i < a_kills + b_kills + c_kills + d_kills:
            records.append({"kind": "gate", "wave": wave, "stage": "D", "candidate_id": cid, "outcome": "kill"})
            continue
        records.append({"kind": "gate", "wave": wave, "stage": "D", "candidate_id": cid, "outcome": "promote"})
        records.append({"kind": "disclosure_ready", "wave": wave, "candidate_id": cid})
    assert b_total >= 0 and c_total >= 0 and d_total >= 0


def make_funnel_aggregate():
    # Four completed waves: 171 stage-A entrants, 107 A kills (63%),
    # 64 stage-B entrants, 27 B kills (42%), one later kill, 36 survivors.
    records = []
    funnel_wave(records, 1, a_total=45, a_kills=28, b_kills=7, c_kills=1, d_kills=0)
    funnel_wave(records, 2, a_total=44, a_kills=27, b_kills=7, c_kills=0, d_kills=0)
    funnel_wave(records, 3, a_total=42, a_kills=26, b_kills=7, c_kills=0, d_kills=0)
    funnel_wave(records, 4, a_total=40, a_kills=26, b_kills=6, c_kills=0, d_kills=0)
    _write_jsonl(FIX / "funnel_aggregate.jsonl", records)


def make_funnel_prospective():
    records = []
    funnel_wave(records, 1, a_total=30, a_kills=17, b_kills=6, c_kills=1, d_kills=1)
    _write_jsonl(FIX / "funnel_prospective.jsonl", records)


def make_funnel_midflight():
    # Snapshot taken mid-campaign: wave 1 has three candidates sitting in
    # stage C awaiting validation, wave 2 is still under stage-A review, so
    # the stage-C roster is larger than the stage-B roster right now.
    records = []
    for i in range(6):
        cid = f"w1-c{i + 1}"
        records.append({"kind": "generated", "wave": 1, "candidate_id": cid})
        records.append({"kind": "stage_entered", "wave": 1, "stage": "A", "candidate_id": cid})
        if i < 2:
            records.append({"kind": "gate", "wave": 1, "stage": "A", "candidate_id": cid, "outcome": "kill"})
            continue
        records.append({"kind": "gate", "wave": 1, "stage": "A", "candidate_id": cid, "outcome": "promote"})
        records.append({"kind": "stage_entered", "wave": 1, "stage": "B", "candidate_id": cid})
        if i < 3:
            records.append({"kind": "gate", "wave": 1, "stage": "B", "candidate_id": cid, "outcome": "kill"})
            continue
        records.append({"kind": "gate", "wave": 1, "stage": "B", "candidate_id": cid, "outcome": "promote"})
        records.append({"kind": "stage_entered", "wave": 1, "stage": "C", "candidate_id": cid})
        # still awaiting validation: no gate record yet
    for i in range(5):
        cid = f"w2-c{i + 1}"
        records.append({"kind": "generated", "wave": 2, "candidate_id": cid})
        records.append({"kind": "stage_entered", "wave": 2, "stage": "A", "candidate_id": cid})
        # stage-A review still in flight
    _write_jsonl(FIX / "funnel_midflight.jsonl", records)


def make_calibration():
    # Nine confirmed candidates with claimed vs adversarial assessments;
    # eight were talked down, one held.
    high = "CVSS:3.1/AV:N/AC:L/PR:N/UI:N/S:U/C:H/I:H/A:H"       # 9.8
    med = "CVSS:3.1/AV:N/AC:H/PR:N/UI:N/S:U/C:H/I:N/A:N"        # 5.9
    local = "CVSS:3.1/AV:L/AC:L/PR:L/UI:N/S:U/C:H/I:H/A:H"      # 7.8
    low = "CVSS:3.1/AV:L/AC:H/PR:L/UI:R/S:U/C:L/I:N/A:N"        # 2.5-ish
    entries = []
    for i in range(8):
        entries.append(
            {
                "candidate_id": f"cal-{i + 1}",
                "claimed": high if i % 2 == 0 else local,
                "assessments": [med, low] if i % 2 == 0 else [med],
            }
        )
    entries.append({"candidate_id": "cal-9", "claimed": local, "assessments": [local]})
    _write_jsonl(FIX / "calibration.jsonl", entries)


def make_rules():
    from stagegate.rules import Rule

    campaign_tags = [["parsing"], ["session"], ["parsing", "session"]]
    other_tags = [["kernel"], ["netstack"], ["build-system"], ["ui"]]
    texts = [
        "Pin the target to the release revision recorded at campaign start.",
        "Cite an exact file and line for every code-grounded objection.",
        "Record the observable a validation check expects before running it.",
        "Treat unanimous panels as low-signal and route them for human review.",
        "Keep the cold-start reviewer free of prior verdicts and rationale.",
        "State preconditions explicitly when arguing a trigger path.",
        "Reject checks whose observable comes from the check's own output.",
        "Log every context exposure before the task is sent.",
    ]
    rules = []
    for i in range(56):
        tags = campaign_tags[i % 3] if i < 30 else other_tags[i % 4]
        rules.append(
            Rule(
                rule_id=f"R{i + 1:04d}",
                text=f"{texts[i % len(texts)]} (lesson {i + 1})",
                kind="compliance_check" if i % 7 == 0 else "advisory",
                origin_incident=f"incident:{i + 1}",
                domain_tags=tuple(tags),
                created_at=float(i),
                predicate="nonempty:rationale" if i % 7 == 0 else None,
            )
        )
    _write_jsonl(FIX / "rules.jsonl", [r.to_record() for r in rules])


def _world_base(name, seed, candidates, agent_model=None, validation_model=None, partition=None):
    return {
        "v": 1,
        "name": name,
        "seed": seed,
        "target": {
            "target_ref": "demo-lib",
            "revision": "v2.0.1",
            "has_release": True,
            "prior_art": "Two historical parser overflows and one auth bypass.",
            "hotspots": [["parser", 31], ["auth", 12], ["io", 4]],
            "subsystem_partition": partition or ["parsing", "auth", "io"],
        },
        "agent_model": agent_model or {},
        "validation_model": validation_model or {},
        "candidates": candidates,
    }


def _cand(cid, scope, truth, **kw):
    base = {
        "id": cid,
        "wave": 1,
        "title": f"Claimed defect {cid}",
        "defect_class": "logic",
        "summary": f"Candidate {cid}: claimed defect reachable from {scope} input.",
        "entry_points": [f"src/{scope}.c:42"],
        "scope": scope,
        "ground_truth": truth,
    }
    base.update(kw)
    return base


def make_worlds():
    wdir = FIX / "worlds"
    wdir.mkdir(exist_ok=True)

    def dump(spec):
        (wdir / f"{spec['name']}.json").write_text(json.dumps(spec, indent=1, sort_keys=True))

    dump(
        _world_base(
            "basic",
            11,
            [
                _cand("tp-parse", "parsing", "true_positive",
                      claimed_severity="CVSS:3.1/AV:N/AC:L/PR:N/UI:N/S:U/C:H/I:N/A:N"),
                _cand("fp-auth", "auth", "false_positive"),
            ],
        )
    )

    # Shared-prior unanimity: every same-family reviewer misreads the claim.
    dump(
        _world_base(
            "pi1_unanimity",
            13,
            [
                _cand("tp-shared", "parsing", "true_positive",
                      error_class="correlated_prior_error", error_rate=1.0)
            ],
            agent_model={"family_agreement": 1.0},
        )
    )

    # A true positive every scripted reviewer kills until a human resurrects it.
    dump(
        _world_base(
            "resurrection",
            17,
            [
                _cand("tp-heap-overflow", "parsing", "true_positive",
                      error_mode="until_resurrected",
                      claimed_severity="CVSS:3.1/AV:N/AC:L/PR:N/UI:N/S:U/C:H/I:H/A:H")
            ],
        )
    )

    # A crypto-oracle false positive the whole default family endorses; only
    # the empirical gate stands between it and disclosure.
    dump(
        _world_base(
            "fp_oracle_guard",
            19,
            [
                _cand("fp-padding-oracle", "auth", "false_positive",
                      defect_class="crypto-oracle",
                      summary="Claimed padding-oracle response discrepancy in the "
                              "auth handshake decryption path.",
                      error_class="correlated_prior_error", error_rate=1.0)
            ],
            agent_model={"family_agreement": 1.0},
        )
    )

    dump(
        _world_base(
            "refusal_1pct",
            23,
            [
                _cand("tp-r1", "parsing", "true_positive"),
                _cand("tp-r2", "auth", "true_positive"),
                _cand("tp-r3", "io", "true_positive"),
                _cand("fp-r4", "parsing", "false_positive"),
            ],
            agent_model={"refusal_rate": 0.01},
        )
    )

    # Enumerable Monte Carlo comparison worlds.
    mc = [
        ("mc_01", {"error_rate": 0.1}, {}, [("tp", "true_positive", {}), ("fp", "false_positive", {})]),
        ("mc_02", {"error_rate": 0.3}, {}, [("tp", "true_positive", {}), ("fp", "false_positive", {}), ("fp2", "false_positive", {})]),
        ("mc_03", {"error_rate": 0.5}, {}, [("tp", "true_positive", {}), ("fp", "false_positive", {})]),
        ("mc_04", {"error_rate": 0.3, "family_agreement": 0.6}, {},
         [("tp", "true_positive", {"error_class": "correlated_prior_error"}),
          ("fp", "false_positive", {"error_class": "correlated_prior_error"})]),
        ("mc_05", {"error_rate": 0.5, "family_agreement": 1.0}, {},
         [("fp", "false_positive", {"error_class": "correlated_prior_error"})]),
        ("mc_06", {"error_rate": 0.1}, {"error_rate": 0.2},
         [("tp", "true_positive", {}), ("fp", "false_positive", {})]),
        ("mc_07", {"error_rate": 0.2}, {"infeasible_rate": 0.3},
         [("tp", "true_positive", {}), ("fp", "false_positive", {})]),
        ("mc_08", {"error_rate": 0.3, "family_agreement": 0.8}, {},
         [("fp", "false_positive", {"error_class": "correlated_prior_error"}),
          ("fp2", "false_positive", {"error_class": "correlated_prior_error"})]),
        ("mc_09", {"error_rate": 0.1}, {},
         [("tp", "true_positive", {"critic_partial_subclaim": "secondary write primitive"})]),
        ("mc_10", {"error_rate": 0.2, "family_agreement": 0.4},
         {"infeasible_rate": 0.1, "error_rate": 0.1},
         [("tp", "true_positive", {"error_class": "correlated_prior_error"}),
          ("fp", "false_positive", {})]),
    ]
    scopes = ["parsing", "auth", "io"]
    for name, am, vm, cands in mc:
        spec = _world_base(
            name,
            sum(ord(ch) for ch in name),
            [
                _cand(f"{name}-{label}", scopes[i % 3], truth, **extra)
                for i, (label, truth, extra) in enumerate(cands)
            ],
            agent_model=am,
            validation_model=vm,
        )
        dump(spec)


def main():
    FIX.mkdir(exist_ok=True)
    make_funnel_aggregate()
    make_funnel_prospective()
    make_funnel_midflight()
    make_calibration()
    make_rules()
    make_worlds()
    print("fixtures written to", FIX)


if __name__ == "__main__":
    main()
