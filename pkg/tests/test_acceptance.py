"""Acceptance suite.

Every check here is property-, fixture-, or oracle-based: the real-world
outcomes the pipeline is meant to produce (disclosures, upstream fixes)
cannot be reproduced at desk scale, so correctness is argued through frozen
fixture replays, closed-form enumeration oracles, and statistical agreement
between the engine and those oracles.  Each test prints one summary line.
"""

import json
import random
import time

from stagegate.context import (
    ExposureRecord,
    FragmentKind,
    ViewKind,
    audit_exposures,
)
from stagegate.engine import CampaignConfig, CampaignRunner
from stagegate.metrics import (
    check_closure,
    funnel,
    load_records,
    overall_kill_rate,
    precision_recall,
    stage_kill_rates,
)
from stagegate.model import EventKind, OverrideRecord
from stagegate.oracle import (
    OracleConfig,
    candidate_outcomes,
    compare,
    enumerate_world,
    run_montecarlo,
)
from stagegate.validation import SeverityVector, recalibrate
from stagegate.world import ScriptedBackend, build_world, load_world
from tests.conftest import run_world

REFUSAL_SUBSTITUTE = "task refused and escalated to the human queue"


def _report(name: str, detail: str) -> None:
    print(f"\nACCEPTANCE {name}: PASS ({detail})")


def test_funnel_arithmetic_replay(fixtures_dir):
    start = time.perf_counter()
    agg = funnel(load_records(fixtures_dir / "funnel_aggregate.jsonl"))
    pro = funnel(load_records(fixtures_dir / "funnel_prospective.jsonl"))
    elapsed = time.perf_counter() - start

    assert agg.aggregate["A"].entrants == 171
    assert agg.total_kills == 135
    assert round(overall_kill_rate(agg) * 100) == 79
    rates = stage_kill_rates(agg)
    assert round(rates["A"] * 100) == 63
    assert round(rates["B"] * 100) == 42
    assert pro.aggregate["A"].entrants == 30 and pro.total_kills == 25
    assert round(overall_kill_rate(pro) * 100) == 83
    assert check_closure(agg) == [] and check_closure(pro) == []
    assert elapsed < 1.0
    _report("funnel-replay", f"135/171=79%, 25/30=83%, A 63%, B 42% in {elapsed:.3f}s")


def test_monotonicity_and_merge(fixtures_dir, thousand_campaigns):
    checked = 0
    for _, _, state in thousand_campaigns:
        report = funnel(state.funnel_records)
        entrants = [report.aggregate[s].entrants for s in "ABCD"]
        assert entrants == sorted(entrants, reverse=True), entrants
        assert check_closure(report) == []
        checked += 1
    assert checked >= 1000

    mid = funnel(load_records(fixtures_dir / "funnel_midflight.jsonl"))
    assert mid.aggregate["C"].occupancy > mid.aggregate["B"].occupancy
    assert check_closure(mid) == []
    _report(
        "monotonicity",
        f"{checked} campaigns monotone; merged roster C={mid.aggregate['C'].occupancy} "
        f"> B={mid.aggregate['B'].occupancy}",
    )


def test_engine_matches_oracle(worlds_dir):
    trials = 10_000
    start = time.perf_counter()
    worst_overall = 0.0
    for i in range(1, 11):
        world = load_world(worlds_dir / f"mc_{i:02d}.json")
        oracle = enumerate_world(world)
        config = CampaignConfig(seed=1000 + i)
        mc = run_montecarlo(world, config, trials)
        worst = compare(oracle, mc)
        for outcome, diff in worst.items():
            assert diff <= 0.02, (world.name, outcome, diff)
            worst_overall = max(worst_overall, diff)
    elapsed = time.perf_counter() - start
    assert elapsed < 300.0
    _report(
        "engine-oracle",
        f"10 worlds x {trials} trials, worst cell {worst_overall:.4f} <= 0.02, "
        f"{elapsed:.0f}s",
    )


def test_validation_gate_beats_unbounded_endorsement(worlds_dir):
    world = load_world(worlds_dir / "fp_oracle_guard.json")
    cand = world.candidate("fp-padding-oracle")

    gated = candidate_outcomes(cand, world, OracleConfig())
    assert gated["disclosure"] == 0.0

    # up to 80 scripted promoters endorsing the same false positive
    big = OracleConfig(
        stage_a_adversaries=25, stage_a_creatives=5,
        stage_b_adversaries=40, stage_b_creatives=10,
    )
    assert candidate_outcomes(cand, world, big)["disclosure"] == 0.0

    ungated = candidate_outcomes(cand, world, OracleConfig(skip_validation=True))
    assert ungated["disclosure"] >= 0.97

    _, state = run_world(world, seed=11)
    assert state.candidates["fp-padding-oracle"].state.describe() == "Killed(C)"
    _report(
        "validation-gate",
        f"P(disclosure)=0 with gate (80 endorsers), {ungated['disclosure']:.2f} without",
    )


def test_cross_family_critic_advantage():
    def fp_world(pi, eps):
        return build_world({
            "v": 1, "name": f"grid-{pi}-{eps}", "seed": 1,
            "target": {"target_ref": "lib", "revision": "v1",
                       "subsystem_partition": ["parsing"]},
            "agent_model": {"error_rate": eps, "family_agreement": pi},
            "candidates": [{"id": "fp", "scope": "parsing",
                            "ground_truth": "false_positive",
                            "error_class": "correlated_prior_error"}],
        })

    def survival(world, **critics):
        cfg = OracleConfig(skip_validation=True, **critics)
        return candidate_outcomes(world.candidate("fp"), world, cfg)["disclosure"]

    rows = []
    for pi in (0.4, 0.6, 0.8, 1.0):
        for eps in (0.1, 0.3, 0.5):
            world = fp_world(pi, eps)
            none = survival(world, cross_family_critics=0, same_family_critics=0)
            cross = survival(world, cross_family_critics=1, same_family_critics=0)
            same = survival(world, cross_family_critics=0, same_family_critics=1)
            assert cross < same < none or (cross < same <= none), (pi, eps, none, cross, same)
            assert (none - cross) > (none - same), (pi, eps)
            rows.append((pi, eps, none - cross, none - same))
    _report(
        "cross-family",
        "cross critic strictly stronger at all 12 grid points, e.g. "
        f"pi=1.0 eps=0.3: drop {rows[-2][2]:.2f} vs {rows[-2][3]:.2f}",
    )


def test_resurrection_restores_recall(worlds_dir):
    world = load_world(worlds_dir / "resurrection.json")
    runner, state = run_world(world, seed=5)
    before = precision_recall(state.candidates, world)
    assert before["recall"] < 1.0

    cand = state.candidates["tp-heap-overflow"]
    override = OverrideRecord(
        operator_id="op-1",
        action="resurrect",
        candidate_id="tp-heap-overflow",
        justification="shape matches a previously confirmed incident",
        timestamp=float(cand.last_seq + 1),
    )
    result = runner.resurrect_and_continue(override)
    after = precision_recall(state.candidates, world)
    assert after["recall"] == 1.0
    assert result.state.describe() == "disclosure_ready"

    kinds = [ev.kind for ev in result.history]
    kill_at = kinds.index(EventKind.GATE_DECIDED)
    assert EventKind.OVERRIDDEN in kinds[kill_at:]
    kills = [ev for ev in result.history
             if ev.kind is EventKind.GATE_DECIDED and ev.payload.get("outcome") == "kill"]
    assert kills, "the original kill must survive in the event history"
    _report("resurrection", f"recall {before['recall']:.2f} -> 1.00, "
                            f"{len(result.history)} events preserved")


def test_isolation_audit_and_leak_mutation(thousand_campaigns):
    exposures = 0
    for _, runner, _ in thousand_campaigns:
        assert runner.ledger.audit() == []
        exposures += len(runner.ledger)
    assert exposures > 0

    rng = random.Random(7)
    caught = 0
    trials = 100
    for i in range(trials):
        _, runner, _ = thousand_campaigns[rng.randrange(len(thousand_campaigns))]
        base = runner.ledger.records[rng.randrange(len(runner.ledger.records))]
        leaked = ExposureRecord(
            agent_id=base.agent_id,
            candidate_id=base.candidate_id,
            view_kind=ViewKind.CLAIM_ONLY,
            content_digest=base.content_digest,
            timestamp=base.timestamp,
            role="adversarial",
            stage=base.stage,
            fragment_kinds=(FragmentKind.CLAIM_SUMMARY.value,
                            FragmentKind.CREATIVE_RATIONALE.value),
        )
        if audit_exposures([leaked]):
            caught += 1
    assert caught == trials
    _report(
        "isolation-audit",
        f"{exposures} exposures over 1000 campaigns, 0 violations; "
        f"{caught}/{trials} seeded leaks caught",
    )


def test_deterministic_replay(tmp_path, worlds_dir):
    world = load_world(worlds_dir / "basic.json")
    logs = []
    for run in ("one", "two"):
        cdir = tmp_path / run
        config = CampaignConfig(campaign_id="det", seed=99)
        backend = ScriptedBackend(world, random.Random("99"))
        CampaignRunner(config, world, campaign_dir=cdir, backend=backend).run()
        body = {}
        for path in sorted(cdir.glob("candidates/*/events.log")):
            body[f"candidates/{path.parent.name}"] = path.read_bytes()
        body["exposure.log"] = (cdir / "exposure.log").read_bytes()
        body["funnel.log"] = (cdir / "funnel.log").read_bytes()
        logs.append(body)
    assert logs[0] == logs[1]
    assert logs[0]["exposure.log"]
    _report("determinism", f"{len(logs[0])} logs byte-identical across two seeded runs")


def test_calibration_fixture(fixtures_dir):
    directions = []
    for line in (fixtures_dir / "calibration.jsonl").read_text().splitlines():
        entry = json.loads(line)
        recal = recalibrate(
            SeverityVector.from_vector(entry["claimed"]),
            [SeverityVector.from_vector(v) for v in entry["assessments"]],
        )
        directions.append(recal.direction)
    assert len(directions) == 9
    assert directions.count("down") == 8
    assert directions.count("up") == 0
    _report("calibration", "severity adjusted down in 8 of 9 assessments")


def test_refusal_handling(worlds_dir):
    from stagegate.context import MemoryStore
    from stagegate.gateway import Tier

    class CountingBackend(ScriptedBackend):
        """Counts refusal-eligible (fresh workhorse) dispatches."""

        eligible = 0

        def submit(self, spec, task, view, rules_section=""):
            if spec.tier is Tier.WORKHORSE and task.reassigned_from is None:
                CountingBackend.eligible += 1
            return super().submit(spec, task, view, rules_section)

    world = load_world(worlds_dir / "refusal_1pct.json")
    refusals = reassignments = 0
    campaigns = 0
    while CountingBackend.eligible < 20_000:
        seed = 5000 + campaigns
        backend = CountingBackend(world, random.Random(f"{seed}"))
        runner = CampaignRunner(
            CampaignConfig(seed=seed), world,
            store=MemoryStore(), backend=backend, audit_trail=False,
        )
        state = runner.run()
        campaigns += 1
        refusals += runner.gateway.refusal_count
        reassignments += sum(1 for e in state.journal if e["kind"] == "reassignment")
        for verdict in state.verdict_index.values():
            if verdict.rationale == REFUSAL_SUBSTITUTE:
                assert verdict.direction.value == "abstain"
    dispatches = CountingBackend.eligible
    rate = refusals / dispatches
    assert abs(rate - 0.01) <= 0.003, rate
    assert reassignments == refusals
    _report(
        "refusal-handling",
        f"{refusals}/{dispatches} = {rate:.4f} (target 0.0100 +/- 0.0030), "
        f"{reassignments} reassignments, no refusal used as evidence",
    )
