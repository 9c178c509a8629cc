"""Context views, isolation audit, and durable candidate storage."""

import json

import pytest
from hypothesis import given, strategies as st

from stagegate.context import (
    ALLOWED_FRAGMENTS,
    CampaignContext,
    ContextView,
    DiskStore,
    ExposureLedger,
    ExposureRecord,
    Fragment,
    FragmentKind,
    MemoryStore,
    PreparedTarget,
    ViewKind,
    audit_exposures,
    content_digest,
    derive_view,
)
from stagegate.errors import CorruptRecord, NotFound
from tests.test_model import gate, make_candidate
from stagegate.model import transition


def make_context():
    prepared = PreparedTarget(
        target_ref="lib",
        revision="v1",
        prior_art_brief="two historical overflows",
        hotspot_list=(("parser", 9),),
        subsystem_partition=("parsing", "io"),
    )
    return CampaignContext(
        prepared=prepared,
        prior_verdicts=[("agent-1 [kill] pre-kill view", True), ("agent-2 [promote] fresh", False)],
        creative_rationale="trigger via crafted header",
        rules_text=["cite file and line"],
        validation_status="Confirmed",
    )


@pytest.mark.parametrize("kind", list(ViewKind))
def test_every_view_honors_its_allowlist(kind):
    view = derive_view(make_candidate(), kind, make_context())
    assert view.fragment_kinds() <= ALLOWED_FRAGMENTS[kind]


def test_claim_only_carries_claim_fragments_only():
    view = derive_view(make_candidate(), ViewKind.CLAIM_ONLY, make_context())
    kinds = view.fragment_kinds()
    assert FragmentKind.CLAIM_SUMMARY in kinds
    assert FragmentKind.CREATIVE_RATIONALE not in kinds
    assert FragmentKind.PRIOR_VERDICT not in kinds
    assert FragmentKind.TARGET_REF not in kinds


def test_minimal_summary_is_two_fragments():
    view = derive_view(make_candidate(), ViewKind.MINIMAL_SUMMARY, make_context())
    assert view.fragment_kinds() == {FragmentKind.CLAIM_SUMMARY, FragmentKind.CLAIM_ENTRY_POINTS}


def test_cold_start_has_no_verdicts_or_rationale():
    view = derive_view(make_candidate(), ViewKind.COLD_START, make_context())
    kinds = view.fragment_kinds()
    assert FragmentKind.TARGET_REF in kinds
    assert FragmentKind.PRIOR_VERDICT not in kinds
    assert FragmentKind.CREATIVE_RATIONALE not in kinds


def test_selective_summary_excludes_creative_rationale():
    view = derive_view(make_candidate(), ViewKind.SELECTIVE_SUMMARY, make_context())
    assert FragmentKind.CREATIVE_RATIONALE not in view.fragment_kinds()


def test_prekill_verdicts_only_in_full_synthesis():
    ctx = make_context()
    full = derive_view(make_candidate(), ViewKind.FULL_SYNTHESIS, ctx)
    pre_kill_texts = [f.text for f in full.content if f.kind is FragmentKind.PRIOR_VERDICT]
    assert any("pre-kill" in t for t in pre_kill_texts)
    ctx.prekill_in_full_synthesis = False
    full2 = derive_view(make_candidate(), ViewKind.FULL_SYNTHESIS, ctx)
    texts2 = [f.text for f in full2.content if f.kind is FragmentKind.PRIOR_VERDICT]
    assert not any("pre-kill" in t for t in texts2)
    assert any("fresh" in t for t in texts2)


def test_digest_is_content_stable():
    a = derive_view(make_candidate(), ViewKind.CLAIM_ONLY, make_context())
    b = derive_view(make_candidate(), ViewKind.CLAIM_ONLY, make_context())
    assert a.content_digest == b.content_digest
    assert a.content_digest == content_digest(a.content)


def test_audit_flags_forbidden_fragment_kinds():
    rec = ExposureRecord(
        agent_id="adv-1",
        candidate_id="c1",
        view_kind=ViewKind.CLAIM_ONLY,
        content_digest="x",
        timestamp=0.0,
        role="adversarial",
        stage="A",
        fragment_kinds=(FragmentKind.CLAIM_SUMMARY.value, FragmentKind.CREATIVE_RATIONALE.value),
    )
    violations = audit_exposures([rec])
    assert len(violations) == 1
    assert "forbidden" in violations[0].reason


def test_audit_flags_illegal_view_for_role_stage():
    rec = ExposureRecord(
        agent_id="adv-1",
        candidate_id="c1",
        view_kind=ViewKind.FULL_SYNTHESIS,
        content_digest="x",
        timestamp=0.0,
        role="adversarial",
        stage="A",
        fragment_kinds=(FragmentKind.CLAIM_SUMMARY.value,),
    )
    violations = audit_exposures([rec])
    assert len(violations) == 1
    assert "illegal" in violations[0].reason


@given(st.integers(0, 10**9))
def test_leaked_rationale_always_caught(seed):
    # Mutation drill: creative rationale smuggled into a ClaimOnly view must
    # be flagged no matter what else the record contains.
    import random

    rng = random.Random(seed)
    extra = rng.sample([k.value for k in ALLOWED_FRAGMENTS[ViewKind.CLAIM_ONLY]], k=rng.randint(0, 3))
    rec = ExposureRecord(
        agent_id=f"agent-{seed % 7}",
        candidate_id="c1",
        view_kind=ViewKind.CLAIM_ONLY,
        content_digest="x",
        timestamp=0.0,
        role="adversarial",
        stage="A",
        fragment_kinds=tuple(extra) + (FragmentKind.CREATIVE_RATIONALE.value,),
    )
    assert audit_exposures([rec])


def test_ledger_appends_and_mirrors_to_file(tmp_path):
    path = tmp_path / "exposure.log"
    ledger = ExposureLedger(path)
    view = derive_view(make_candidate(), ViewKind.CLAIM_ONLY, make_context())
    ledger.record_exposure("adv-1", view, timestamp=1.0, role="adversarial", stage="A")
    assert len(ledger) == 1
    reloaded = ExposureLedger(path)
    assert len(reloaded) == 1
    assert reloaded.records[0].content_digest == view.content_digest


def test_memory_store_round_trip():
    store = MemoryStore()
    cand = make_candidate()
    store.persist(cand)
    assert store.load(cand.id).id == cand.id
    with pytest.raises(NotFound):
        store.load("nope")


def test_disk_store_round_trip_and_replay(tmp_path):
    store = DiskStore(tmp_path)
    cand = make_candidate()
    cand = transition(cand, gate(cand, "A", "promote"))
    store.persist(cand)
    cand = transition(cand, gate(cand, "B", "kill"))
    store.persist(cand)  # append-only continuation
    loaded = store.load(cand.id)
    assert loaded.state == cand.state
    assert len(loaded.history) == 3
    assert store.list_ids() == [cand.id]


def test_disk_store_detects_tampering(tmp_path):
    store = DiskStore(tmp_path)
    cand = make_candidate()
    store.persist(cand)
    log = tmp_path / "candidates" / cand.id / "events.log"
    line = json.loads(log.read_text().splitlines()[0])
    line["r"]["payload_ref"] = "tampered"
    log.write_text(json.dumps(line) + "\n")
    with pytest.raises(CorruptRecord):
        store.load(cand.id)
