"""Lifecycle state machine: legality, replay determinism, resurrection."""

import dataclasses

import pytest
from hypothesis import given, strategies as st

from stagegate import model
from stagegate.errors import (
    IllegalTransition,
    MissingAuthorization,
    NotKilled,
    StaleSequence,
)
from stagegate.model import (
    Claim,
    DefectClass,
    Event,
    EventKind,
    Origin,
    OverrideRecord,
    SourceStratum,
    Stage,
    StateKind,
    new_candidate,
    replay_state,
    transition,
)


def make_candidate(cid="c1"):
    claim = Claim(
        title="claimed overflow",
        defect_class=DefectClass.MEMORY_SAFETY,
        summary="claimed out-of-bounds write",
        entry_points=("src/a.c:10",),
    )
    origin = Origin("hunter-1", 1, SourceStratum.GIT_HOTSPOTS, "parsing")
    return new_candidate(cid, "lib", claim, origin)


def ev(cand, kind, payload=None):
    return Event(
        seq=cand.last_seq + 1,
        timestamp=float(cand.last_seq + 1),
        kind=kind,
        payload_ref=f"ref:{cand.last_seq + 1}",
        payload=payload or {},
    )


def gate(cand, stage, outcome, **extra):
    payload = {"stage": stage, "outcome": outcome}
    payload.update(extra)
    return ev(cand, EventKind.GATE_DECIDED, payload)


def test_new_candidate_starts_generated():
    cand = make_candidate()
    assert cand.state.kind is StateKind.GENERATED
    assert len(cand.history) == 1
    assert cand.history[0].kind is EventKind.GENERATED


def test_promotion_path_to_disclosure():
    cand = make_candidate()
    cand = transition(cand, ev(cand, EventKind.DISPATCHED, {"stage": "A"}))
    cand = transition(cand, gate(cand, "A", "promote"))
    assert cand.state.stage is Stage.B
    cand = transition(cand, gate(cand, "B", "promote"))
    assert cand.state.stage is Stage.C
    cand = transition(cand, ev(cand, EventKind.VALIDATED, {"status": "Confirmed"}))
    assert cand.state.stage is Stage.D
    cand = transition(cand, gate(cand, "D", "promote"))
    assert cand.state.kind is StateKind.DISCLOSURE_READY
    assert cand.state.terminal


def test_gate_promote_at_c_is_illegal():
    cand = make_candidate()
    cand = transition(cand, gate(cand, "A", "promote"))
    cand = transition(cand, gate(cand, "B", "promote"))
    with pytest.raises(IllegalTransition):
        transition(cand, gate(cand, "C", "promote"))


def test_validated_outside_stage_c_is_illegal():
    cand = make_candidate()
    with pytest.raises(IllegalTransition):
        transition(cand, ev(cand, EventKind.VALIDATED, {"status": "Confirmed"}))


def test_infeasible_sets_provisional_flag():
    cand = make_candidate()
    cand = transition(cand, gate(cand, "A", "promote"))
    cand = transition(cand, gate(cand, "B", "promote"))
    cand = transition(cand, ev(cand, EventKind.VALIDATED, {"status": "Infeasible"}))
    assert cand.state.stage is Stage.D
    assert model.FLAG_PROVISIONAL in cand.flags


def test_kill_and_no_verdicts_after_terminal():
    cand = make_candidate()
    cand = transition(cand, gate(cand, "A", "kill"))
    assert cand.state.kind is StateKind.KILLED
    assert cand.state.stage is Stage.A
    with pytest.raises(IllegalTransition):
        transition(cand, ev(cand, EventKind.VERDICT_RECORDED, {"agent_id": "x"}))


def test_partial_kill_reentry_only_at_d():
    cand = make_candidate()
    cand = transition(cand, gate(cand, "A", "promote"))
    with pytest.raises(IllegalTransition):
        transition(cand, gate(cand, "B", "partial_kill_reentry"))
    cand = transition(cand, gate(cand, "B", "promote"))
    cand = transition(cand, ev(cand, EventKind.VALIDATED, {"status": "Confirmed"}))
    cand = transition(cand, gate(cand, "D", "partial_kill_reentry", target_stage="B"))
    assert cand.state.kind is StateKind.REENTRY
    assert cand.state.stage is Stage.B


def test_stale_sequence_rejected():
    cand = make_candidate()
    event = ev(cand, EventKind.DISPATCHED, {"stage": "A"})
    cand2 = transition(cand, event)
    with pytest.raises(StaleSequence):
        transition(cand2, event)  # same seq again


def test_resurrect_requires_killed_and_human_channel():
    cand = make_candidate()
    override = OverrideRecord(
        "op", "resurrect", cand.id, "justified", timestamp=1.0, target_stage=Stage.B
    )
    with pytest.raises(NotKilled):
        model.resurrect(cand, override)
    cand = transition(cand, gate(cand, "A", "kill"))
    no_channel = dataclasses.replace(override, human_channel=False, timestamp=float(cand.last_seq + 1))
    with pytest.raises(MissingAuthorization):
        model.resurrect(cand, no_channel)
    revived = model.resurrect(
        cand, dataclasses.replace(override, timestamp=float(cand.last_seq + 1))
    )
    assert revived.state.stage is Stage.B
    assert model.FLAG_RESURRECTED in revived.flags
    # the kill history is preserved verbatim
    assert [e.kind for e in revived.history[:len(cand.history)]] == [e.kind for e in cand.history]


def test_unanimity_and_human_review_flags_from_gate_payload():
    cand = make_candidate()
    cand = transition(cand, gate(cand, "A", "kill", unanimity_warning=True, human_review=True))
    assert model.FLAG_UNANIMITY_WARNED in cand.flags
    assert model.FLAG_HUMAN_REVIEW in cand.flags


def test_round_trip_record():
    cand = make_candidate()
    cand = transition(cand, gate(cand, "A", "promote"))
    loaded = model.Candidate.from_record(cand.to_record())
    assert loaded.state == cand.state
    assert loaded.flags == cand.flags
    assert loaded.history == cand.history


# Property: the cached state always equals a from-scratch replay, under any
# randomly built legal event walk.

_STEP = st.sampled_from(["dispatch", "verdict", "promote", "kill", "validate_ok",
                         "validate_refuted", "validate_infeasible", "partial", "resurrect"])


@given(st.lists(_STEP, min_size=0, max_size=25))
def test_replay_matches_cached_state(steps):
    cand = make_candidate()
    for step in steps:
        state = cand.state
        try:
            if step == "dispatch":
                event = ev(cand, EventKind.DISPATCHED, {"stage": "A"})
            elif step == "verdict":
                event = ev(cand, EventKind.VERDICT_RECORDED, {"agent_id": "a"})
            elif step == "promote":
                stage = model._stage_of(state)
                if stage is None or stage is Stage.C:
                    continue
                event = gate(cand, stage.value, "promote")
            elif step == "kill":
                stage = model._stage_of(state)
                if stage is None:
                    continue
                event = gate(cand, stage.value, "kill")
            elif step.startswith("validate"):
                if model._stage_of(state) is not Stage.C:
                    continue
                status = {"validate_ok": "Confirmed", "validate_refuted": "Refuted",
                          "validate_infeasible": "Infeasible"}[step]
                event = ev(cand, EventKind.VALIDATED, {"status": status})
            elif step == "partial":
                if model._stage_of(state) is not Stage.D:
                    continue
                event = gate(cand, "D", "partial_kill_reentry", target_stage="B")
            else:
                if state.kind is not StateKind.KILLED:
                    continue
                event = ev(cand, EventKind.OVERRIDDEN,
                           {"action": "resurrect", "human_channel": True, "target_stage": "A"})
            cand = transition(cand, event)
        except IllegalTransition:
            continue
        replayed_state, replayed_flags = replay_state(cand.history)
        assert replayed_state == cand.state
        assert replayed_flags == cand.flags
