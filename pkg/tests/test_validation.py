"""Validation gate: contamination screening, sandboxed checks, CVSS scoring."""

import itertools
import math

import pytest

from stagegate.context import PreparedTarget
from stagegate.errors import ContaminatedCheck, MalformedVector
from stagegate.validation import (
    CheckSpec,
    NoopProvisioner,
    Recalibration,
    SandboxLimits,
    SeverityVector,
    ValidationResult,
    canonical_vector,
    cvss_base_score,
    execute,
    parse_vector,
    recalibrate,
)

TARGET = PreparedTarget(
    target_ref="lib", revision="v1", prior_art_brief="", hotspot_list=(),
    subsystem_partition=("parsing",),
)


# --- check execution -------------------------------------------------------

def test_contaminated_check_rejected_before_execution():
    check = CheckSpec(
        candidate_id="c1",
        kind="local_exec",
        command=("true",),
        expected_observable="boom",
        observable_source="poc_internal",
    )
    with pytest.raises(ContaminatedCheck):
        execute(check, TARGET)


def test_local_exec_confirms_on_expected_observable():
    check = CheckSpec(
        candidate_id="c1",
        kind="local_exec",
        command=("sh", "-c", "echo overflow detected"),
        expected_observable="overflow detected",
    )
    result = execute(check, TARGET)
    assert result.status == "Confirmed"
    assert result.contamination_check == "pass"


def test_local_exec_refutes_on_missing_observable():
    check = CheckSpec(
        candidate_id="c1",
        kind="local_exec",
        command=("sh", "-c", "echo nothing to see"),
        expected_observable="overflow detected",
    )
    assert execute(check, TARGET).status == "Refuted"


def test_remote_exec_without_provisioner_is_infeasible():
    check = CheckSpec(
        candidate_id="c1",
        kind="remote_exec",
        command=("true",),
        expected_observable="x",
        provisioning_descriptor="needs-arm64-device",
    )
    result = execute(check, TARGET, provisioner=NoopProvisioner())
    assert result.status == "Infeasible"


def test_wall_timeout_is_infeasible_not_refuted():
    check = CheckSpec(
        candidate_id="c1",
        kind="local_exec",
        command=("sleep", "5"),
        expected_observable="x",
    )
    result = execute(check, TARGET, limits=SandboxLimits(wall_seconds=0.2))
    assert result.status == "Infeasible"


def test_scripted_oracle_passthrough():
    check = CheckSpec(
        candidate_id="c1", kind="scripted_oracle", expected_observable="x",
        oracle_outcome="Refuted",
    )
    assert execute(check, TARGET).status == "Refuted"


def test_confirmed_requires_passing_contamination():
    with pytest.raises(ValueError):
        ValidationResult("Confirmed", "t", "fail", 1.0)


# --- CVSS v3.1 -------------------------------------------------------------

# Second, independently written scorer used as the oracle for the grid.
_AV = {"N": 0.85, "A": 0.62, "L": 0.55, "P": 0.2}
_AC = {"L": 0.77, "H": 0.44}
_PRU = {"N": 0.85, "L": 0.62, "H": 0.27}
_PRC = {"N": 0.85, "L": 0.68, "H": 0.5}
_UI = {"N": 0.85, "R": 0.62}
_CIA = {"N": 0.0, "L": 0.22, "H": 0.56}


def oracle_score(av, ac, pr, ui, s, c, i, a):
    iss = 1 - (1 - _CIA[c]) * (1 - _CIA[i]) * (1 - _CIA[a])
    if s == "U":
        impact = 6.42 * iss
    else:
        impact = 7.52 * (iss - 0.029) - 3.25 * (iss - 0.02) ** 15
    expl = 8.22 * _AV[av] * _AC[ac] * (_PRU[pr] if s == "U" else _PRC[pr]) * _UI[ui]
    if impact <= 0:
        return 0.0
    raw = min(impact + expl, 10) if s == "U" else min(1.08 * (impact + expl), 10)
    scaled = int(round(raw * 100000))
    if scaled % 10000 == 0:
        return scaled / 100000
    return (math.floor(scaled / 10000) + 1) / 10


FROZEN = [
    ("AV:N/AC:L/PR:N/UI:N/S:U/C:H/I:H/A:H", 9.8),
    ("AV:L/AC:L/PR:L/UI:N/S:U/C:H/I:H/A:H", 7.8),
    ("AV:N/AC:L/PR:N/UI:R/S:C/C:H/I:H/A:H", 9.6),
    ("AV:N/AC:H/PR:N/UI:N/S:U/C:H/I:N/A:N", 5.9),
    ("AV:N/AC:L/PR:N/UI:N/S:C/C:N/I:N/A:N", 0.0),
]


@pytest.mark.parametrize("vector,score", FROZEN)
def test_frozen_reference_scores(vector, score):
    assert cvss_base_score(vector) == score


def test_exhaustive_grid_matches_independent_scorer():
    for av, ac, pr, ui, s, c, i, a in itertools.product(
        "NALP", "LH", "NLH", "NR", "UC", "NLH", "NLH", "NLH"
    ):
        vector = f"AV:{av}/AC:{ac}/PR:{pr}/UI:{ui}/S:{s}/C:{c}/I:{i}/A:{a}"
        assert cvss_base_score(vector) == oracle_score(av, ac, pr, ui, s, c, i, a), vector


@pytest.mark.parametrize(
    "bad",
    [
        "",
        "AV:N",
        "AV:N/AC:L/PR:N/UI:N/S:U/C:H/I:H",         # missing A
        "AV:N/AC:L/PR:N/UI:N/S:U/C:H/I:H/A:X",     # bad value
        "AV:N/AV:N/AC:L/PR:N/UI:N/S:U/C:H/I:H/A:H",  # duplicate
        "CVSS:3.0/AV:N/AC:L/PR:N/UI:N/S:U/C:H/I:H/A:H",  # wrong version
        "AV:N/AC:L/PR:N/UI:N/S:U/C:H/I:H/A:H/ZZ:Q",
    ],
)
def test_malformed_vectors_rejected(bad):
    with pytest.raises(MalformedVector):
        parse_vector(bad)


def test_canonical_vector_and_prefix():
    canon = canonical_vector("av:n/ac:l/pr:n/ui:n/s:u/c:h/i:h/a:h")
    assert canon == "CVSS:3.1/AV:N/AC:L/PR:N/UI:N/S:U/C:H/I:H/A:H"
    assert cvss_base_score(canon) == 9.8


def test_severity_vector_recomputes_score():
    sv = SeverityVector.from_vector("AV:N/AC:L/PR:N/UI:N/S:U/C:H/I:H/A:H")
    assert sv.score == 9.8
    with pytest.raises(ValueError):
        SeverityVector(vector=sv.vector, score=5.0)


def test_recalibrate_takes_minimum_assessment():
    claimed = SeverityVector.from_vector("AV:N/AC:L/PR:N/UI:N/S:U/C:H/I:H/A:H")
    low = SeverityVector.from_vector("AV:L/AC:H/PR:L/UI:R/S:U/C:L/I:N/A:N")
    mid = SeverityVector.from_vector("AV:L/AC:L/PR:L/UI:N/S:U/C:H/I:H/A:H")
    recal = recalibrate(claimed, [mid, low])
    assert recal.final == low
    assert recal.direction == "down"


def test_recalibrate_human_override_wins():
    claimed = SeverityVector.from_vector("AV:N/AC:H/PR:N/UI:N/S:U/C:H/I:N/A:N")
    low = SeverityVector.from_vector("AV:L/AC:H/PR:L/UI:R/S:U/C:L/I:N/A:N")
    recal = recalibrate(claimed, [low], human_choice=claimed)
    assert recal.final == claimed
    assert recal.direction == "unchanged"


def test_recalibrate_up_direction():
    claimed = SeverityVector.from_vector("AV:L/AC:H/PR:L/UI:R/S:U/C:L/I:N/A:N")
    high = SeverityVector.from_vector("AV:N/AC:L/PR:N/UI:N/S:U/C:H/I:H/A:H")
    assert recalibrate(claimed, [high]).direction == "up"
