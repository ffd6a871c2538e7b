import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fuzzycrit.errors import ScenarioError
from fuzzycrit.synth import (
    MISSING,
    PLANTABLE,
    REDUNDANT,
    RENAL,
    STANDARD,
    STOPPED,
    TOO_EARLY,
    TOO_LATE,
    WRONG_PATH,
    PlantedDeviation,
    ScenarioSpec,
    check_scenario,
    generate_synthetic_cohort,
    write_cohort,
)


def spec(*devs, years=3, patients=2, path=STANDARD):
    return ScenarioSpec("s", tuple(devs), years * 365, patients, path)


def test_same_seed_same_cohort():
    s = spec(PlantedDeviation(TOO_LATE, 2), PlantedDeviation(MISSING, 1))
    a, b = generate_synthetic_cohort(s, 4), generate_synthetic_cohort(s, 4)
    assert a.rows == b.rows and a.manifest == b.manifest
    assert generate_synthetic_cohort(s, 5).rows != a.rows


def test_patients_are_independent_of_cohort_size():
    small = generate_synthetic_cohort(spec(patients=1), 4)
    big = generate_synthetic_cohort(spec(patients=3), 4)
    first = [r for r in big.rows if r[0] == "s-0000"]
    assert small.rows == first


def test_missing_tests_are_omitted():
    clean = generate_synthetic_cohort(spec(patients=1), 2)
    planted = generate_synthetic_cohort(spec(PlantedDeviation(MISSING, 2), patients=1), 2)
    assert [m.type for m in planted.manifest] == [MISSING, MISSING]
    tests = lambda c: sum(r[1] == "LAB_HBA1C" for r in c.rows)  # noqa: E731
    assert tests(planted) < tests(clean)
    assert all(m.step_id == "hba1c_test" for m in planted.manifest)


def test_clean_baseline_has_empty_manifest():
    assert generate_synthetic_cohort(spec(patients=3), 1).manifest == []


@pytest.mark.parametrize("bad", [
    spec(PlantedDeviation(STOPPED), PlantedDeviation(REDUNDANT)),
    spec(PlantedDeviation(WRONG_PATH)),
    spec(PlantedDeviation(MISSING, 100), years=1),
    spec(PlantedDeviation(TOO_LATE, 1, {"delay_days": 40})),
    spec(PlantedDeviation(TOO_EARLY, 1, {"speed": 3})),
    spec(PlantedDeviation("step-on-time")),
    spec(PlantedDeviation(STOPPED, 4)),
    spec(path="diabetes/other"),
])
def test_unrealizable_specs_raise(bad):
    with pytest.raises(ScenarioError):
        check_scenario(bad)
    with pytest.raises(ScenarioError):
        generate_synthetic_cohort(bad, 0)


def test_wrong_path_on_renal_patients():
    c = generate_synthetic_cohort(spec(PlantedDeviation(WRONG_PATH, 2), path=RENAL), 0)
    assert {m.plan_id for m in c.manifest} == {STANDARD}


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(PLANTABLE), st.integers(1, 3), st.integers(0, 1000))
def test_manifest_counts_match_spec(kind, count, seed):
    if kind in (STOPPED, REDUNDANT):
        count = 1
    s = spec(PlantedDeviation(kind, count), path=RENAL if kind == WRONG_PATH else STANDARD)
    c = generate_synthetic_cohort(s, seed)
    assert len(c.manifest) == s.patients * count
    assert {m.type for m in c.manifest} == {kind}


def test_write_cohort(tmp_path):
    c = generate_synthetic_cohort(spec(PlantedDeviation(TOO_LATE)), 0)
    write_cohort(c, tmp_path)
    assert sorted(p.name for p in tmp_path.iterdir()) == ["data.csv", "manifest.json", "mapping.csv"]
    assert len(json.loads((tmp_path / "manifest.json").read_text())) == 2
    assert (tmp_path / "data.csv").read_text().count("\n") == len(c.rows) + 1


def test_from_dict():
    s = ScenarioSpec.from_dict({"scenario_id": "x", "deviations": [{"type": MISSING, "count": 2}]})
    assert s.counts() == {MISSING: 2} and s.patients == 1
