import pytest

from fuzzycrit.ingestion import DataItem, PatientRecord
from fuzzycrit.knowledge import (
    Cmp,
    Concept,
    Condition,
    GuidelinePlan,
    Intention,
    Or,
    Persistence,
    PlanStep,
    Ref,
    build_library,
)
from fuzzycrit.synth import load_builtin_guideline
from fuzzycrit.timeutil import DAY, HOUR

_criteria = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, label): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when not in ("setup", "call"):
        return
    n, label = mark.args
    ok = rep.passed if rep.when == "call" else not rep.failed
    prev = _criteria.get(n, (label, True))
    _criteria[n] = (label, prev[1] and ok and not rep.skipped)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        label, ok = _criteria[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {label}")


# -- shared builders --------------------------------------------------------


def item(concept, value, t, row=0, pid="p1", dose=None, stop=None, kind="primitive"):
    return DataItem(pid, concept, value, None, t, stop=stop, kind=kind, dose=dose, source_row=row)


def record(items, pid="p1"):
    return PatientRecord(pid, {}, list(items))


def hypertension_concepts():
    one_hour = Persistence(0, HOUR)
    return {
        "sbp": Concept("sbp", "primitive", "mmHg", persistence=one_hour),
        "dbp": Concept("dbp", "primitive", "mmHg", persistence=one_hour),
        "hypertension": Concept(
            "hypertension",
            "abstract",
            definition=Or((Cmp("sbp", ">", 140, 10, "mmHg"), Cmp("dbp", ">", 90, 10, "mmHg"))),
        ),
    }


@pytest.fixture
def hypertension_lib():
    return build_library(hypertension_concepts(), ())


@pytest.fixture(scope="session")
def diabetes_lib():
    return load_builtin_guideline()


def periodic_plan_library(step_kind="periodic", period=90 * DAY, latest=30 * DAY, deviation=15 * DAY,
                          gap=14 * DAY, max_dose=None, extra_steps=(), abort=None, complete=None):
    """Single-level plan: entry when hba1c > 6.5, one (or more) body steps."""
    concepts = {
        "hba1c": Concept("hba1c", "primitive", "%", persistence=Persistence(0, 120 * DAY)),
        "egfr": Concept("egfr", "primitive", "mL/min", persistence=Persistence(0, 365 * DAY)),
        "drug": Concept("drug", "event", "mg", persistence=Persistence(0, 30 * DAY)),
        "other": Concept("other", "event", None, persistence=Persistence(0, DAY)),
        "lithium": Concept("lithium", "event", "mg", persistence=Persistence(0, DAY)),
        "diabetes": Concept("diabetes", "abstract", definition=Cmp("hba1c", ">", 6.5, 0.5)),
    }
    action = "drug" if step_kind in ("drug-administration", "drug-increase") else "hba1c"
    body = (
        PlanStep("s1", action, step_kind=step_kind, latest_offset=latest,
                 period=period if step_kind == "periodic" else None,
                 timing_deviation=deviation, min_repeat_gap=gap, max_dose=max_dose),
    ) + tuple(extra_steps)
    conds = [Condition("filter", Ref("diabetes"))]
    if abort is not None:
        conds.append(Condition("abort", abort))
    if complete is not None:
        conds.append(Condition("complete", complete))
    plan = GuidelinePlan(
        "dm", conditions=tuple(conds), body=body,
        intentions=(Intention("outcome", "achieve", Cmp("hba1c", "<", 7.0, 1.0), 90 * DAY, 180 * DAY),),
    )
    return build_library(concepts, (plan,))
