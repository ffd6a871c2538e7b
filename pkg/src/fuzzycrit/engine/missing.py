"""Third pass: expected body steps that never happened."""

from __future__ import annotations

from ..knowledge.model import BODY_STEP, DRUG_INCREASE, PERIODIC, KnowledgeRole
from .bottomup import step_occurrences
from .timeline import (
    COMPLETED,
    EARLIEST_START,
    LATEST_START,
    LOW_COMPLIANCE,
    MISSING_ACTION,
    STOPPED,
    SUPPRESSED_MAX_DOSE,
    SUSPENDED,
    ComputedExplanation,
)

MARKER = "missing-actions"

EMIT = "emit"
SUPPRESS_MAX_DOSE = "suppressed-max-dose"
SUPPRESS_LOW_COMPLIANCE = "suppressed-low-compliance"


def missing_deadlines(step, start, end, occurrences):
    """Due times of the step's missing occurrences over ``[start, end)``.

    The first occurrence is due at ``start + latest_offset``. A due time
    counts as missed once ``due + timing_deviation`` has passed without an
    occurrence and still lies inside the span. Periodic steps re-arm one
    period after the occurrence that met the due time (or after the missed
    due time), matching the timing windows of the bottom-up pass; other
    steps are checked once.
    """
    times = sorted(occurrences)
    due = start + step.latest_offset
    out = []
    k = 0
    periodic = step.step_kind == PERIODIC and step.period
    while due + step.timing_deviation <= end:
        if k < len(times) and times[k] <= due + step.timing_deviation:
            if not periodic:
                break
            due = times[k] + step.period
            k += 1
            continue
        out.append(due)
        if not periodic:
            break
        due += step.period
    return out


def _activation_end(events, start_event, record_end):
    for e in events:
        if e.activation == start_event.activation and e.event in (STOPPED, COMPLETED, SUSPENDED):
            return e.time
    return record_end


def medication_coverage(timeline, concept_id, lib, start, end):
    """Fraction of ``[start, end]`` covered by administrations of ``concept_id``."""
    if end <= start:
        return 1.0
    concept = lib.concepts.get(concept_id)
    pers = concept.persistence if concept is not None else None
    spans = []
    for it in timeline.concept_items(concept_id):
        if it.stop is not None and it.stop > it.start:
            a, b = it.start, it.stop
        elif pers is not None:
            a, b = it.start - pers.good_before, it.start + pers.good_after
        else:
            continue
        a, b = max(a, start), min(b, end)
        if b > a:
            spans.append((a, b))
    covered, cur_a, cur_b = 0, None, None
    for a, b in sorted(spans):
        if cur_b is None or a > cur_b:
            if cur_b is not None:
                covered += cur_b - cur_a
            cur_a, cur_b = a, b
        else:
            cur_b = max(cur_b, b)
    if cur_b is not None:
        covered += cur_b - cur_a
    return covered / (end - start)


def assess_missing_drug_increase(timeline, step, time, config, *, start=None, lib=None):
    """Decide whether a missing dose increase is worth a comment.

    Returns ``(decision, detail)``: ``suppressed-max-dose`` when the latest
    dose already reaches ``max_dose``; ``suppressed-low-compliance`` when
    medication coverage over ``[start, time]`` is below the compliance
    threshold; ``emit`` otherwise. Without dose data the increase is
    emitted with a note in ``detail``.
    """
    items = [i for i in timeline.concept_items(step.action_concept) if i.start <= time]
    doses = [i.dose for i in items if i.dose is not None]
    if not doses:
        return EMIT, "no dose data"
    if step.max_dose is not None and doses[-1] >= step.max_dose:
        return SUPPRESS_MAX_DOSE, f"latest dose {doses[-1]:g} >= max {step.max_dose:g}"
    if start is None:
        start = timeline.record_start
    if lib is not None:
        cov = medication_coverage(timeline, step.action_concept, lib, start, time)
        if cov < config.compliance_threshold:
            return SUPPRESS_LOW_COMPLIANCE, f"coverage {cov:.3f}"
    return EMIT, ""


def missing_actions_analysis(timeline, path_plans, config, lib=None):
    """At every plan-latest-start, add missing-action explanations for its activation."""
    if MARKER in timeline.markers:
        return timeline
    plans = {p.id: p for p in path_plans}
    end_of_record = timeline.record_end
    latest = [e for e in timeline.lifecycle_events() if e.event == LATEST_START]
    for ev in latest:
        plan = plans.get(ev.plan_id)
        if plan is None:
            continue
        events = timeline.lifecycle(plan.id)
        first = next(e for e in events if e.event == EARLIEST_START and e.activation == ev.activation)
        s = first.time
        end = _activation_end(events, first, end_of_record)
        if end is None:
            continue
        for step in plan.body:
            items = timeline.concept_items(step.action_concept)
            kept, _ = step_occurrences(items, step, s, end)
            role = KnowledgeRole(plan.id, BODY_STEP, step.id)
            for due in missing_deadlines(step, s, end, [o.start for o in kept]):
                kind, qual = MISSING_ACTION, ""
                if step.step_kind == DRUG_INCREASE:
                    decision, qual = assess_missing_drug_increase(timeline, step, due, config, start=s, lib=lib)
                    timeline.drug_assessments.append((plan.id, step.id, due, decision, qual))
                    if decision == SUPPRESS_MAX_DOSE:
                        kind = SUPPRESSED_MAX_DOSE
                    elif decision == SUPPRESS_LOW_COMPLIANCE:
                        kind = LOW_COMPLIANCE
                timeline.add(
                    ComputedExplanation(
                        kind, due, plan.id, None, role,
                        applicability=first.membership, specificity=1.0,
                        qualifier=qual, activation=ev.activation,
                    )
                )
    timeline.markers.add(MARKER)
    return timeline


__all__ = [
    "EMIT",
    "SUPPRESS_LOW_COMPLIANCE",
    "SUPPRESS_MAX_DOSE",
    "assess_missing_drug_increase",
    "medication_coverage",
    "missing_actions_analysis",
    "missing_deadlines",
]
