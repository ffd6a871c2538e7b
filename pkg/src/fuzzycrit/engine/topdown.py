"""Top-down pass: conditions and outcome intentions -> lifecycle events and assessments."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from ..errors import UnknownPlanError
from ..knowledge.model import STOP_ROLES, Not
from ..reasoner import evaluate_expression, params_of
from .timeline import (
    ACHIEVEMENT,
    COMPLETED,
    EARLIEST_START,
    LATEST_START,
    NOT_MONITORED,
    RESTART,
    SHOULD_HAVE_MONITORED,
    STOPPED,
    SUSPENDED,
    IntentionAssessment,
    PlanLifecycleEvent,
)

MARKER = "top-down"

NOT_YET_APPLICABLE = "not-yet-applicable"
APPLICABLE = "applicable"
STATUS_SUSPENDED = "suspended"
STATUS_STOPPED = "stopped"
STATUS_COMPLETED = "completed"
UNKNOWN = "unknown"

_STATE_AFTER = {
    EARLIEST_START: APPLICABLE,
    RESTART: APPLICABLE,
    STOPPED: STATUS_STOPPED,
    COMPLETED: STATUS_COMPLETED,
    SUSPENDED: STATUS_SUSPENDED,
}
_STOP_EVENT = {"abort": STOPPED, "complete": COMPLETED, "suspend": SUSPENDED}
# stop-type triggers are handled before entry triggers at the same instant
_TRIGGER_ORDER = {"abort": 0, "complete": 0, "suspend": 0, "restart": 1, "entry": 2}


@dataclass(frozen=True)
class Span:
    start: int
    end: int
    membership: float  # at the span's start


@dataclass(frozen=True)
class Activation:
    plan_id: str
    index: int
    start: int
    membership: float
    end: Optional[int]  # time of the event that ended it, None if still running
    end_event: Optional[str] = None


@dataclass(frozen=True)
class ApplicabilityStatus:
    value: str
    membership: float = 0.0
    activation: Optional[int] = None
    activation_start: Optional[int] = None


def spans(scored):
    """Group touching accepted intervals into spans."""
    out = []
    for si in scored:
        if out and out[-1].end == si.start:
            out[-1] = Span(out[-1].start, si.end, out[-1].membership)
        else:
            out.append(Span(si.start, si.end, si.membership))
    return out


def _covered(spans_, t):
    return any(s.start <= t < s.end for s in spans_)


def lifecycle_events(plan, accepted):
    """Run the entry/stop state machine over accepted condition spans.

    ``accepted`` maps ``entry``/``abort``/``complete``/``suspend``/``restart``
    to span lists. A new activation needs an entry span to start while the
    plan is not running and no abort/complete span holds at that instant.
    """
    triggers = []
    for role, sps in accepted.items():
        for sp in sps:
            triggers.append((sp.start, _TRIGGER_ORDER[role], role, sp.membership))
    triggers.sort()
    blocking = accepted.get("abort", []) + accepted.get("complete", [])
    state, activation, events = "inactive", -1, []
    for t, _, role, m in triggers:
        if role == "entry":
            if state in ("inactive", STATUS_STOPPED, STATUS_COMPLETED) and not _covered(blocking, t):
                activation += 1
                events.append(PlanLifecycleEvent(plan.id, EARLIEST_START, t, m, activation))
                events.append(PlanLifecycleEvent(plan.id, LATEST_START, t + plan.max_start_delay, m, activation))
                state = APPLICABLE
        elif role == "restart":
            if state == STATUS_SUSPENDED:
                events.append(PlanLifecycleEvent(plan.id, RESTART, t, m, activation))
                state = APPLICABLE
        elif role == "suspend":
            if state == APPLICABLE:
                events.append(PlanLifecycleEvent(plan.id, SUSPENDED, t, m, activation))
                state = STATUS_SUSPENDED
        elif state in (APPLICABLE, STATUS_SUSPENDED):
            ev = _STOP_EVENT[role]
            events.append(PlanLifecycleEvent(plan.id, ev, t, m, activation))
            state = STATUS_STOPPED if ev == STOPPED else STATUS_COMPLETED
    return events


def activations(events):
    """Activations from one plan's lifecycle events; each ends at the first stop/complete/suspend."""
    out = []
    for e in events:
        if e.event == EARLIEST_START:
            out.append([e, None])
        elif e.event in (STOPPED, COMPLETED, SUSPENDED) and out and out[-1][1] is None:
            if e.activation == out[-1][0].activation:
                out[-1][1] = e
    return [
        Activation(
            s.plan_id, s.activation, s.time, s.membership,
            None if end is None else end.time,
            None if end is None else end.event,
        )
        for s, end in out
    ]


def _assess_intention(timeline, plan, j, intention, act, end, items, lib):
    target = Not(intention.target) if intention.mode == "avoid" else intention.target
    shm_start = act.start + intention.monitoring_delay
    if shm_start >= end:
        return []
    scored = evaluate_expression(target, items, lib, concept_id=f"{plan.id}#intention{j}")
    out = []
    weighted, covered = 0.0, 0
    for si in scored:
        s, e = max(si.start, shm_start), min(si.end, end)
        if e > s:
            out.append(IntentionAssessment(plan.id, j, ACHIEVEMENT, s, e, si.membership, act.index, intention.mode))
            weighted += si.membership * (e - s)
            covered += e - s
    overall = weighted / covered if covered else None
    out.append(
        IntentionAssessment(plan.id, j, SHOULD_HAVE_MONITORED, shm_start, end, overall, act.index, intention.mode)
    )
    params = params_of(lib.expand(intention.target))
    times = sorted({i.start for p in params for i in items.get(p, ()) if shm_start <= i.start <= end})
    edges = [shm_start] + times + [end]
    for a, b in zip(edges, edges[1:]):
        if b - a > intention.max_gap:
            out.append(IntentionAssessment(plan.id, j, NOT_MONITORED, a, b, None, act.index, intention.mode))
    return out


def top_down_analysis(timeline, path_plans, lib, config):
    """Evaluate each path's entry/stop conditions and outcome intentions.

    Inserts lifecycle events and intention assessments into ``timeline`` and
    keeps the raw (unthresholded) abstractions in ``timeline.abstractions``.
    """
    if MARKER in timeline.markers:
        return timeline
    items = timeline.items_by_concept()
    record_end = timeline.record_end
    for plan in path_plans:
        timeline.plans.add(plan.id)
        exprs = {"entry": plan.entry_expression}
        for role in STOP_ROLES + ("restart",):
            exprs[role] = plan.condition(role)
        accepted = {}
        for role, expr in exprs.items():
            if expr is None:
                continue
            raw = evaluate_expression(expr, items, lib, concept_id=f"{plan.id}:{role}")
            timeline.abstractions[(plan.id, role)] = raw
            threshold = config.threshold_for(role)
            accepted[role] = spans([si for si in raw if si.membership >= threshold])
        events = lifecycle_events(plan, accepted)
        for e in events:
            timeline.add(e)
        if record_end is None:
            continue
        for act in activations(events):
            end = record_end if act.end is None else act.end
            for j, it in enumerate(plan.intentions):
                if it.kind != "outcome":
                    continue
                for a in _assess_intention(timeline, plan, j, it, act, end, items, lib):
                    timeline.add(a)
    timeline.markers.add(MARKER)
    return timeline


def applicability_status(timeline, plan_id, time):
    """Plan status from its state-changing lifecycle events strictly before ``time``."""
    if plan_id not in timeline.plans:
        raise UnknownPlanError(f"plan {plan_id!r} was not analysed on this timeline")
    events = [e for e in timeline.lifecycle(plan_id) if e.event != LATEST_START]
    if not events:
        return ApplicabilityStatus(UNKNOWN)
    prior = [e for e in events if e.time < time]
    if not prior:
        return ApplicabilityStatus(NOT_YET_APPLICABLE)
    last = prior[-1]
    start = next(e for e in reversed(prior) if e.event == EARLIEST_START)
    return ApplicabilityStatus(_STATE_AFTER[last.event], last.membership, last.activation, start.time)
