"""Bottom-up pass: every data item gets one explanation per knowledge role."""

from __future__ import annotations

import logging

from ..knowledge.model import (
    BODY_STEP,
    DRUG_ADMINISTRATION,
    DRUG_INCREASE,
    ENTRY_CONDITION,
    PERIODIC,
    STOP_CONDITION,
)
from ..reasoner import score_at
from .timeline import (
    CONDITION_EVIDENCE,
    DUPLICATE_STEP,
    INTENTION_EVIDENCE,
    REDUNDANT_STEP_REPEATED,
    STEP_NOT_SUPPORTED,
    STEP_ON_TIME,
    STEP_TOO_EARLY,
    STEP_TOO_LATE,
    STOPPED_PLAN_STEP,
    WRONG_PATH_SELECTION,
    ComputedExplanation,
)
from .topdown import (
    APPLICABLE,
    STATUS_COMPLETED,
    STATUS_STOPPED,
    STATUS_SUSPENDED,
    applicability_status,
)

logger = logging.getLogger(__name__)

MARKER = "bottom-up"
_TIE = 1e-9


def _ramp(distance, deviation):
    if deviation <= 0:
        return 0.0
    return min(1.0, max(0.0, 1.0 - distance / deviation))


def _grade(time, lo, hi, deviation):
    if time < lo:
        return STEP_TOO_EARLY, _ramp(lo - time, deviation)
    if time > hi:
        return STEP_TOO_LATE, _ramp(time - hi, deviation)
    return STEP_ON_TIME, 1.0


def classify_step_timing(step, time, plan_start, prior=()):
    """Timing label and score of one step occurrence.

    Once-steps (and the first occurrence of any step) are expected in
    ``[plan_start + earliest, plan_start + latest]``. A periodic step with
    an earlier occurrence ``a`` is expected in one of the windows
    ``[a + k*period - width, a + k*period]`` (``k >= 1``); the nearest
    window is used and ties count as late. Further drug administrations
    continue the treatment and are on time. Outside the window the score
    falls linearly to 0 over ``timing_deviation``.
    """
    prior = sorted(prior)
    if prior and step.step_kind == PERIODIC and step.period:
        a, p = prior[-1], step.period
        width = step.latest_offset - step.earliest_offset
        k = max(1, (time - a) // p)
        best = None
        for kk in (k, k + 1):
            hi = a + kk * p
            label, score = _grade(time, hi - width, hi, step.timing_deviation)
            dist = 0 if label == STEP_ON_TIME else (hi - width - time if label == STEP_TOO_EARLY else time - hi)
            cand = (dist, 0 if label == STEP_TOO_LATE else 1, label, score)
            if best is None or cand < best:
                best = cand
        return best[2], best[3]
    if prior and step.step_kind in (DRUG_ADMINISTRATION, DRUG_INCREASE):
        return STEP_ON_TIME, 1.0
    return _grade(time, plan_start + step.earliest_offset, plan_start + step.latest_offset, step.timing_deviation)


def is_increase(item, previous):
    """True when ``item`` raises the dose over the previous administration."""
    if item.dose is None:
        return False
    return previous is None or previous.dose is None or item.dose > previous.dose


def step_occurrences(items, step, start, end):
    """Split the step's items in ``[start, end)`` into (occurrences, duplicates).

    An item within ``min_repeat_gap`` of the last kept occurrence is a
    duplicate. For drug-increase steps only dose increases occur.
    """
    kept, dups = [], []
    previous = None
    for it in items:
        if it.start >= end:
            break
        before, previous = previous, it
        if it.start < start:
            continue
        if step.step_kind == DRUG_INCREASE and not is_increase(it, before):
            continue
        if kept and it.start - kept[-1].start < step.min_repeat_gap:
            dups.append(it)
        else:
            kept.append(it)
    return kept, dups


def _support(timeline, plan_id, time):
    st = applicability_status(timeline, plan_id, time)
    return st.membership if st.value == APPLICABLE else 0.0


def _explain_step(timeline, lib, config, item, role, spec):
    plan = lib.path_plan(role.plan_id)
    step = plan.step(role.step_id)
    t = item.start
    st = applicability_status(timeline, plan.id, t)
    base = dict(time=t, plan_id=plan.id, item=item, role=role, specificity=spec, activation=st.activation)
    if st.value in (STATUS_STOPPED, STATUS_SUSPENDED):
        qual = "suspended" if st.value == STATUS_SUSPENDED else ""
        return ComputedExplanation(STOPPED_PLAN_STEP, applicability=st.membership, qualifier=qual, **base)
    if st.value == STATUS_COMPLETED:
        return ComputedExplanation(REDUNDANT_STEP_REPEATED, applicability=st.membership, **base)
    own = st.membership if st.value == APPLICABLE else 0.0
    rivals = [(_support(timeline, sib.id, t), sib.id) for sib in lib.siblings(plan.id) if sib.id in timeline.plans]
    if rivals:
        best, best_id = max(rivals)
        if best - own >= config.wrong_path_margin - _TIE and best > own:
            return ComputedExplanation(WRONG_PATH_SELECTION, applicability=own, qualifier=best_id, **base)
    if st.value != APPLICABLE:
        return None
    items = timeline.concept_items(item.concept_id)
    if step.step_kind == DRUG_INCREASE:
        k = items.index(item)
        if not is_increase(item, items[k - 1] if k else None):
            # a refill at the current dose continues therapy; only increases are timed
            return ComputedExplanation(STEP_ON_TIME, applicability=own, qualifier="continuation", **base)
    kept, dups = step_occurrences(items, step, st.activation_start, t + 1)
    if item in dups:
        return ComputedExplanation(DUPLICATE_STEP, applicability=own, **base)
    prior = [o.start for o in kept[: kept.index(item)]]
    label, score = classify_step_timing(step, t, st.activation_start, prior)
    return ComputedExplanation(label, applicability=own, timing=score, **base)


def _raw(timeline, plan_id, roles, t):
    ms = [score_at(timeline.abstractions.get((plan_id, r), ()), t) for r in roles]
    return max((x for x in ms if x is not None), default=0.0)


def _explain(timeline, lib, config, item, role, spec):
    if role.kind == BODY_STEP:
        return _explain_step(timeline, lib, config, item, role, spec)
    t = item.start
    if role.kind == ENTRY_CONDITION:
        m = _raw(timeline, role.plan_id, ("entry", "restart"), t)
        return ComputedExplanation(CONDITION_EVIDENCE, t, role.plan_id, item, role, m, spec)
    if role.kind == STOP_CONDITION:
        m = _raw(timeline, role.plan_id, ("abort", "complete", "suspend"), t)
        return ComputedExplanation(CONDITION_EVIDENCE, t, role.plan_id, item, role, m, spec)
    st = applicability_status(timeline, role.plan_id, t)
    m = st.membership if st.value == APPLICABLE else 0.0
    return ComputedExplanation(INTENTION_EVIDENCE, t, role.plan_id, item, role, m, spec, activation=st.activation)


def specificity(roles):
    """1/k for k distinct plans holding a role for the concept."""
    k = len({r.plan_id for r in roles})
    return 1.0 / k if k else 1.0


def bottom_up_analysis(timeline, lib, config):
    """Scan items chronologically and append their computed explanations.

    Applicability comes from the top-down lifecycle events only, so the
    explanation chosen for one item never changes the context of a later one.
    """
    if MARKER in timeline.markers:
        return timeline
    for item in timeline.items():
        roles = [r for r in lib.role_index.get(item.concept_id, ()) if r.plan_id in timeline.plans]
        spec = specificity(roles)
        found = []
        for role in roles:
            expl = _explain(timeline, lib, config, item, role, spec)
            if expl is not None:
                found.append(expl)
        if not found:
            found.append(ComputedExplanation(STEP_NOT_SUPPORTED, item.start, None, item, None, 0.0, 1.0))
        for expl in found:
            timeline.add(expl)
    timeline.markers.add(MARKER)
    logger.debug("bottom-up: %d explanations", len(timeline.explanations()))
    return timeline
