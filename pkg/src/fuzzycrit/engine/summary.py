"""Fourth pass: pick one comment per data item and collect the rest."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Optional

from ..timeutil import format_timestamp
from .timeline import (
    ACHIEVEMENT,
    BOOKKEEPING_TYPES,
    LOW_COMPLIANCE,
    MISSING_ACTION,
    NOT_MONITORED,
    SHOULD_HAVE_MONITORED,
    STEP_NOT_SUPPORTED,
    IntentionAssessment,
)


@dataclass(frozen=True)
class Comment:
    patient_id: str
    type: str
    time: int
    plan_id: Optional[str]
    text: str
    scores: dict = field(default_factory=dict)
    end: Optional[int] = None  # set for interval comments
    step_id: Optional[str] = None
    concept_id: Optional[str] = None
    row: Optional[int] = None

    def sort_key(self):
        return (self.time, self.plan_id or "", self.step_id or "", self.type, self.row or 0, self.end or 0)


@dataclass
class CritiqueReport:
    patient_id: str
    comments: list = field(default_factory=list)
    statistics: dict = field(default_factory=dict)
    config_echo: dict = field(default_factory=dict)
    debug: Optional[dict] = None

    def count(self, comment_type):
        return self.statistics.get(comment_type, 0)

    def types(self):
        return [c.type for c in self.comments]


def explanation_rank(expl):
    """Sort key for choosing an item's comment: highest first."""
    return (round(expl.reasonableness, 12), expl.applicability, _neg(expl.plan_id or ""))


def _neg(text):
    # reverse lexical order so that the smaller plan id wins a full tie
    return tuple(-ord(ch) for ch in text) + (1,)


def select_explanation(explanations):
    """Argmax reasonableness over the item's explanations.

    Condition and intention evidence only win when nothing else explains the
    item. Ties break on applicability, then on the smaller plan id.
    """
    primary = [e for e in explanations if e.type not in BOOKKEEPING_TYPES]
    pool = primary or list(explanations)
    return max(pool, key=explanation_rank) if pool else None


def _scores(expl):
    out = {
        "reasonableness": round(expl.reasonableness, 12),
        "applicability": round(expl.applicability, 12),
        "specificity": round(expl.specificity, 12),
    }
    if expl.timing is not None:
        out["timing"] = round(expl.timing, 12)
    return out


def _value(v):
    return f"{v:.6g}" if isinstance(v, float) else str(v)


def _text(expl):
    item = expl.item
    what = f"{item.concept_id}={_value(item.value)}" if item is not None else f"step {expl.step_id}"
    when = format_timestamp(expl.time)
    t = expl.type
    if t == STEP_NOT_SUPPORTED:
        return f"{what} at {when} is not supported by any applicable guideline plan"
    if t == MISSING_ACTION:
        note = f" ({expl.qualifier})" if expl.qualifier else ""
        return f"{what} of plan {expl.plan_id} was due by {when} but not performed{note}"
    if t == LOW_COMPLIANCE:
        return f"{what} of plan {expl.plan_id} due {when}: improve medication compliance first ({expl.qualifier})"
    extra = f" ({expl.qualifier})" if expl.qualifier else ""
    return f"{what} at {when}: {t} for plan {expl.plan_id}{extra}"


def comment_from_explanation(patient_id, expl):
    item = expl.item
    return Comment(
        patient_id=patient_id,
        type=expl.type,
        time=expl.time,
        plan_id=expl.plan_id,
        text=_text(expl),
        scores=_scores(expl),
        step_id=expl.step_id,
        concept_id=item.concept_id if item is not None else None,
        row=item.source_row if item is not None else None,
    )


def _intention_text(a):
    span = f"{format_timestamp(a.start)} to {format_timestamp(a.end)}"
    if a.status == ACHIEVEMENT:
        return f"intention {a.intention_index} of plan {a.plan_id} met with score {a.score:.3f} from {span}"
    if a.status == SHOULD_HAVE_MONITORED:
        return f"intention {a.intention_index} of plan {a.plan_id} should have been monitored from {span}"
    return f"intention {a.intention_index} of plan {a.plan_id} not monitored from {span}"


def comment_from_assessment(patient_id, a):
    scores = {} if a.score is None else {"membership": round(a.score, 12)}
    return Comment(
        patient_id=patient_id,
        type=a.status,
        time=a.start,
        end=a.end,
        plan_id=a.plan_id,
        text=_intention_text(a),
        scores=scores,
        step_id=f"intention-{a.intention_index}",
    )


def _debug_section(timeline):
    events = [
        {"plan_id": e.plan_id, "event": e.event, "time": format_timestamp(e.time),
         "membership": round(e.membership, 12), "activation": e.activation}
        for e in timeline.lifecycle_events()
    ]
    expls = []
    for e in timeline.explanations():
        entry = {"type": e.type, "time": format_timestamp(e.time), "plan_id": e.plan_id, "scores": _scores(e)}
        if e.step_id is not None:
            entry["step_id"] = e.step_id
        if e.item is not None:
            entry["row"] = e.item.source_row
            entry["concept_id"] = e.item.concept_id
        if e.qualifier:
            entry["qualifier"] = e.qualifier
        expls.append(entry)
    return {"lifecycle_events": events, "all_explanations": expls}


def summarize(timeline, config, library_version="", library_hash=""):
    """Collapse the augmented timeline into a :class:`CritiqueReport`."""
    pid = timeline.patient_id
    comments = []
    for item in timeline.items():
        chosen = select_explanation(timeline.explanations(item))
        comments.append(comment_from_explanation(pid, chosen))
    for expl in timeline.explanations():
        if expl.item is None and expl.type in (MISSING_ACTION, LOW_COMPLIANCE):
            comments.append(comment_from_explanation(pid, expl))
    for a in timeline.assessments():
        if isinstance(a, IntentionAssessment) and a.status in (ACHIEVEMENT, SHOULD_HAVE_MONITORED, NOT_MONITORED):
            comments.append(comment_from_assessment(pid, a))
    comments.sort(key=Comment.sort_key)
    stats = dict(sorted(Counter(c.type for c in comments).items()))
    echo = config.echo()
    echo["library_hash"] = library_hash
    echo["library_version"] = library_version
    debug = _debug_section(timeline) if config.debug else None
    return CritiqueReport(pid, comments, stats, echo, debug)


__all__ = [
    "Comment",
    "CritiqueReport",
    "comment_from_assessment",
    "comment_from_explanation",
    "explanation_rank",
    "select_explanation",
    "summarize",
]
