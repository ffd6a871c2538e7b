"""The per-patient TimeLine and the point payloads the analysis passes add to it."""

from __future__ import annotations

import bisect
import itertools
from dataclasses import dataclass, field
from typing import Optional

DATA_ITEM = "data-item"
COMPUTED = "computed-explanation"
_KIND_RANK = {DATA_ITEM: 0, COMPUTED: 1}

# lifecycle event names
EARLIEST_START = "plan-earliest-start"
LATEST_START = "plan-latest-start"
STOPPED = "plan-stopped"
COMPLETED = "plan-completed"
SUSPENDED = "plan-suspended"
RESTART = "plan-restart"
LIFECYCLE_EVENTS = (EARLIEST_START, LATEST_START, STOPPED, COMPLETED, SUSPENDED, RESTART)

# explanation types
STEP_NOT_SUPPORTED = "step-not-supported"
STOPPED_PLAN_STEP = "stopped-plan-step"
REDUNDANT_STEP_REPEATED = "redundant-step-repeated"
DUPLICATE_STEP = "duplicate-step"
WRONG_PATH_SELECTION = "wrong-path-selection"
STEP_TOO_EARLY = "step-too-early"
STEP_ON_TIME = "step-on-time"
STEP_TOO_LATE = "step-too-late"
MISSING_ACTION = "missing-action"
CONDITION_EVIDENCE = "condition-evidence"
INTENTION_EVIDENCE = "intention-evidence"
LOW_COMPLIANCE = "low-compliance"
SUPPRESSED_MAX_DOSE = "suppressed-max-dose"

DATA_ITEM_TYPES = (
    STEP_NOT_SUPPORTED,
    STOPPED_PLAN_STEP,
    REDUNDANT_STEP_REPEATED,
    DUPLICATE_STEP,
    WRONG_PATH_SELECTION,
    STEP_TOO_EARLY,
    STEP_ON_TIME,
    STEP_TOO_LATE,
)
BOOKKEEPING_TYPES = (CONDITION_EVIDENCE, INTENTION_EVIDENCE, SUPPRESSED_MAX_DOSE)

# intention assessment statuses (also comment types)
ACHIEVEMENT = "intention-achievement"
SHOULD_HAVE_MONITORED = "intention-should-have-monitored"
NOT_MONITORED = "intention-not-monitored"
INTENTION_TYPES = (ACHIEVEMENT, SHOULD_HAVE_MONITORED, NOT_MONITORED)

DEVIATION_TYPES = (
    MISSING_ACTION,
    STEP_TOO_LATE,
    STEP_TOO_EARLY,
    DUPLICATE_STEP,
    REDUNDANT_STEP_REPEATED,
    STOPPED_PLAN_STEP,
    STEP_NOT_SUPPORTED,
    WRONG_PATH_SELECTION,
    LOW_COMPLIANCE,
)


@dataclass(frozen=True)
class PlanLifecycleEvent:
    plan_id: str
    event: str
    time: int
    membership: float
    activation: int


@dataclass(frozen=True)
class ComputedExplanation:
    type: str
    time: int
    plan_id: Optional[str]
    item: Optional[object] = None  # DataItem; None for missing actions
    role: Optional[object] = None  # KnowledgeRole
    applicability: float = 0.0
    specificity: float = 1.0
    timing: Optional[float] = None
    qualifier: str = ""
    activation: Optional[int] = None

    @property
    def reasonableness(self):
        return reasonableness_score(self)

    @property
    def step_id(self):
        return getattr(self.role, "step_id", None)


def reasonableness_score(expl):
    """Mean of the defined sub-scores: applicability, specificity and (if any) timing."""
    parts = [expl.applicability, expl.specificity]
    if expl.timing is not None:
        parts.append(expl.timing)
    return sum(parts) / len(parts)


@dataclass(frozen=True)
class IntentionAssessment:
    plan_id: str
    intention_index: int
    status: str
    start: int
    end: int
    score: Optional[float] = None
    activation: int = 0
    mode: str = ""


@dataclass(frozen=True)
class TimePoint:
    kind: str
    time: int
    payload: object
    seq: int = 0

    def sort_key(self):
        p = self.payload
        plan = getattr(p, "plan_id", None) or ""
        item = p if self.kind == DATA_ITEM else getattr(p, "item", None)
        concept = getattr(item, "concept_id", "") or ""
        return (self.time, _KIND_RANK[self.kind], plan, concept, self.seq)


@dataclass
class TimeLine:
    """Chronological store of data-item and computed-explanation points.

    Besides the points it keeps a few side indexes the passes need: lifecycle
    events per plan, explanations per data item, and the raw abstraction
    intervals found in the top-down pass (``abstractions[(plan, role)]``).
    """

    patient_id: str
    demographics: dict = field(default_factory=dict)

    def __post_init__(self):
        self._points = []
        self._keys = []
        self._seq = itertools.count()
        self.markers = set()
        self.plans = set()
        self.abstractions = {}
        self.drug_assessments = []
        self._lifecycle = {}
        self._by_item = {}
        self._items_by_concept = {}

    # -- insertion --

    def _insert(self, kind, time, payload):
        pt = TimePoint(kind, time, payload, next(self._seq))
        key = pt.sort_key()
        k = bisect.bisect_right(self._keys, key)
        self._keys.insert(k, key)
        self._points.insert(k, pt)
        return pt

    def add_item(self, item):
        self._items_by_concept.setdefault(item.concept_id, []).append(item)
        return self._insert(DATA_ITEM, item.start, item)

    def add(self, payload):
        """Insert a computed payload (explanation, lifecycle event or assessment)."""
        time = payload.time if hasattr(payload, "time") else payload.start
        if isinstance(payload, PlanLifecycleEvent):
            evs = self._lifecycle.setdefault(payload.plan_id, [])
            evs.append(payload)
            evs.sort(key=lambda e: (e.time, LIFECYCLE_EVENTS.index(e.event)))
        elif isinstance(payload, ComputedExplanation) and payload.item is not None:
            self._by_item.setdefault(payload.item, []).append(payload)
        return self._insert(COMPUTED, time, payload)

    # -- queries --

    def __len__(self):
        return len(self._points)

    def __iter__(self):
        return iter(self._points)

    def scan(self, kind=None, payload_type=None):
        for pt in self._points:
            if kind is not None and pt.kind != kind:
                continue
            if payload_type is not None and not isinstance(pt.payload, payload_type):
                continue
            yield pt

    def between(self, start, end):
        """Points with ``start <= time < end``."""
        lo = bisect.bisect_left(self._keys, (start,))
        hi = bisect.bisect_left(self._keys, (end,))
        return self._points[lo:hi]

    def items(self):
        return [pt.payload for pt in self._points if pt.kind == DATA_ITEM]

    def items_by_concept(self):
        return {k: sorted(v, key=lambda i: i.sort_key()) for k, v in self._items_by_concept.items()}

    def concept_items(self, concept_id):
        return sorted(self._items_by_concept.get(concept_id, ()), key=lambda i: i.sort_key())

    def lifecycle(self, plan_id):
        return list(self._lifecycle.get(plan_id, ()))

    def lifecycle_events(self):
        return [pt.payload for pt in self.scan(COMPUTED, PlanLifecycleEvent)]

    def explanations(self, item=None):
        if item is not None:
            return list(self._by_item.get(item, ()))
        return [pt.payload for pt in self.scan(COMPUTED, ComputedExplanation)]

    def assessments(self):
        return [pt.payload for pt in self.scan(COMPUTED, IntentionAssessment)]

    @property
    def record_end(self):
        return max((i.end for v in self._items_by_concept.values() for i in v), default=None)

    @property
    def record_start(self):
        return min((i.start for v in self._items_by_concept.values() for i in v), default=None)
