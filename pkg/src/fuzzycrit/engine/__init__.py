"""Compliance engine: the four analysis passes over a patient TimeLine."""

from .bottomup import (
    bottom_up_analysis,
    classify_step_timing,
    is_increase,
    specificity,
    step_occurrences,
)
from .config import ROLE_THRESHOLD_KEYS, EngineConfig
from .missing import (
    EMIT,
    SUPPRESS_LOW_COMPLIANCE,
    SUPPRESS_MAX_DOSE,
    assess_missing_drug_increase,
    medication_coverage,
    missing_actions_analysis,
    missing_deadlines,
)
from .pipeline import analyze_patient, run_passes
from .summary import Comment, CritiqueReport, select_explanation, summarize
from .timeline import (
    DEVIATION_TYPES,
    ComputedExplanation,
    IntentionAssessment,
    PlanLifecycleEvent,
    TimeLine,
    TimePoint,
    reasonableness_score,
)
from .topdown import (
    ApplicabilityStatus,
    applicability_status,
    lifecycle_events,
    top_down_analysis,
)

__all__ = [
    "DEVIATION_TYPES",
    "EMIT",
    "ROLE_THRESHOLD_KEYS",
    "SUPPRESS_LOW_COMPLIANCE",
    "SUPPRESS_MAX_DOSE",
    "ApplicabilityStatus",
    "Comment",
    "ComputedExplanation",
    "CritiqueReport",
    "EngineConfig",
    "IntentionAssessment",
    "PlanLifecycleEvent",
    "TimeLine",
    "TimePoint",
    "analyze_patient",
    "applicability_status",
    "assess_missing_drug_increase",
    "bottom_up_analysis",
    "classify_step_timing",
    "is_increase",
    "lifecycle_events",
    "medication_coverage",
    "missing_actions_analysis",
    "missing_deadlines",
    "reasonableness_score",
    "run_passes",
    "select_explanation",
    "specificity",
    "step_occurrences",
    "summarize",
    "top_down_analysis",
]
