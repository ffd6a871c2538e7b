"""Declarative concepts and procedural guideline plans."""

from .index import roles_for_concept
from .model import (
    ABSTRACT,
    EVENT,
    PRIMITIVE,
    And,
    Cmp,
    Concept,
    Condition,
    FuzzyComparison,
    GuidelinePlan,
    Intention,
    KnowledgeLibrary,
    KnowledgeRole,
    Not,
    Or,
    PathPlan,
    Persistence,
    PlanStep,
    Ref,
    conjoin,
    disjoin,
)
from .parser import (
    build_library,
    library_hash,
    library_to_document,
    load_library,
    parse_document,
    parse_knowledge_library,
    serialize_library,
)
from .paths import flatten_guideline_paths, merge_conditions
from .validation import Finding, ValidationReport, validate_library

__all__ = [
    "ABSTRACT", "EVENT", "PRIMITIVE",
    "And", "Cmp", "Concept", "Condition", "FuzzyComparison", "GuidelinePlan", "Intention",
    "KnowledgeLibrary", "KnowledgeRole", "Not", "Or", "PathPlan", "Persistence", "PlanStep", "Ref",
    "conjoin", "disjoin", "build_library", "library_hash", "library_to_document", "load_library",
    "parse_document", "parse_knowledge_library", "serialize_library", "flatten_guideline_paths",
    "merge_conditions", "Finding", "ValidationReport", "validate_library", "roles_for_concept",
]
