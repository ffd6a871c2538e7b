"""Retrospective critique of patient records against fuzzy, time-oriented guidelines."""

__version__ = "0.1.0"

from .engine import CritiqueReport, EngineConfig, analyze_patient
from .ingestion import DataItem, PatientRecord, ingest_patient_records, load_mapping_table
from .knowledge import KnowledgeLibrary, load_library, parse_knowledge_library, validate_library
from .reasoner import evaluate_concept, fuzzify_comparison, negate_node

__all__ = [
    "CritiqueReport",
    "DataItem",
    "EngineConfig",
    "KnowledgeLibrary",
    "PatientRecord",
    "__version__",
    "analyze_patient",
    "evaluate_concept",
    "fuzzify_comparison",
    "ingest_patient_records",
    "load_library",
    "load_mapping_table",
    "negate_node",
    "parse_knowledge_library",
    "validate_library",
]
