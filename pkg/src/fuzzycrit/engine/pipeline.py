"""The four passes chained over one patient record."""

from __future__ import annotations

from ..ingestion import build_timeline
from ..knowledge import library_hash
from .bottomup import bottom_up_analysis
from .config import EngineConfig
from .missing import missing_actions_analysis
from .summary import summarize
from .topdown import top_down_analysis


def run_passes(record, lib, config=None):
    """Build the record's TimeLine and run top-down, bottom-up and missing-actions on it."""
    config = config or EngineConfig()
    tl = build_timeline(record)
    top_down_analysis(tl, lib.path_plans, lib, config)
    bottom_up_analysis(tl, lib, config)
    missing_actions_analysis(tl, lib.path_plans, config, lib)
    return tl


def analyze_patient(record, lib, config=None, *, content_hash=None):
    """Critique one patient record; returns a :class:`CritiqueReport`.

    ``content_hash`` saves recomputing :func:`library_hash` per patient.
    """
    config = config or EngineConfig()
    tl = run_passes(record, lib, config)
    return summarize(tl, config, lib.version, content_hash or library_hash(lib))
