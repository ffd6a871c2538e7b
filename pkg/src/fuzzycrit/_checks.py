"""Input validation shared by the estimator wrappers and the CLI."""

from __future__ import annotations

import math
from numbers import Real
from pathlib import Path

from .ingestion import PatientRecord
from .knowledge import KnowledgeLibrary, load_library


def check_unit_interval(value, name):
    """Return ``value`` as float, or raise ValueError unless it lies in [0, 1]."""
    if isinstance(value, bool) or not isinstance(value, Real) or not math.isfinite(value):
        raise ValueError(f"{name} must be a finite number, got {value!r}")
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value}")
    return float(value)


def check_library(library):
    """Accept a :class:`KnowledgeLibrary` or a path to a knowledge JSON file."""
    if isinstance(library, KnowledgeLibrary):
        return library
    if isinstance(library, (str, Path)):
        return load_library(library)
    raise TypeError(f"expected a KnowledgeLibrary or a path, got {type(library).__name__}")


def check_records(records):
    """A list of patient records; a single record is wrapped."""
    if isinstance(records, PatientRecord):
        return [records]
    try:
        out = list(records)
    except TypeError:
        raise TypeError(f"expected PatientRecord(s), got {type(records).__name__}") from None
    bad = [type(r).__name__ for r in out if not isinstance(r, PatientRecord)]
    if bad:
        raise TypeError(f"expected PatientRecord items, got {bad[0]}")
    return out
