"""Data mapper: external CSV rows -> unit-normalized, time-stamped patient records."""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

from .errors import ConversionError, IngestError, MappingError
from .knowledge.model import ABSTRACT, CATEGORICAL
from .timeutil import parse_timestamp

logger = logging.getLogger(__name__)

DATA_COLUMNS = ("patient_id", "external_concept_id", "value", "unit", "valid_start")
MAPPING_COLUMNS = ("external_id", "internal_concept_id", "unit_factor", "unit_offset")
DEMOGRAPHIC_COLUMNS = ("patient_id", "key", "value")

UNMAPPED = None


@dataclass(frozen=True)
class DataItem:
    patient_id: str
    concept_id: str
    value: Union[float, str]
    unit: Optional[str]
    start: int
    stop: Optional[int] = None
    kind: str = "primitive"
    dose: Optional[float] = None
    source_row: int = 0

    @property
    def end(self):
        return self.start if self.stop is None else self.stop

    def sort_key(self):
        return (self.start, self.concept_id, self.source_row)


@dataclass(frozen=True)
class MappingEntry:
    external_id: str
    internal_id: str
    unit_factor: float = 1.0
    unit_offset: float = 0.0

    def __post_init__(self):
        if self.unit_factor == 0 or not math.isfinite(self.unit_factor):
            raise MappingError(f"unit_factor for {self.external_id!r} must be finite and non-zero")

    @property
    def is_identity(self):
        return self.unit_factor == 1 and self.unit_offset == 0


@dataclass
class PatientRecord:
    patient_id: str
    demographics: dict = field(default_factory=dict)
    items: list = field(default_factory=list)

    def __post_init__(self):
        self.items = sorted(self.items, key=DataItem.sort_key)

    @property
    def start(self):
        return self.items[0].start if self.items else None

    @property
    def end(self):
        """Latest timestamp in the record (valid-stop of interval items included)."""
        return max((i.end for i in self.items), default=None)

    def by_concept(self):
        out = {}
        for it in self.items:
            out.setdefault(it.concept_id, []).append(it)
        return out


@dataclass
class IngestReport:
    rows_in: int = 0
    items_out: int = 0
    skipped_rows: list = field(default_factory=list)  # (row, reason)
    unmapped_rows: list = field(default_factory=list)  # (row, external id)

    @property
    def skipped(self):
        return len(self.skipped_rows)

    @property
    def unmapped(self):
        return len(self.unmapped_rows)

    def merge(self, other):
        return IngestReport(
            self.rows_in + other.rows_in,
            self.items_out + other.items_out,
            sorted(self.skipped_rows + other.skipped_rows),
            sorted(self.unmapped_rows + other.unmapped_rows),
        )


# -- mapping ----------------------------------------------------------------


def _open_text(source):
    if isinstance(source, (str, Path)):
        return open(source, newline="", encoding="utf-8")
    if isinstance(source, io.IOBase) or hasattr(source, "read"):
        return source
    raise TypeError(f"cannot read CSV from {type(source).__name__}")


def _reader(source, required):
    fh = _open_text(source)
    reader = csv.DictReader(fh)
    missing = [c for c in required if c not in (reader.fieldnames or ())]
    if missing:
        raise IngestError(f"missing CSV column(s): {', '.join(missing)}")
    return fh, reader


def load_mapping_table(source):
    """Read a mapping CSV into ``{external_id: MappingEntry}``."""
    fh, reader = _reader(source, MAPPING_COLUMNS)
    table = {}
    with fh:
        for row in reader:
            ext = row["external_id"].strip()
            try:
                factor = float(row["unit_factor"] or 1)
                offset = float(row["unit_offset"] or 0)
            except ValueError:
                raise MappingError(f"line {reader.line_num}: non-numeric unit conversion for {ext!r}") from None
            if ext in table:
                raise MappingError(f"line {reader.line_num}: duplicate external id {ext!r}")
            table[ext] = MappingEntry(ext, row["internal_concept_id"].strip(), factor, offset)
    return table


def identity_mapping(lib):
    """Map every raw (non-abstract) concept id to itself."""
    return {cid: MappingEntry(cid, cid) for cid, c in lib.concepts.items() if c.kind != ABSTRACT}


def map_concept(external_id, mapping_table):
    """Internal concept id for ``external_id``, or :data:`UNMAPPED`."""
    entry = mapping_table.get(external_id)
    return UNMAPPED if entry is None else entry.internal_id


def convert_units(raw_value, entry):
    if isinstance(raw_value, bool) or not isinstance(raw_value, (int, float)):
        if entry.is_identity:
            return raw_value
        raise ConversionError(f"cannot convert non-numeric value {raw_value!r} for {entry.external_id!r}")
    return raw_value * entry.unit_factor + entry.unit_offset


def invert_units(value, entry):
    return (value - entry.unit_offset) / entry.unit_factor


# -- ingestion --------------------------------------------------------------


def _parse_row(row, line, mapping_table, lib):
    """Returns (DataItem, None) or (None, (kind, detail))."""
    pid = (row.get("patient_id") or "").strip()
    ext = (row.get("external_concept_id") or "").strip()
    if not pid or not ext:
        return None, ("skipped", "missing patient_id or external_concept_id")
    entry = mapping_table.get(ext)
    if entry is None:
        return None, ("unmapped", ext)
    concept = lib.concepts.get(entry.internal_id)
    if concept is None or concept.kind == ABSTRACT:
        return None, ("skipped", f"mapped concept {entry.internal_id!r} is not a raw library concept")
    try:
        start = parse_timestamp(row.get("valid_start") or "")
        stop_text = (row.get("valid_stop") or "").strip()
        stop = parse_timestamp(stop_text) if stop_text else None
    except ValueError as exc:
        return None, ("skipped", f"unparseable timestamp: {exc}")
    if stop is not None and stop < start:
        return None, ("skipped", "valid_stop before valid_start")
    raw = (row.get("value") or "").strip()
    if concept.value_domain == CATEGORICAL:
        value = raw
    else:
        try:
            value = float(raw)
        except ValueError:
            return None, ("skipped", f"non-numeric value {raw!r} for {concept.id!r}")
    try:
        value = convert_units(value, entry)
    except ConversionError as exc:
        return None, ("skipped", str(exc))
    dose_text = (row.get("dose") or "").strip()
    try:
        dose = float(dose_text) if dose_text else None
    except ValueError:
        return None, ("skipped", f"non-numeric dose {dose_text!r}")
    item = DataItem(
        patient_id=pid,
        concept_id=concept.id,
        value=value,
        unit=concept.unit,
        start=start,
        stop=stop,
        kind=concept.kind,
        dose=dose,
        source_row=line,
    )
    return item, None


def ingest_patient_records(source, mapping_table, lib, demographics=None):
    """Read a data CSV into per-patient records.

    Every input row ends up as exactly one of: an item, a skipped row
    (malformed; reason recorded) or an unmapped row. Records come back
    sorted by patient id. ``source_row`` is the CSV line number.
    """
    fh, reader = _reader(source, DATA_COLUMNS)
    report = IngestReport()
    items = {}
    with fh:
        for row in reader:
            line = reader.line_num
            report.rows_in += 1
            item, problem = _parse_row(row, line, mapping_table, lib)
            if problem is not None:
                kind, detail = problem
                if kind == "unmapped":
                    report.unmapped_rows.append((line, detail))
                else:
                    report.skipped_rows.append((line, detail))
                    logger.warning("row %d skipped: %s", line, detail)
                continue
            items.setdefault(item.patient_id, []).append(item)
            report.items_out += 1
    demographics = demographics or {}
    records = [
        PatientRecord(pid, dict(demographics.get(pid, {})), its) for pid, its in sorted(items.items())
    ]
    return records, report


def load_demographics(source):
    fh, reader = _reader(source, DEMOGRAPHIC_COLUMNS)
    out = {}
    with fh:
        for row in reader:
            out.setdefault(row["patient_id"].strip(), {})[row["key"].strip()] = row["value"]
    return out


def build_timeline(record):
    """A fresh TimeLine holding one Data-Item point per record item."""
    from .engine.timeline import TimeLine

    tl = TimeLine(record.patient_id, record.demographics)
    for it in record.items:
        tl.add_item(it)
    return tl
