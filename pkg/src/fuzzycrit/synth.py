"""Synthetic cohorts with planted guideline deviations and a ground-truth manifest.

Patients follow the built-in diabetes fixture: a screening HbA1c, a
diagnosis visit with HbA1c and eGFR, quarterly follow-up tests and monthly
refills of the path's drug. Each planted deviation perturbs that schedule
in one known way, so the expected comment (type, time, plan, step) is known
up front.
"""

from __future__ import annotations

import csv
import json
import logging
import random
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .errors import ScenarioError
from .knowledge import load_library, parse_knowledge_library
from .timeutil import DAY, format_timestamp, parse_timestamp

logger = logging.getLogger(__name__)

MISSING = "missing-action"
TOO_LATE = "step-too-late"
TOO_EARLY = "step-too-early"
DUPLICATE = "duplicate-step"
REDUNDANT = "redundant-step-repeated"
STOPPED = "stopped-plan-step"
NOT_SUPPORTED = "step-not-supported"
WRONG_PATH = "wrong-path-selection"
PLANTABLE = (MISSING, TOO_LATE, TOO_EARLY, DUPLICATE, REDUNDANT, STOPPED, NOT_SUPPORTED, WRONG_PATH)
_VISIT_PLANTS = (MISSING, TOO_LATE, TOO_EARLY, DUPLICATE)

STANDARD = "diabetes/standard"
RENAL = "diabetes/renal"
_DRUG = {STANDARD: ("metformin", "RX_METFORMIN", 500.0), RENAL: ("insulin", "RX_INSULIN", 10.0)}

EPOCH = parse_timestamp("2015-01-05T09:00:00Z")
FOLLOW_UP = 75 * DAY
PERIOD = 90 * DAY
REFILL = 30 * DAY
WINDOW = 30 * DAY  # latest - earliest offset of the test step
_PARAM_RANGES = {TOO_LATE: ("delay_days", 1, 15), TOO_EARLY: ("early_days", 1, 30)}

# external code -> (internal concept, unit, factor, offset); HbA1c arrives in mmol/mol
MAPPING = {
    "LAB_HBA1C": ("hba1c", "mmol/mol", 0.09148, 2.152),
    "LAB_EGFR": ("egfr", "mL/min/1.73m2", 1.0, 0.0),
    "RX_METFORMIN": ("metformin", "mg", 1.0, 0.0),
    "RX_INSULIN": ("insulin", "IU", 1.0, 0.0),
    "RX_LITHIUM": ("lithium", "mg", 1.0, 0.0),
    "EVT_REFERRAL": ("referral", "", 1.0, 0.0),
}
DATA_HEADER = ("patient_id", "external_concept_id", "value", "unit", "valid_start", "valid_stop", "dose")


@dataclass(frozen=True)
class PlantedDeviation:
    type: str
    count: int = 1
    parameters: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ScenarioSpec:
    """What to plant, per patient, over ``duration_days`` of follow-up."""

    scenario_id: str
    deviations: tuple = ()
    duration_days: int = 3 * 365
    patients: int = 1
    path: str = STANDARD

    def counts(self):
        out = {}
        for d in self.deviations:
            out[d.type] = out.get(d.type, 0) + d.count
        return out

    @classmethod
    def from_dict(cls, d):
        devs = tuple(
            PlantedDeviation(x["type"], int(x.get("count", 1)), dict(x.get("parameters", {})))
            for x in d.get("deviations", ())
        )
        return cls(
            scenario_id=d["scenario_id"],
            deviations=devs,
            duration_days=int(d.get("duration_days", 3 * 365)),
            patients=int(d.get("patients", 1)),
            path=d.get("path", STANDARD),
        )


@dataclass(frozen=True)
class ManifestEntry:
    patient_id: str
    type: str
    time: int
    plan_id: str = None
    step_id: str = None

    def key(self):
        return (self.patient_id, self.type, self.time, self.plan_id, self.step_id)


@dataclass
class Cohort:
    rows: list
    manifest: list
    mapping: dict = field(default_factory=lambda: dict(MAPPING))


def load_builtin_guideline():
    text = resources.files("fuzzycrit.data").joinpath("diabetes_guideline.json").read_text(encoding="utf-8")
    return parse_knowledge_library(text)


def check_scenario(spec, lib=None):
    """Raise :class:`ScenarioError` when ``spec`` cannot be planted on the fixture."""
    if spec.path not in _DRUG:
        raise ScenarioError(f"unknown path {spec.path!r}")
    if lib is not None and spec.path not in {p.id for p in lib.path_plans}:
        raise ScenarioError(f"guideline has no path {spec.path!r}")
    if spec.patients < 0:
        raise ScenarioError("patient count must be >= 0")
    counts = spec.counts()
    for t, n in counts.items():
        if t not in PLANTABLE:
            raise ScenarioError(f"cannot plant {t!r}")
        if n < 0:
            raise ScenarioError(f"negative count for {t!r}")
    for dev in spec.deviations:
        name, lo, hi = _PARAM_RANGES.get(dev.type, (None, 0, 0))
        for key, value in dev.parameters.items():
            if key != name:
                raise ScenarioError(f"unknown parameter {key!r} for {dev.type}")
            if not (isinstance(value, int) and lo <= value <= hi):
                raise ScenarioError(f"{dev.type} {key} must be an integer in [{lo}, {hi}]")
    if counts.get(STOPPED, 0) and counts.get(REDUNDANT, 0):
        raise ScenarioError("a plan cannot be both stopped and completed in one record")
    for t in (STOPPED, REDUNDANT):
        if counts.get(t, 0) > 3:
            raise ScenarioError(f"at most 3 {t} per record")
    if counts.get(WRONG_PATH, 0) and spec.path != RENAL:
        raise ScenarioError("wrong-path-selection is planted on renal-path patients")
    visits = _visit_budget(spec.duration_days * DAY)
    planted = sum(counts.get(t, 0) for t in _VISIT_PLANTS)
    if planted > visits:
        raise ScenarioError(f"{planted} visit-level deviations exceed the {visits} follow-up visits available")
    if counts.get(WRONG_PATH, 0) > 5 or counts.get(NOT_SUPPORTED, 0) > 20:
        raise ScenarioError("too many extra events for one record")


def _visit_budget(duration):
    # visits 1..n-1 may be perturbed; the last one closes the record cleanly
    n = 0
    t = 0
    while t + 2 * PERIOD <= duration:
        t += PERIOD
        n += 1
    return max(0, n - 1)


class _Patient:
    def __init__(self, pid):
        self.pid = pid
        self.rows, self.manifest = [], []

    def add(self, code, value, t, dose=None):
        internal, unit, factor, offset = MAPPING[code]
        raw = (value - offset) / factor
        self.rows.append((self.pid, code, repr(round(raw, 9)) if factor != 1 else repr(value), unit,
                          format_timestamp(t), "", "" if dose is None else repr(dose)))

    def plant(self, kind, t, plan=None, step=None):
        self.manifest.append(ManifestEntry(self.pid, kind, t, plan, step))


def _hba1c_on_treatment(rng):
    return round(rng.uniform(6.3, 6.9), 2)


def generate_patient(pid, spec, rng):
    """Rows and manifest entries for one patient."""
    p = _Patient(pid)
    counts = spec.counts()
    plan = spec.path
    drug, drug_code, drug_dose = _DRUG[plan]

    t0 = EPOCH + rng.randrange(0, 365) * DAY
    p.add("LAB_HBA1C", round(rng.uniform(5.4, 5.9), 2), t0)
    s = t0 + rng.randrange(90, 181) * DAY
    p.add("LAB_HBA1C", round(rng.uniform(7.5, 8.5), 2), s)
    egfr = rng.randrange(60, 91) if plan == STANDARD else rng.randrange(35, 45)
    p.add("LAB_EGFR", float(egfr), s)
    end = s + spec.duration_days * DAY

    n_visits = _visit_budget(spec.duration_days * DAY)
    slots = list(range(1, n_visits + 1))
    rng.shuffle(slots)
    actions = {}
    for dev in spec.deviations:
        if dev.type in _VISIT_PLANTS:
            for _ in range(dev.count):
                actions[slots.pop()] = dev

    tests = [s]
    k = 1
    while True:
        prev = tests[-1]
        dev = actions.get(k)
        act = dev.type if dev else None
        if act == MISSING:
            t = prev + 2 * PERIOD - 15 * DAY
        elif act == TOO_LATE:
            t = prev + PERIOD + dev.parameters.get("delay_days", 10) * DAY
        elif act == TOO_EARLY:
            t = prev + PERIOD - WINDOW - dev.parameters.get("early_days", 15) * DAY
        else:
            t = prev + FOLLOW_UP
        if t > end and k > max(actions, default=0):
            break
        if act == MISSING:
            p.plant(MISSING, prev + PERIOD, plan, "hba1c_test")
        elif act in (TOO_LATE, TOO_EARLY):
            p.plant(act, t, plan, "hba1c_test")
        p.add("LAB_HBA1C", _hba1c_on_treatment(rng), t)
        tests.append(t)
        if act == DUPLICATE:
            p.add("LAB_HBA1C", _hba1c_on_treatment(rng), t + 2 * DAY)
            p.plant(DUPLICATE, t + 2 * DAY, plan, "hba1c_test")
        k += 1
    last = tests[-1]

    r = s + 14 * DAY
    while r <= last:
        p.add(drug_code, drug_dose, r, dose=drug_dose)
        r += REFILL

    for j in range(counts.get(WRONG_PATH, 0)):
        t = s + (20 + 10 * j) * DAY
        p.add("RX_METFORMIN", 500.0, t, dose=500.0)
        p.plant(WRONG_PATH, t, STANDARD, "metformin")

    for _ in range(counts.get(NOT_SUPPORTED, 0)):
        t = s + DAY + rng.randrange(0, max(1, (last - s) // DAY - 1)) * DAY
        p.add("RX_LITHIUM", 300.0, t, dose=300.0)
        p.plant(NOT_SUPPORTED, t)

    for kind in (STOPPED, REDUNDANT):
        n = counts.get(kind, 0)
        if not n:
            continue
        x = last + 30 * DAY
        if kind == STOPPED:
            p.add("LAB_EGFR", 25.0, x)
        else:
            p.add("EVT_REFERRAL", 1.0, x)
        for j in range(n):
            t = x + (10 + 20 * j) * DAY
            p.add(drug_code, drug_dose, t, dose=drug_dose)
            p.plant(kind, t, plan, drug)

    p.rows.sort(key=lambda row: (row[4], row[1], row[2]))
    return p.rows, p.manifest


def generate_synthetic_cohort(spec, seed, lib=None):
    """Deterministic cohort for ``spec``: CSV rows, manifest and the mapping used."""
    check_scenario(spec, lib)
    rows, manifest = [], []
    for i in range(spec.patients):
        pid = f"{spec.scenario_id}-{i:04d}"
        rng = random.Random(f"{seed}:{spec.scenario_id}:{i}")
        r, m = generate_patient(pid, spec, rng)
        rows.extend(r)
        manifest.extend(m)
    manifest.sort(key=lambda e: (e.patient_id, e.time, e.type))
    logger.debug("scenario %s: %d rows, %d planted", spec.scenario_id, len(rows), len(manifest))
    return Cohort(rows, manifest)


def write_cohort(cohort, out_dir):
    """Write data.csv, mapping.csv and manifest.json into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "data.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(DATA_HEADER)
        w.writerows(cohort.rows)
    with open(out / "mapping.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("external_id", "internal_concept_id", "unit_factor", "unit_offset"))
        for ext, (internal, _unit, factor, offset) in sorted(cohort.mapping.items()):
            w.writerow((ext, internal, repr(factor), repr(offset)))
    doc = [
        {"patient_id": e.patient_id, "type": e.type, "time": format_timestamp(e.time),
         "plan_id": e.plan_id, "step_id": e.step_id}
        for e in cohort.manifest
    ]
    (out / "manifest.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return out


def load_scenario(path):
    with open(path, encoding="utf-8") as fh:
        return ScenarioSpec.from_dict(json.load(fh))


def load_guideline(path=None):
    return load_builtin_guideline() if path is None else load_library(path)
