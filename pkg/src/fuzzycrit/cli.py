"""Command-line entry point.

Exit codes: 0 success, 1 I/O failure (unreadable input, unwritable
output), 2 validation failure (bad knowledge file, mapping or scenario).
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .engine import EngineConfig, analyze_patient
from .errors import FuzzycritError
from .ingestion import identity_mapping, ingest_patient_records, load_demographics, load_mapping_table
from .knowledge import library_hash, load_library, parse_knowledge_library, validate_library
from .reasoner import evaluate_concept
from .report import atomic_write, emit_report, report_filename
from .synth import generate_synthetic_cohort, load_guideline, load_scenario, write_cohort
from .timeutil import format_timestamp

logger = logging.getLogger("fuzzycrit")

EXIT_OK = 0
EXIT_IO = 1
EXIT_INVALID = 2


@dataclass(frozen=True)
class RunConfig:
    acceptance_threshold: float = 0.5
    compliance_threshold: float = 0.8
    wrong_path_margin: float = 0.1
    output_format: str = "json"
    patients: tuple = ()
    debug: bool = False
    jobs: int = 1
    seed: int = 0
    role_thresholds: dict = field(default_factory=dict)

    def engine_config(self):
        return EngineConfig(
            acceptance_threshold=self.acceptance_threshold,
            compliance_threshold=self.compliance_threshold,
            wrong_path_margin=self.wrong_path_margin,
            role_thresholds=dict(self.role_thresholds),
            debug=self.debug,
        )


def _unit_float(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0.0 <= v <= 1.0:
        raise argparse.ArgumentTypeError(f"must lie in [0, 1]: {text}")
    return v


def _role_threshold(text):
    role, sep, value = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected ROLE=VALUE, got {text!r}")
    return role.strip(), _unit_float(value)


def build_parser():
    p = argparse.ArgumentParser(prog="fuzzycrit", description="Retrospective guideline-compliance critique.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="count", default=0, help="more log output on stderr")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="critique patient records against a guideline library")
    a.add_argument("--knowledge", required=True, type=Path)
    a.add_argument("--data", required=True, type=Path)
    a.add_argument("--mapping", type=Path, help="mapping CSV (default: concept ids map to themselves)")
    a.add_argument("--demographics", type=Path)
    a.add_argument("--out", required=True, type=Path)
    a.add_argument("--format", choices=("json", "text"), default="json")
    a.add_argument("--threshold", type=_unit_float, default=0.5, help="condition acceptance threshold")
    a.add_argument("--role-threshold", type=_role_threshold, action="append", default=[],
                   metavar="ROLE=X", help="per-role override (entry, abort, complete, suspend, restart)")
    a.add_argument("--compliance-threshold", type=_unit_float, default=0.8)
    a.add_argument("--wrong-path-margin", type=_unit_float, default=0.1)
    a.add_argument("--patient", action="append", default=[], help="only analyse this patient (repeatable)")
    a.add_argument("--jobs", type=int, default=1)
    a.add_argument("--debug", action="store_true", help="add lifecycle events and all explanations")

    v = sub.add_parser("validate", help="check a knowledge file and list findings")
    v.add_argument("--knowledge", required=True, type=Path)

    b = sub.add_parser("abstract", help="dump scored intervals of one abstract concept as CSV")
    b.add_argument("--knowledge", required=True, type=Path)
    b.add_argument("--data", required=True, type=Path)
    b.add_argument("--concept", required=True)
    b.add_argument("--mapping", type=Path)
    b.add_argument("--out", type=Path, help="CSV file (default: stdout)")

    s = sub.add_parser("synth", help="generate a synthetic cohort with planted deviations")
    s.add_argument("--guideline", type=Path, help="guideline JSON (default: built-in diabetes fixture)")
    s.add_argument("--scenario", required=True, type=Path)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True, type=Path)
    return p


def _load_inputs(args, lib):
    mapping = load_mapping_table(args.mapping) if args.mapping else identity_mapping(lib)
    demographics = load_demographics(args.demographics) if getattr(args, "demographics", None) else None
    records, ingest = ingest_patient_records(args.data, mapping, lib, demographics)
    logger.info(
        "ingested %d rows: %d items, %d skipped, %d unmapped",
        ingest.rows_in, ingest.items_out, ingest.skipped, ingest.unmapped,
    )
    return records


def _analyze_one(job):
    record, lib, config, fmt, digest = job
    return record.patient_id, emit_report(analyze_patient(record, lib, config, content_hash=digest), fmt)


def run_analysis(args):
    cfg = RunConfig(
        acceptance_threshold=args.threshold,
        compliance_threshold=args.compliance_threshold,
        wrong_path_margin=args.wrong_path_margin,
        output_format=args.format,
        patients=tuple(args.patient),
        debug=args.debug,
        jobs=max(1, args.jobs),
        role_thresholds=dict(args.role_threshold),
    )
    engine_cfg = cfg.engine_config()
    lib = load_library(args.knowledge)
    records = _load_inputs(args, lib)
    if cfg.patients:
        wanted = set(cfg.patients)
        records = [r for r in records if r.patient_id in wanted]
    digest = library_hash(lib)
    jobs = [(r, lib, engine_cfg, cfg.output_format, digest) for r in records]
    if cfg.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            docs = list(pool.map(_analyze_one, jobs))
    else:
        docs = [_analyze_one(j) for j in jobs]
    # everything is rendered before the first file is written
    args.out.mkdir(parents=True, exist_ok=True)
    for pid, text in sorted(docs):
        atomic_write(args.out / report_filename(pid, cfg.output_format), text)
    print(f"wrote {len(docs)} report(s) to {args.out}")
    return EXIT_OK


def run_validate(args):
    text = args.knowledge.read_text(encoding="utf-8")
    lib = parse_knowledge_library(text, strict=False)
    report = validate_library(lib)
    for f in report:
        print(f, file=sys.stderr)
    print(f"{args.knowledge}: {len(report.errors)} error(s), {len(report.warnings)} warning(s)")
    return EXIT_OK if report.ok else EXIT_INVALID


def run_abstract(args):
    lib = load_library(args.knowledge)
    concept = lib.concept(args.concept)
    records = _load_inputs(args, lib)
    out = open(args.out, "w", newline="", encoding="utf-8") if args.out else sys.stdout
    try:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(("patient_id", "concept_id", "start", "end", "membership"))
        for r in records:
            for si in evaluate_concept(concept, r, lib):
                w.writerow((r.patient_id, concept.id, format_timestamp(si.start), format_timestamp(si.end),
                            repr(round(si.membership, 12))))
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def run_synth(args):
    lib = load_guideline(args.guideline)
    spec = load_scenario(args.scenario)
    cohort = generate_synthetic_cohort(spec, args.seed, lib)
    write_cohort(cohort, args.out)
    print(f"wrote {len(cohort.rows)} rows and {len(cohort.manifest)} planted deviation(s) to {args.out}")
    return EXIT_OK


_COMMANDS = {"analyze": run_analysis, "validate": run_validate, "abstract": run_abstract, "synth": run_synth}


def main(argv=None):
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return _COMMANDS[args.command](args)
    except (FuzzycritError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
