"""Read and write knowledge-library JSON documents.

Document layout::

    {"concepts": [{"id", "kind", "unit"?, "value_domain"?,
                   "persistence": {"good_before_s", "good_after_s"}?,
                   "definition": node?}],
     "plans": [{"id", "name", "max_start_delay_s", "conditions": [...],
                "intentions": [...], "body": [...], "sub_plans": [...]}]}

A node is ``{"op": "cmp", "cmp": {...}}``, ``{"op": "and"|"or"|"not",
"children": [...]}`` or ``{"op": "ref", "concept": id}``; condition
expressions and intention targets may also be a bare concept-id string.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import jsonschema

from ..errors import (
    DanglingReferenceError,
    DuplicateIdError,
    LibraryValidationError,
    SchemaError,
    UnitMismatchError,
)
from .index import build_role_index
from .model import (
    CONDITION_ROLES,
    DEFAULT_MAX_START_DELAY,
    OPERATORS,
    STEP_KINDS,
    And,
    Cmp,
    Concept,
    Condition,
    GuidelinePlan,
    Intention,
    KnowledgeLibrary,
    Not,
    Or,
    Persistence,
    PlanStep,
    Ref,
    normalize_operator,
)
from .paths import flatten_guideline_paths
from .validation import validate_library

_DURATION = {"type": "integer", "minimum": 0}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["concepts", "plans"],
    "additionalProperties": False,
    "properties": {
        "version": {"type": "string"},
        "concepts": {"type": "array", "items": {"$ref": "#/$defs/concept"}},
        "plans": {"type": "array", "items": {"$ref": "#/$defs/plan"}},
    },
    "$defs": {
        "concept": {
            "type": "object",
            "required": ["id", "kind"],
            "additionalProperties": False,
            "properties": {
                "id": {"type": "string", "minLength": 1},
                "kind": {"enum": ["primitive", "event", "abstract"]},
                "unit": {"type": ["string", "null"]},
                "value_domain": {"enum": ["numeric", "categorical"]},
                "persistence": {
                    "type": "object",
                    "required": ["good_before_s", "good_after_s"],
                    "additionalProperties": False,
                    "properties": {"good_before_s": _DURATION, "good_after_s": _DURATION},
                },
                "definition": {"$ref": "#/$defs/node"},
            },
        },
        "node": {
            "type": "object",
            "required": ["op"],
            "additionalProperties": False,
            "properties": {
                "op": {"enum": ["and", "or", "not", "cmp", "ref"]},
                "children": {"type": "array", "items": {"$ref": "#/$defs/node"}},
                "cmp": {"$ref": "#/$defs/cmp"},
                "concept": {"type": "string"},
            },
            "allOf": [
                {"if": {"properties": {"op": {"const": "cmp"}}}, "then": {"required": ["cmp"]}},
                {"if": {"properties": {"op": {"const": "ref"}}}, "then": {"required": ["concept"]}},
                {
                    "if": {"properties": {"op": {"enum": ["and", "or"]}}},
                    "then": {"required": ["children"]},
                },
                {
                    "if": {"properties": {"op": {"const": "not"}}},
                    "then": {
                        "required": ["children"],
                        "properties": {"children": {"minItems": 1, "maxItems": 1}},
                    },
                },
            ],
        },
        "cmp": {
            "type": "object",
            "required": ["param", "operator", "threshold"],
            "additionalProperties": False,
            "properties": {
                "param": {"type": "string"},
                "operator": {"enum": list(OPERATORS) + ["≥", "≤", "=="]},
                "threshold": {"type": ["number", "string"]},
                "deviation": {"type": "number", "minimum": 0},
                "unit": {"type": ["string", "null"]},
            },
        },
        "expr": {"oneOf": [{"type": "string"}, {"$ref": "#/$defs/node"}]},
        "plan": {
            "type": "object",
            "required": ["id"],
            "additionalProperties": False,
            "properties": {
                "id": {"type": "string", "minLength": 1},
                "name": {"type": "string"},
                "max_start_delay_s": _DURATION,
                "conditions": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "required": ["role", "expr"],
                        "additionalProperties": False,
                        "properties": {
                            "role": {"enum": list(CONDITION_ROLES)},
                            "expr": {"$ref": "#/$defs/expr"},
                        },
                    },
                },
                "intentions": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "required": ["kind", "mode", "target"],
                        "additionalProperties": False,
                        "properties": {
                            "kind": {"enum": ["process", "outcome"]},
                            "mode": {"enum": ["achieve", "maintain", "avoid"]},
                            "target": {"$ref": "#/$defs/expr"},
                            "monitoring_delay_s": _DURATION,
                            "max_gap_s": {"type": "integer", "minimum": 1},
                        },
                    },
                },
                "body": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "required": ["id", "action_concept"],
                        "additionalProperties": False,
                        "properties": {
                            "id": {"type": "string", "minLength": 1},
                            "action_concept": {"type": "string"},
                            "code": {"type": "string"},
                            "step_kind": {"enum": list(STEP_KINDS)},
                            "earliest_offset_s": _DURATION,
                            "latest_offset_s": _DURATION,
                            "period_s": {"type": ["integer", "null"], "minimum": 1},
                            "timing_deviation_s": _DURATION,
                            "max_dose": {"type": ["number", "null"]},
                            "min_repeat_gap_s": _DURATION,
                        },
                    },
                },
                "sub_plans": {"type": "array", "items": {"$ref": "#/$defs/plan"}},
            },
        },
    },
}

_VALIDATOR = jsonschema.Draft202012Validator(SCHEMA)


def _location(path):
    out = ""
    for part in path:
        out += f"[{part}]" if isinstance(part, int) else (f".{part}" if out else str(part))
    return out or "<root>"


# -- document -> objects ----------------------------------------------------


def _node(d):
    op = d["op"]
    if op == "cmp":
        c = d["cmp"]
        return Cmp(
            param=c["param"],
            operator=normalize_operator(c["operator"]),
            threshold=c["threshold"],
            deviation=float(c.get("deviation", 0.0)),
            unit=c.get("unit"),
        )
    if op == "ref":
        return Ref(d["concept"])
    kids = tuple(_node(ch) for ch in d.get("children", ()))
    if op == "and":
        return And(kids)
    if op == "or":
        return Or(kids)
    return Not(kids[0])


def _expr(x):
    return Ref(x) if isinstance(x, str) else _node(x)


def _plan(d):
    return GuidelinePlan(
        id=d["id"],
        name=d.get("name", ""),
        max_start_delay=d.get("max_start_delay_s", DEFAULT_MAX_START_DELAY),
        conditions=tuple(Condition(c["role"], _expr(c["expr"])) for c in d.get("conditions", ())),
        intentions=tuple(
            Intention(
                kind=i["kind"],
                mode=i["mode"],
                target=_expr(i["target"]),
                monitoring_delay=i.get("monitoring_delay_s", 0),
                max_gap=i.get("max_gap_s", 180 * 86400),
            )
            for i in d.get("intentions", ())
        ),
        body=tuple(
            PlanStep(
                id=s["id"],
                action_concept=s["action_concept"],
                code=s.get("code", ""),
                step_kind=s.get("step_kind", "once"),
                earliest_offset=s.get("earliest_offset_s", 0),
                latest_offset=s.get("latest_offset_s", 0),
                period=s.get("period_s"),
                timing_deviation=s.get("timing_deviation_s", 0),
                max_dose=s.get("max_dose"),
                min_repeat_gap=s.get("min_repeat_gap_s", 0),
            )
            for s in d.get("body", ())
        ),
        sub_plans=tuple(_plan(p) for p in d.get("sub_plans", ())),
    )


def build_library(concepts, plans, version=""):
    """Assemble a library from objects: flatten paths and index roles (no validation)."""
    if not isinstance(concepts, dict):
        concepts = {c.id: c for c in concepts}
    plans = tuple(plans)
    path_plans = tuple(pp for p in plans for pp in flatten_guideline_paths(p))
    lib = KnowledgeLibrary(
        concepts=dict(concepts),
        plans=plans,
        path_plans=path_plans,
        role_index=build_role_index(concepts, path_plans),
        version=version,
    )
    if not version:
        object.__setattr__(lib, "version", library_hash(lib))
    return lib


_ERROR_CLASSES = {
    "dangling-reference": DanglingReferenceError,
    "duplicate-id": DuplicateIdError,
    "unit-mismatch": UnitMismatchError,
}


def parse_document(doc, *, strict=True):
    """Build a :class:`KnowledgeLibrary` from an already-decoded document."""
    errors = sorted(_VALIDATOR.iter_errors(doc), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        e = errors[0]
        raise SchemaError(e.message, _location(e.absolute_path))
    concepts = {}
    for i, c in enumerate(doc["concepts"]):
        if c["id"] in concepts:
            raise DuplicateIdError(f"duplicate concept id {c['id']!r}", f"concepts[{i}]")
        p = c.get("persistence")
        concepts[c["id"]] = Concept(
            id=c["id"],
            kind=c["kind"],
            unit=c.get("unit"),
            value_domain=c.get("value_domain", "numeric"),
            persistence=Persistence(p["good_before_s"], p["good_after_s"]) if p else None,
            definition=_node(c["definition"]) if "definition" in c else None,
        )
    plans = tuple(_plan(p) for p in doc["plans"])
    lib = build_library(concepts, plans, doc.get("version", ""))
    if strict:
        report = validate_library(lib)
        errs = report.errors
        if errs:
            cls = _ERROR_CLASSES.get(errs[0].code)
            if cls is not None:
                raise cls(errs[0].message, errs[0].location)
            raise LibraryValidationError(errs)
    return lib


def parse_knowledge_library(document, *, strict=True):
    """Parse a JSON knowledge document given as text (or bytes)."""
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as exc:
        raise SchemaError(exc.msg, f"{exc.lineno}:{exc.colno}") from None
    return parse_document(doc, strict=strict)


def load_library(path, *, strict=True):
    return parse_knowledge_library(Path(path).read_text(encoding="utf-8"), strict=strict)


# -- objects -> document ----------------------------------------------------


def node_to_dict(node):
    if isinstance(node, Cmp):
        cmp = {
            "param": node.param,
            "operator": node.operator,
            "threshold": node.threshold,
            "deviation": node.deviation,
        }
        if node.unit is not None:
            cmp["unit"] = node.unit
        return {"op": "cmp", "cmp": cmp}
    if isinstance(node, Ref):
        return {"op": "ref", "concept": node.concept}
    if isinstance(node, Not):
        return {"op": "not", "children": [node_to_dict(node.child)]}
    op = "and" if isinstance(node, And) else "or"
    return {"op": op, "children": [node_to_dict(c) for c in node.children]}


def _expr_to_doc(node):
    return node.concept if isinstance(node, Ref) else node_to_dict(node)


def _plan_to_dict(p):
    return {
        "id": p.id,
        "name": p.name,
        "max_start_delay_s": p.max_start_delay,
        "conditions": [{"role": c.role, "expr": _expr_to_doc(c.expr)} for c in p.conditions],
        "intentions": [
            {
                "kind": i.kind,
                "mode": i.mode,
                "target": _expr_to_doc(i.target),
                "monitoring_delay_s": i.monitoring_delay,
                "max_gap_s": i.max_gap,
            }
            for i in p.intentions
        ],
        "body": [
            {
                "id": s.id,
                "action_concept": s.action_concept,
                "code": s.code,
                "step_kind": s.step_kind,
                "earliest_offset_s": s.earliest_offset,
                "latest_offset_s": s.latest_offset,
                "period_s": s.period,
                "timing_deviation_s": s.timing_deviation,
                "max_dose": s.max_dose,
                "min_repeat_gap_s": s.min_repeat_gap,
            }
            for s in p.body
        ],
        "sub_plans": [_plan_to_dict(sp) for sp in p.sub_plans],
    }


def library_to_document(lib, with_version=True):
    concepts = []
    for c in lib.concepts.values():
        d = {"id": c.id, "kind": c.kind, "unit": c.unit, "value_domain": c.value_domain}
        if c.persistence is not None:
            d["persistence"] = {
                "good_before_s": c.persistence.good_before,
                "good_after_s": c.persistence.good_after,
            }
        if c.definition is not None:
            d["definition"] = node_to_dict(c.definition)
        concepts.append(d)
    doc = {"concepts": concepts, "plans": [_plan_to_dict(p) for p in lib.plans]}
    if with_version and lib.version and lib.version != _content_hash(doc):
        doc["version"] = lib.version
    return doc


def serialize_library(lib):
    """Canonical JSON text; parsing it yields a structurally equal library."""
    return json.dumps(library_to_document(lib), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def _content_hash(doc):
    canon = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:16]


def library_hash(lib):
    """Short content hash of the library; the version label does not enter it."""
    return _content_hash(library_to_document(lib, with_version=False))
