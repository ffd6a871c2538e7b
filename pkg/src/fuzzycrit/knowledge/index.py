"""Reverse index from concept ids to the knowledge roles that mention them."""

from __future__ import annotations

from ..errors import UnknownConceptError
from .model import (
    BODY_STEP,
    ENTRY_CONDITION,
    ENTRY_ROLES,
    OUTCOME_INTENTION,
    PROCESS_INTENTION,
    STOP_CONDITION,
    STOP_ROLES,
    KnowledgeRole,
    referenced_ids,
)


def build_role_index(concepts, path_plans):
    index = {cid: set() for cid in concepts}

    def add(ids, role):
        for cid in ids:
            index.setdefault(cid, set()).add(role)

    def mentioned(node):
        ids = set()
        stack = [node]
        while stack:
            n = stack.pop()
            for cid in referenced_ids(n):
                if cid not in ids:
                    ids.add(cid)
                    c = concepts.get(cid)
                    if c is not None and c.definition is not None:
                        stack.append(c.definition)
        return ids

    for p in path_plans:
        for role in ENTRY_ROLES:
            if role in p.conditions:
                add(mentioned(p.conditions[role]), KnowledgeRole(p.id, ENTRY_CONDITION))
        for role in STOP_ROLES:
            if role in p.conditions:
                add(mentioned(p.conditions[role]), KnowledgeRole(p.id, STOP_CONDITION))
        for it in p.intentions:
            kind = OUTCOME_INTENTION if it.kind == "outcome" else PROCESS_INTENTION
            add(mentioned(it.target), KnowledgeRole(p.id, kind))
        for step in p.body:
            add([step.action_concept], KnowledgeRole(p.id, BODY_STEP, step.id))
    return {cid: tuple(sorted(roles, key=KnowledgeRole.sort_key)) for cid, roles in index.items()}


def roles_for_concept(lib, concept_id):
    """All knowledge roles mentioning ``concept_id``, ordered by (plan id, role kind, step)."""
    if concept_id not in lib.concepts:
        raise UnknownConceptError(f"unknown concept {concept_id!r}")
    return list(lib.role_index.get(concept_id, ()))
