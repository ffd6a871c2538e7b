"""Condition propagation: flatten plan hierarchies into single-path plans."""

from __future__ import annotations

from .model import ENTRY_ROLES, STOP_ROLES, PathPlan, conjoin, disjoin


def merge_conditions(parent, child):
    """Fold a parent's per-role conditions into a child's.

    Entry roles are AND-ed (every ancestor entry condition must hold), stop
    roles are OR-ed (any ancestor stop condition stops the sub-plan).
    Both arguments map role -> expression.
    """
    merged = {}
    for role in ENTRY_ROLES:
        e = conjoin(parent.get(role), child.get(role))
        if e is not None:
            merged[role] = e
    for role in STOP_ROLES:
        e = disjoin(parent.get(role), child.get(role))
        if e is not None:
            merged[role] = e
    return merged


def _own_conditions(plan):
    return {c.role: c.expr for c in plan.conditions}


def flatten_guideline_paths(plan, _inherited=None, _intentions=(), _ids=()):
    """Return one :class:`PathPlan` per leaf of ``plan``'s hierarchy.

    The path id joins the plan ids along the path with ``/``. Intentions
    accumulate from root to leaf; the body is the leaf's own body.
    """
    conditions = merge_conditions(_inherited or {}, _own_conditions(plan))
    intentions = tuple(_intentions) + tuple(plan.intentions)
    ids = tuple(_ids) + (plan.id,)
    if not plan.sub_plans:
        return [
            PathPlan(
                id="/".join(ids),
                source_ids=ids,
                conditions=conditions,
                intentions=intentions,
                body=tuple(plan.body),
                max_start_delay=plan.max_start_delay,
                name=plan.name,
            )
        ]
    out = []
    for sub in plan.sub_plans:
        out.extend(flatten_guideline_paths(sub, conditions, intentions, ids))
    return out
