"""Invariant checks over a knowledge library; findings are returned as data."""

from __future__ import annotations

from dataclasses import dataclass, field

from .model import (
    ABSTRACT,
    CATEGORICAL,
    CONCEPT_KINDS,
    CONDITION_ROLES,
    DRUG_INCREASE,
    EVENT,
    INTENTION_KINDS,
    INTENTION_MODES,
    OPERATORS,
    PERIODIC,
    PRIMITIVE,
    STEP_KINDS,
    And,
    Cmp,
    Not,
    Or,
    Ref,
)

ERROR = "error"
WARNING = "warning"


@dataclass(frozen=True)
class Finding:
    severity: str
    code: str
    location: str
    message: str

    def __str__(self):
        return f"{self.severity}: {self.location}: {self.message} [{self.code}]"


@dataclass
class ValidationReport:
    findings: list = field(default_factory=list)

    @property
    def errors(self):
        return [f for f in self.findings if f.severity == ERROR]

    @property
    def warnings(self):
        return [f for f in self.findings if f.severity == WARNING]

    @property
    def ok(self):
        return not self.errors

    def __bool__(self):
        return bool(self.findings)

    def __len__(self):
        return len(self.findings)

    def __iter__(self):
        return iter(self.findings)


class _Checker:
    def __init__(self, lib):
        self.lib = lib
        self.findings = []

    def error(self, code, loc, msg):
        self.findings.append(Finding(ERROR, code, loc, msg))

    def warn(self, code, loc, msg):
        self.findings.append(Finding(WARNING, code, loc, msg))

    # -- expressions --

    def node(self, node, loc, *, in_definition):
        if isinstance(node, Cmp):
            self.cmp(node, loc)
        elif isinstance(node, (And, Or)):
            label = "and" if isinstance(node, And) else "or"
            if len(node.children) < 2:
                self.error("arity", loc, f"{label} node needs at least 2 children, has {len(node.children)}")
            for i, ch in enumerate(node.children):
                self.node(ch, f"{loc}.children[{i}]", in_definition=in_definition)
        elif isinstance(node, Not):
            self.node(node.child, f"{loc}.children[0]", in_definition=in_definition)
        elif isinstance(node, Ref):
            target = self.lib.concepts.get(node.concept)
            if target is None:
                self.error("dangling-reference", loc, f"undefined concept {node.concept!r}")
            elif in_definition:
                self.error("nested-abstract", loc, f"definitions may not reference concept {node.concept!r}")
            elif target.kind != ABSTRACT:
                self.error("bad-reference", loc, f"{node.concept!r} is not an abstract concept")
        else:
            self.error("bad-node", loc, f"unrecognized node {node!r}")

    def cmp(self, c, loc):
        if c.operator not in OPERATORS:
            self.error("bad-operator", loc, f"unknown operator {c.operator!r}")
        if c.deviation < 0:
            self.error("negative-deviation", loc, "deviation interval must be >= 0")
        param = self.lib.concepts.get(c.param)
        if param is None:
            self.error("dangling-reference", loc, f"undefined concept {c.param!r}")
            return
        if param.kind == ABSTRACT:
            self.error("nested-abstract", loc, f"comparison on abstract concept {c.param!r}")
            return
        if c.unit is not None and param.unit is not None and c.unit != param.unit:
            self.error("unit-mismatch", loc, f"comparison unit {c.unit!r} != {c.param} unit {param.unit!r}")
        if param.value_domain == CATEGORICAL:
            if c.operator not in ("=", "!=") or c.deviation != 0:
                self.error("categorical-ramp", loc, f"categorical {c.param!r} allows only crisp = / !=")
        elif isinstance(c.threshold, str) or isinstance(c.threshold, bool):
            self.error("bad-threshold", loc, f"numeric parameter {c.param!r} needs a numeric threshold")

    # -- concepts --

    def concepts(self):
        for i, (cid, c) in enumerate(self.lib.concepts.items()):
            loc = f"concepts[{i}]"
            if c.id != cid:
                self.error("bad-id", loc, f"concept keyed {cid!r} has id {c.id!r}")
            if c.kind not in CONCEPT_KINDS:
                self.error("bad-kind", loc, f"unknown concept kind {c.kind!r}")
                continue
            if c.kind == ABSTRACT:
                if c.definition is None:
                    self.error("missing-definition", loc, f"abstract concept {cid!r} has no definition")
                else:
                    self.node(c.definition, f"{loc}.definition", in_definition=True)
                if c.persistence is not None:
                    self.error("abstract-persistence", loc, f"abstract concept {cid!r} has persistence")
            else:
                if c.definition is not None:
                    self.error("raw-definition", loc, f"{c.kind} concept {cid!r} has a definition")
                p = c.persistence
                if p is None:
                    self.error("missing-persistence", loc, f"{c.kind} concept {cid!r} has no persistence")
                elif p.good_before < 0 or p.good_after < 0 or p.good_before + p.good_after <= 0:
                    self.error("bad-persistence", f"{loc}.persistence",
                               "persistence needs good_before, good_after >= 0 with a positive sum")

    # -- plans --

    def plans(self):
        seen = {}
        for i, plan in enumerate(self.lib.plans):
            self.plan(plan, f"plans[{i}]", seen, ())

    def plan(self, plan, loc, seen, ancestors):
        if plan.id in ancestors:
            self.error("cyclic-plan", loc, f"plan {plan.id!r} contains itself")
            return
        if plan.id in seen:
            self.error("duplicate-id", loc, f"plan id {plan.id!r} already used at {seen[plan.id]}")
        else:
            seen[plan.id] = loc
        if plan.max_start_delay < 0:
            self.error("bad-duration", loc, "max_start_delay must be >= 0")
        roles = set()
        for j, cond in enumerate(plan.conditions):
            cloc = f"{loc}.conditions[{j}]"
            if cond.role not in CONDITION_ROLES:
                self.error("bad-role", cloc, f"unknown condition role {cond.role!r}")
            elif cond.role in roles:
                self.error("duplicate-role", cloc, f"second {cond.role!r} condition on plan {plan.id!r}")
            roles.add(cond.role)
            self.node(cond.expr, f"{cloc}.expr", in_definition=False)
        if not ancestors and not ({"filter", "setup"} & roles) and not self._sub_entries(plan):
            self.warn("no-entry", loc, f"plan {plan.id!r} has no entry condition and can never become applicable")
        for j, it in enumerate(plan.intentions):
            iloc = f"{loc}.intentions[{j}]"
            if it.kind not in INTENTION_KINDS:
                self.error("bad-intention-kind", iloc, f"unknown intention kind {it.kind!r}")
            if it.mode not in INTENTION_MODES:
                self.error("bad-intention-mode", iloc, f"unknown intention mode {it.mode!r}")
            if it.monitoring_delay < 0:
                self.error("bad-duration", iloc, "monitoring_delay must be >= 0")
            if it.max_gap <= 0:
                self.error("bad-duration", iloc, "max_gap must be > 0")
            self.node(it.target, f"{iloc}.target", in_definition=False)
        step_ids = set()
        for j, st in enumerate(plan.body):
            self.step(st, f"{loc}.body[{j}]", step_ids)
        if plan.body and plan.sub_plans:
            self.warn("inner-body", loc, f"body of non-leaf plan {plan.id!r} is not part of any path")
        for j, sub in enumerate(plan.sub_plans):
            self.plan(sub, f"{loc}.sub_plans[{j}]", seen, ancestors + (plan.id,))

    def _sub_entries(self, plan):
        return any(
            {"filter", "setup"} & {c.role for c in sub.conditions} or self._sub_entries(sub)
            for sub in plan.sub_plans
        )

    def step(self, st, loc, step_ids):
        if st.id in step_ids:
            self.error("duplicate-id", loc, f"step id {st.id!r} repeated in plan")
        step_ids.add(st.id)
        c = self.lib.concepts.get(st.action_concept)
        if c is None:
            self.error("dangling-reference", loc, f"undefined concept {st.action_concept!r}")
        elif c.kind not in (PRIMITIVE, EVENT):
            self.error("bad-action", loc, f"step action {st.action_concept!r} must be a primitive or event")
        if st.step_kind not in STEP_KINDS:
            self.error("bad-step-kind", loc, f"unknown step kind {st.step_kind!r}")
        if st.earliest_offset > st.latest_offset:
            self.error("bad-window", loc, "earliest_offset exceeds latest_offset")
        if st.timing_deviation < 0 or st.min_repeat_gap < 0:
            self.error("bad-duration", loc, "timing_deviation and min_repeat_gap must be >= 0")
        if st.step_kind == PERIODIC:
            if st.period is None or st.period <= 0:
                self.error("missing-period", loc, f"periodic step {st.id!r} needs a positive period")
            elif st.latest_offset - st.earliest_offset > st.period:
                self.warn("wide-window", loc, f"timing window of {st.id!r} is wider than its period")
            elif st.latest_offset + st.timing_deviation > st.period:
                self.warn("late-first-window", loc, f"first window of {st.id!r} ends after one period")
        elif st.period is not None:
            self.warn("unused-period", loc, f"period ignored on {st.step_kind} step {st.id!r}")
        if st.step_kind == DRUG_INCREASE and st.max_dose is None:
            self.warn("no-max-dose", loc, f"drug-increase step {st.id!r} has no max_dose")


def validate_library(lib):
    """Check every type invariant; returns a :class:`ValidationReport`."""
    chk = _Checker(lib)
    chk.concepts()
    chk.plans()
    return ValidationReport(chk.findings)
