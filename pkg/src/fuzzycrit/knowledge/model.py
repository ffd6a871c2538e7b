"""Immutable domain types for concepts, constraint trees and guideline plans."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Union

from ..errors import UnknownConceptError, UnknownPlanError
from ..timeutil import DAY

PRIMITIVE = "primitive"
EVENT = "event"
ABSTRACT = "abstract"
CONCEPT_KINDS = (PRIMITIVE, EVENT, ABSTRACT)

NUMERIC = "numeric"
CATEGORICAL = "categorical"

# "!=" is not in the file schema's operator list for authors, but negating an
# "=" leaf has to produce something, so it is accepted everywhere.
OPERATORS = (">", ">=", "<", "<=", "=", "!=")
_OPERATOR_ALIASES = {"≥": ">=", "≤": "<=", "==": "=", "≠": "!="}

ENTRY_ROLES = ("filter", "setup", "restart")
STOP_ROLES = ("complete", "abort", "suspend")
CONDITION_ROLES = ENTRY_ROLES + STOP_ROLES

INTENTION_KINDS = ("process", "outcome")
INTENTION_MODES = ("achieve", "maintain", "avoid")

ONCE = "once"
PERIODIC = "periodic"
DRUG_ADMINISTRATION = "drug-administration"
DRUG_INCREASE = "drug-increase"
STEP_KINDS = (ONCE, PERIODIC, DRUG_ADMINISTRATION, DRUG_INCREASE)

DEFAULT_MAX_START_DELAY = 90 * DAY

# role kinds used by the role index, in their sort order
ENTRY_CONDITION = "entry-condition"
STOP_CONDITION = "stop-condition"
OUTCOME_INTENTION = "outcome-intention"
PROCESS_INTENTION = "process-intention"
BODY_STEP = "body-step"
ROLE_KINDS = (ENTRY_CONDITION, STOP_CONDITION, OUTCOME_INTENTION, PROCESS_INTENTION, BODY_STEP)


def normalize_operator(op):
    op = _OPERATOR_ALIASES.get(op, op)
    if op not in OPERATORS:
        raise ValueError(f"unknown relation operator {op!r}")
    return op


# -- constraint trees -------------------------------------------------------


@dataclass(frozen=True)
class Cmp:
    """Leaf comparison ``param <operator> threshold`` with a fuzzy ramp width."""

    param: str
    operator: str
    threshold: Union[float, str]
    deviation: float = 0.0
    unit: Optional[str] = None

    def __str__(self):
        tail = f" ±{self.deviation:g}" if self.deviation else ""
        return f"{self.param} {self.operator} {self.threshold}{tail}"


FuzzyComparison = Cmp


@dataclass(frozen=True)
class And:
    children: tuple

    def __str__(self):
        return "(" + " AND ".join(map(str, self.children)) + ")"


@dataclass(frozen=True)
class Or:
    children: tuple

    def __str__(self):
        return "(" + " OR ".join(map(str, self.children)) + ")"


@dataclass(frozen=True)
class Not:
    child: object

    def __str__(self):
        return f"NOT {self.child}"


@dataclass(frozen=True)
class Ref:
    """Reference to an abstract concept; expanded to its definition on evaluation."""

    concept: str

    def __str__(self):
        return self.concept


Node = Union[Cmp, And, Or, Not, Ref]


def conjoin(a, b):
    """AND two expressions, flattening nested conjunctions; ``None`` is neutral."""
    if a is None:
        return b
    if b is None:
        return a
    parts = []
    for x in (a, b):
        parts.extend(x.children if isinstance(x, And) else (x,))
    return And(tuple(parts))


def disjoin(a, b):
    if a is None:
        return b
    if b is None:
        return a
    parts = []
    for x in (a, b):
        parts.extend(x.children if isinstance(x, Or) else (x,))
    return Or(tuple(parts))


def iter_nodes(node):
    stack = [node]
    while stack:
        n = stack.pop()
        yield n
        if isinstance(n, (And, Or)):
            stack.extend(reversed(n.children))
        elif isinstance(n, Not):
            stack.append(n.child)


def referenced_ids(node):
    """Concept ids appearing syntactically in ``node`` (parameters and refs)."""
    out = set()
    for n in iter_nodes(node):
        if isinstance(n, Cmp):
            out.add(n.param)
        elif isinstance(n, Ref):
            out.add(n.concept)
    return out


# -- concepts ---------------------------------------------------------------


@dataclass(frozen=True)
class Persistence:
    good_before: int = 0
    good_after: int = 0


PersistenceSpec = Persistence


@dataclass(frozen=True)
class Concept:
    id: str
    kind: str
    unit: Optional[str] = None
    value_domain: str = NUMERIC
    persistence: Optional[Persistence] = None
    definition: Optional[Node] = None


# -- plans ------------------------------------------------------------------


@dataclass(frozen=True)
class Condition:
    role: str
    expr: Node


@dataclass(frozen=True)
class Intention:
    kind: str
    mode: str
    target: Node
    monitoring_delay: int = 0
    max_gap: int = 180 * DAY


@dataclass(frozen=True)
class PlanStep:
    id: str
    action_concept: str
    code: str = ""
    step_kind: str = ONCE
    earliest_offset: int = 0
    latest_offset: int = 0
    period: Optional[int] = None
    timing_deviation: int = 0
    max_dose: Optional[float] = None
    min_repeat_gap: int = 0


PlanStepSpec = PlanStep


@dataclass(frozen=True)
class GuidelinePlan:
    id: str
    name: str = ""
    conditions: tuple = ()
    intentions: tuple = ()
    body: tuple = ()
    sub_plans: tuple = ()
    max_start_delay: int = DEFAULT_MAX_START_DELAY

    def condition(self, role):
        for c in self.conditions:
            if c.role == role:
                return c.expr
        return None


@dataclass(frozen=True)
class PathPlan:
    """One root-to-leaf path of a plan hierarchy with propagated conditions."""

    id: str
    source_ids: tuple
    conditions: Mapping[str, Node]
    intentions: tuple
    body: tuple
    max_start_delay: int
    name: str = ""

    @property
    def parent_id(self):
        """Id of the leaf's parent plan, used to find sibling paths."""
        return self.source_ids[-2] if len(self.source_ids) > 1 else None

    def condition(self, role):
        return self.conditions.get(role)

    @property
    def entry_expression(self):
        # setup folds into the entry conjunction next to filter
        return conjoin(self.conditions.get("filter"), self.conditions.get("setup"))

    def step(self, step_id):
        for s in self.body:
            if s.id == step_id:
                return s
        raise KeyError(step_id)


@dataclass(frozen=True, order=True)
class KnowledgeRole:
    plan_id: str
    kind: str
    step_id: Optional[str] = None

    def sort_key(self):
        return (self.plan_id, ROLE_KINDS.index(self.kind), self.step_id or "")


@dataclass(frozen=True, eq=False)
class KnowledgeLibrary:
    concepts: Mapping[str, Concept]
    plans: tuple
    path_plans: tuple = ()
    role_index: Mapping[str, tuple] = field(default_factory=dict)
    version: str = ""

    def concept(self, concept_id):
        try:
            return self.concepts[concept_id]
        except KeyError:
            raise UnknownConceptError(f"unknown concept {concept_id!r}") from None

    def path_plan(self, plan_id):
        for p in self.path_plans:
            if p.id == plan_id:
                return p
        raise UnknownPlanError(f"unknown path plan {plan_id!r}")

    def siblings(self, plan_id):
        me = self.path_plan(plan_id)
        if me.parent_id is None:
            return ()
        return tuple(
            p for p in self.path_plans if p.id != me.id and p.source_ids[:-1] == me.source_ids[:-1]
        )

    def expand(self, node):
        """Replace every ``Ref`` by the referenced abstract concept's definition."""
        if isinstance(node, Ref):
            c = self.concept(node.concept)
            if c.definition is None:
                raise UnknownConceptError(f"concept {node.concept!r} has no definition")
            return self.expand(c.definition)
        if isinstance(node, And):
            return And(tuple(self.expand(c) for c in node.children))
        if isinstance(node, Or):
            return Or(tuple(self.expand(c) for c in node.children))
        if isinstance(node, Not):
            return Not(self.expand(node.child))
        return node

    def mentioned_ids(self, node):
        """Ids in ``node`` including the parameters behind referenced concepts."""
        ids = set(referenced_ids(node))
        for cid in list(ids):
            c = self.concepts.get(cid)
            if c is not None and c.definition is not None:
                ids |= referenced_ids(c.definition)
        return ids
