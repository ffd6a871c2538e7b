"""Fuzzy temporal reasoner.

Turns raw time-stamped items into scored intervals for a constraint tree:
extrapolate each item by its parameter's persistence, let newer items win
over older overlapping ones, merge equal-valued neighbours, cut the window
into partitions where every parameter has at most one value, then score each
partition with ramp-shaped comparisons and Zadeh min/max. Negation never
computes ``1 - x``; it flips relation operators and pushes through AND/OR
by De Morgan.

Intervals are half-open ``[start, end)`` over integer epoch seconds.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from typing import Mapping, Optional, Union

from .errors import UnknownConceptError
from .knowledge.model import ABSTRACT, And, Cmp, Not, Or, Ref

SCORE_TOL = 1e-9

_INVERSE = {">": "<=", ">=": "<", "<": ">=", "<=": ">", "=": "!=", "!=": "="}


@dataclass(frozen=True)
class ValuedInterval:
    param: str
    value: Union[float, str]
    start: int
    end: int
    # (measurement time, source row); larger wins on overlap
    rank: tuple = (0, 0)


@dataclass(frozen=True)
class Partition:
    start: int
    end: int
    values: Mapping[str, Union[float, str]]


@dataclass(frozen=True)
class ScoredInterval:
    start: int
    end: int
    membership: float
    concept_id: str = ""


# -- step 1: extrapolation and merging -------------------------------------


def extrapolate_intervals(points, persistence):
    """One interval per item: points grow by persistence, interval items keep their span."""
    out = []
    for it in points:
        if it.stop is not None and it.stop > it.start:
            start, end = it.start, it.stop
        else:
            start, end = it.start - persistence.good_before, it.start + persistence.good_after
        if end > start:
            out.append(ValuedInterval(it.concept_id, it.value, start, end, (it.start, it.source_row)))
    return out


def resolve_precedence(intervals):
    """Truncate each interval where the next-newer one starts (latest measurement wins)."""
    ordered = sorted(intervals, key=lambda iv: (iv.start, iv.rank))
    out = []
    for i, iv in enumerate(ordered):
        end = iv.end
        if i + 1 < len(ordered):
            end = min(end, ordered[i + 1].start)
        if end > iv.start:
            out.append(iv if end == iv.end else ValuedInterval(iv.param, iv.value, iv.start, end, iv.rank))
    return out


def same_value(a, b):
    if isinstance(a, str) or isinstance(b, str):
        return a == b
    return abs(a - b) <= SCORE_TOL


def merge_same_value(intervals):
    """Merge overlapping or abutting intervals that carry the same value."""
    out = []
    for iv in sorted(intervals, key=lambda x: (x.start, x.end)):
        for k in range(len(out) - 1, -1, -1):
            prev = out[k]
            if prev.end >= iv.start and same_value(prev.value, iv.value):
                if iv.end > prev.end:
                    out[k] = ValuedInterval(prev.param, prev.value, prev.start, iv.end, max(prev.rank, iv.rank))
                break
        else:
            out.append(iv)
    out.sort(key=lambda x: (x.start, x.end))
    return out


# -- step 2: partitioning ---------------------------------------------------


def analysis_window(intervals_by_param):
    spans = [iv for ivs in intervals_by_param.values() for iv in ivs]
    if not spans:
        return None
    return min(iv.start for iv in spans), max(iv.end for iv in spans)


def partition_timeline(intervals_by_param, window=None):
    """Cut ``window`` at every interval endpoint; each piece records the values present.

    Each parameter's intervals must already be disjoint. Without a window the
    span of all intervals is used.
    """
    if window is None:
        window = analysis_window(intervals_by_param)
        if window is None:
            return []
    lo, hi = window
    if hi <= lo:
        return []
    cuts = {lo, hi}
    tracks = {}
    for param, ivs in intervals_by_param.items():
        clipped = []
        for iv in sorted(ivs, key=lambda x: x.start):
            s, e = max(iv.start, lo), min(iv.end, hi)
            if e > s:
                clipped.append((s, e, iv.value))
                cuts.add(s)
                cuts.add(e)
        tracks[param] = clipped
    bounds = sorted(cuts)
    cursor = {p: 0 for p in tracks}
    out = []
    for s, e in zip(bounds, bounds[1:]):
        values = {}
        for p, ivs in tracks.items():
            k = cursor[p]
            while k < len(ivs) and ivs[k][1] <= s:
                k += 1
            cursor[p] = k
            if k < len(ivs) and ivs[k][0] <= s:
                values[p] = ivs[k][2]
        out.append(Partition(s, e, values))
    return out


# -- step 3: fuzzification --------------------------------------------------


def _clamp(x):
    return 0.0 if x <= 0.0 else 1.0 if x >= 1.0 else x


def fuzzify_comparison(value, cmp):
    """Membership of ``value`` in ``cmp``.

    ``>``/``>=`` ramp up linearly over ``[t - d, t]``; ``<``/``<=`` ramp
    down over ``[t, t + d]``; ``=`` is a triangle of half-width ``d``
    around ``t`` and ``!=`` its complement. ``d = 0`` gives a crisp 0/1.
    """
    op, t, d = cmp.operator, cmp.threshold, cmp.deviation
    if isinstance(value, str) or isinstance(t, str):
        if op == "=":
            return 1.0 if value == t else 0.0
        if op == "!=":
            return 0.0 if value == t else 1.0
        raise TypeError(f"{cmp.param}: operator {op!r} needs numeric values, got {value!r}")
    if value is None or isinstance(value, bool):
        raise TypeError(f"{cmp.param}: non-numeric value {value!r}")
    if d == 0:
        hit = {
            ">": value > t,
            ">=": value >= t,
            "<": value < t,
            "<=": value <= t,
            "=": value == t,
            "!=": value != t,
        }[op]
        return 1.0 if hit else 0.0
    if op in (">", ">="):
        return 1.0 if value >= t else _clamp((value - (t - d)) / d)
    if op in ("<", "<="):
        return 1.0 if value <= t else _clamp(((t + d) - value) / d)
    if op == "=":
        return _clamp(1.0 - abs(value - t) / d)
    if op == "!=":
        return _clamp(abs(value - t) / d)
    raise ValueError(f"unknown operator {op!r}")


def invert_operator(op):
    return _INVERSE[op]


# -- step 4: logical operators ----------------------------------------------


def _push(node, negated):
    if isinstance(node, Cmp):
        if not negated:
            return node
        return Cmp(node.param, _INVERSE[node.operator], node.threshold, node.deviation, node.unit)
    if isinstance(node, Not):
        return _push(node.child, not negated)
    if isinstance(node, And):
        kids = tuple(_push(c, negated) for c in node.children)
        return Or(kids) if negated else And(kids)
    if isinstance(node, Or):
        kids = tuple(_push(c, negated) for c in node.children)
        return And(kids) if negated else Or(kids)
    if isinstance(node, Ref):
        if negated:
            raise TypeError(f"expand concept reference {node.concept!r} before negating it")
        return node
    raise TypeError(f"not a constraint node: {node!r}")


def negate_node(node):
    """Eliminate every ``Not``: invert leaf operators and apply De Morgan.

    ``Not(x >= y)`` becomes ``x < y``, ``Not(Or(a, b))`` becomes
    ``And(Not a, Not b)`` and double negations cancel. The result holds no
    ``Not`` nodes.
    """
    return _push(node, False)


def evaluate_node(node, partition) -> Optional[float]:
    """Fuzzy value of ``node`` on a partition (or plain value mapping).

    Returns ``None`` when undefined: a leaf whose parameter has no value, an
    AND with any undefined operand, an OR with no defined operand.
    """
    values = partition.values if isinstance(partition, Partition) else partition
    if isinstance(node, Cmp):
        v = values.get(node.param)
        return None if v is None else fuzzify_comparison(v, node)
    if isinstance(node, And):
        out = 1.0
        for c in node.children:
            m = evaluate_node(c, values)
            if m is None:
                return None
            out = min(out, m)
        return out
    if isinstance(node, Or):
        best = None
        for c in node.children:
            m = evaluate_node(c, values)
            if m is not None and (best is None or m > best):
                best = m
        return best
    if isinstance(node, Not):
        return evaluate_node(negate_node(node), values)
    raise TypeError(f"cannot evaluate {node!r}; expand concept references first")


# -- pipeline ---------------------------------------------------------------


def coalesce(scored):
    """Join touching intervals whose memberships agree within tolerance."""
    out = []
    for si in scored:
        if out and out[-1].end == si.start and abs(out[-1].membership - si.membership) <= SCORE_TOL:
            last = out[-1]
            out[-1] = ScoredInterval(last.start, si.end, last.membership, last.concept_id)
        else:
            out.append(si)
    return out


def params_of(node):
    out = set()
    stack = [node]
    while stack:
        n = stack.pop()
        if isinstance(n, Cmp):
            out.add(n.param)
        elif isinstance(n, (And, Or)):
            stack.extend(n.children)
        elif isinstance(n, Not):
            stack.append(n.child)
    return out


def parameter_intervals(items_by_concept, params, lib):
    """Extrapolated, precedence-resolved, merged intervals per parameter."""
    out = {}
    for p in sorted(params):
        concept = lib.concepts.get(p)
        if concept is None or concept.kind == ABSTRACT or concept.persistence is None:
            raise UnknownConceptError(f"parameter {p!r} does not resolve to a raw concept")
        ivs = extrapolate_intervals(items_by_concept.get(p, ()), concept.persistence)
        out[p] = merge_same_value(resolve_precedence(ivs))
    return out


def evaluate_expression(node, items_by_concept, lib, window=None, concept_id=""):
    """Full pipeline for an arbitrary expression; returns coalesced scored intervals."""
    node = negate_node(lib.expand(node))
    by_param = parameter_intervals(items_by_concept, params_of(node), lib)
    parts = partition_timeline(by_param, window)
    scored = []
    for part in parts:
        m = evaluate_node(node, part.values)
        if m is not None:
            scored.append(ScoredInterval(part.start, part.end, m, concept_id))
    return coalesce(scored)


def evaluate_concept(concept, record, lib, window=None):
    """Scored intervals of an abstract concept over one patient record."""
    if isinstance(concept, str):
        concept = lib.concept(concept)
    if concept.kind != ABSTRACT or concept.definition is None:
        raise UnknownConceptError(f"{concept.id!r} is not an abstract concept")
    items = record.by_concept() if hasattr(record, "by_concept") else record
    return evaluate_expression(concept.definition, items, lib, window, concept.id)


def score_at(scored, t):
    """Membership of the interval containing ``t``, or ``None``."""
    starts = [s.start for s in scored]
    k = bisect.bisect_right(starts, t) - 1
    if k >= 0 and scored[k].start <= t < scored[k].end:
        return scored[k].membership
    return None
