"""Conflicts, status categories and partial order pairs."""

from typing import List, Optional, Tuple

from .types import (
    Category,
    Conflict,
    Op,
    OpKind,
    PopEdge,
    PopKind,
    Schedule,
    Shape,
    StatusedConflict,
)

_COMMITTED_BY_SHAPE = {Shape.WR: PopKind.WCR, Shape.WW: PopKind.WCW, Shape.RW: PopKind.RCW}
_BASE_BY_SHAPE = {Shape.WR: PopKind.WR, Shape.WW: PopKind.WW, Shape.RW: PopKind.RW}


def conf(s: Schedule) -> List[Conflict]:
    """All conflicting pairs (p, q), p before q, ordered by (p.pos, q.pos). Versions are ignored."""
    out: List[Conflict] = []
    data = [op for op in s.ops if op.is_data]
    for i, p in enumerate(data):
        for q in data[i + 1 :]:
            if p.txn == q.txn or p.var != q.var:
                continue
            if p.kind == OpKind.WRITE or q.kind == OpKind.WRITE:
                out.append(Conflict(p, q))
    return out


def categorize(p: Op, q: Op, term_a: Optional[Op], term_b: Optional[Op]) -> Category:
    """Status category of conflict (p, q) given both transactions' terminal ops."""
    a_pos = term_a.pos if term_a is not None else None
    b_pos = term_b.pos if term_b is not None else None
    if a_pos is not None and a_pos < q.pos:
        return Category.COMMIT_BEFORE if term_a.kind == OpKind.COMMIT else Category.ABORT_BEFORE
    if a_pos is not None and (b_pos is None or a_pos < b_pos):
        return Category.COMMIT_AFTER if term_a.kind == OpKind.COMMIT else Category.ABORT_AFTER
    if b_pos is not None:
        return Category.PEER_COMMIT if term_b.kind == OpKind.COMMIT else Category.PEER_ABORT
    return Category.UNDONE


def conf_ac(s: Schedule) -> List[StatusedConflict]:
    """Every conflict annotated with its status category. Inert ones are kept and flagged."""
    out: List[StatusedConflict] = []
    terms = s.terminals
    for c in conf(s):
        term_a = terms.get(c.first.txn)
        term_b = terms.get(c.second.txn)
        category = categorize(c.first, c.second, term_a, term_b)
        status_pos = tuple(sorted(t.pos for t in (term_a, term_b) if t is not None))
        out.append(StatusedConflict(c, category, status_pos))
    return out


def derive_kind(
    p: Op, q: Op, term_a: Optional[Op], term_b: Optional[Op]
) -> Optional[Tuple[PopKind, Tuple[int, ...]]]:
    """Kind and anchors of the POP for conflict (p, q), or None if it is inert.

    term_b never changes the kind; it only decides whether the pair is inert.
    """
    category = categorize(p, q, term_a, term_b)
    if category.inert:
        return None
    shape = Shape(p.kind.value + q.kind.value)
    if category == Category.COMMIT_BEFORE:
        return _COMMITTED_BY_SHAPE[shape], (p.pos, q.pos, term_a.pos)
    kind = _BASE_BY_SHAPE[shape]
    if term_a is not None and term_a.pos > q.pos:
        aborted = term_a.kind == OpKind.ABORT
        if shape == Shape.WR and aborted:
            return PopKind.WRA, (p.pos, q.pos, term_a.pos)
        if shape == Shape.WW:
            return (PopKind.WWA if aborted else PopKind.WWC), (p.pos, q.pos, term_a.pos)
    return kind, (p.pos, q.pos)


def pops(s: Schedule, strict_rcw: bool = False) -> List[PopEdge]:
    """Partial order pairs of s, one per non-inert conflict.

    With strict_rcw an RCW pair also needs a write somewhere in its source transaction.
    """
    terms = s.terminals
    writers = {op.txn for op in s.ops if op.kind == OpKind.WRITE}
    out: List[PopEdge] = []
    for c in conf(s):
        p, q = c.first, c.second
        derived = derive_kind(p, q, terms.get(p.txn), terms.get(q.txn))
        if derived is None:
            continue
        kind, anchors = derived
        if strict_rcw and kind == PopKind.RCW and p.txn not in writers:
            continue
        out.append(PopEdge(p.txn, q.txn, c.var, kind, anchors))
    out.sort(key=PopEdge.sort_key)
    return out


def pop_text(edge: PopEdge, s: Schedule) -> str:
    """Render a POP in compact notation, e.g. ``W1R2A1[x]`` or ``W2C2R3[y]``."""
    p, q = s.ops[edge.anchors[0]], s.ops[edge.anchors[1]]
    head = f"{p.kind.value}{p.txn}"
    tail = f"{q.kind.value}{q.txn}"
    if edge.kind.is_committed:
        return f"{head}C{p.txn}{tail}[{edge.var}]"
    if edge.kind.is_self_cycle:
        status = s.ops[edge.anchors[2]]
        return f"{head}{tail}{status.kind.value}{p.txn}[{edge.var}]"
    return f"{head}{tail}[{edge.var}]"
