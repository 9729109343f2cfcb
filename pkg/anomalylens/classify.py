"""Anomaly classification: class, subclass and name for POP cycles."""

import re
from dataclasses import dataclass
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple, Union

from .errors import InvalidOrderingError, UnmatchedCombinationError
from .graph import (
    DEFAULT_CYCLE_LIMIT,
    CycleList,
    PopGraph,
    build_pg,
    canonical_cycle,
    find_cycles,
)
from .pops import pops
from .types import (
    WRITE_READ_KINDS,
    WRITE_WRITE_KINDS,
    AnomalyClass,
    AnomalyReport,
    Cycle,
    Op,
    OpKind,
    PopEdge,
    PopKind,
    Schedule,
    Subclass,
)

WAT, RAT, IAT = AnomalyClass.WAT, AnomalyClass.RAT, AnomalyClass.IAT
SDA, DDA, MDA = Subclass.SDA, Subclass.DDA, Subclass.MDA


class Form(NamedTuple):
    number: Optional[int]
    name: str
    cls: AnomalyClass
    subclass: Subclass
    # Op sequence of the cycle's formal expression, t_i acting first.
    expression: str = ""


FORMS: Tuple[Form, ...] = (
    Form(1, "Dirty Write", WAT, SDA, "W_iW_jA_i"),
    Form(2, "Dirty Read", RAT, SDA, "W_iR_jA_i"),
    Form(3, "Lost Self Update Committed", WAT, SDA, "W_iW_jC_jR_i"),
    Form(4, "Full-Write Committed", WAT, SDA, "W_iW_jC_jW_i"),
    Form(5, "Non-repeatable Read Committed", IAT, SDA, "R_iW_jC_jR_i"),
    Form(6, "Lost Update Committed", IAT, SDA, "R_iW_jC_jW_i"),
    Form(7, "Full-Write", WAT, SDA, "W_iW_jW_i"),
    Form(8, "Lost Update", WAT, SDA, "R_iW_jW_i"),
    Form(9, "Lost Self Update", WAT, SDA, "W_iW_jR_i"),
    Form(10, "Non-repeatable Read", RAT, SDA, "R_iW_jR_i"),
    Form(11, "Intermediate Read", RAT, SDA, "W_iR_jW_i"),
    Form(12, "Double-Write Skew 2 Committed", WAT, DDA, "W_iW_jW_jC_jR_i"),
    Form(13, "Full-Write Skew Committed", WAT, DDA, "W_iW_jW_jC_jW_i"),
    Form(14, "Write-Read Skew Committed", RAT, DDA, "W_iR_jW_jC_jR_i"),
    Form(15, "Double-Write Skew 1 Committed", RAT, DDA, "W_iR_jW_jC_jW_i"),
    Form(16, "Read Skew Committed", IAT, DDA, "R_iW_jW_jC_jR_i"),
    Form(17, "Read-Write Skew 1 Committed", IAT, DDA, "R_iW_jW_jC_jW_i"),
    Form(18, "Full-Write Skew", WAT, DDA, "W_iW_jW_jW_i"),
    Form(19, "Double-Write Skew 1", WAT, DDA, "W_iR_jW_jW_i"),
    Form(20, "Read-Write Skew 1", WAT, DDA, "R_iW_jW_jW_i"),
    Form(21, "Double-Write Skew 2", WAT, DDA, "W_iW_jW_jR_i"),
    Form(22, "Write-Read Skew", RAT, DDA, "W_iR_jW_jR_i"),
    Form(23, "Read Skew", RAT, DDA, "R_iW_jW_jR_i"),
    Form(24, "Read-Write Skew 2", WAT, DDA, "W_iW_jR_jW_i"),
    Form(25, "Read Skew 2", RAT, DDA, "W_iR_jR_jW_i"),
    Form(26, "Write Skew", IAT, DDA, "R_iW_jR_jW_i"),
    Form(None, "Step WAT", WAT, MDA),
    Form(None, "Step RAT", RAT, MDA),
    Form(None, "Step IAT", IAT, MDA),
)

FORMS_BY_NAME: Dict[str, Form] = {f.name: f for f in FORMS}
FORMS_BY_NUMBER: Dict[int, Form] = {f.number: f for f in FORMS if f.number is not None}
STEP_NAMES: Dict[AnomalyClass, str] = {WAT: "Step WAT", RAT: "Step RAT", IAT: "Step IAT"}

# (role-i edge shape, role-j edge key) -> name. The role-j key is the committed
# kind when the back edge is one, otherwise its base shape.
SDA_NAMES: Dict[Tuple[str, str], str] = {
    ("WW", "WW"): "Full-Write",
    ("WW", "WR"): "Lost Self Update",
    ("WW", "RW"): "Full-Write",
    ("WW", "WCW"): "Full-Write Committed",
    ("WW", "WCR"): "Lost Self Update Committed",
    ("WW", "RCW"): "Full-Write Committed",
    ("WR", "WW"): "Full-Write",
    ("WR", "WR"): "Non-repeatable Read",
    ("WR", "RW"): "Intermediate Read",
    ("WR", "WCW"): "Intermediate Read",
    ("WR", "WCR"): "Non-repeatable Read",
    ("RW", "WW"): "Lost Update",
    ("RW", "WR"): "Non-repeatable Read",
    ("RW", "RW"): "Lost Update Committed",
    ("RW", "WCW"): "Lost Update Committed",
    ("RW", "WCR"): "Non-repeatable Read Committed",
    ("RW", "RCW"): "Lost Update Committed",
}

# Single-variable pairs with no name: t_j reads t_i's version and commits
# before t_i writes again, so the cycle carries no anomaly.
BENIGN_SDA_PAIRS = frozenset({("WR", "RCW")})

DDA_NAMES: Dict[Tuple[str, str], str] = {
    ("WW", "WW"): "Full-Write Skew",
    ("WW", "WR"): "Double-Write Skew 2",
    ("WW", "RW"): "Read-Write Skew 2",
    ("WW", "WCW"): "Full-Write Skew Committed",
    ("WW", "WCR"): "Double-Write Skew 2 Committed",
    ("WW", "RCW"): "Read-Write Skew 2",
    ("WR", "WW"): "Double-Write Skew 1",
    ("WR", "WR"): "Write-Read Skew",
    ("WR", "RW"): "Read Skew 2",
    ("WR", "WCW"): "Double-Write Skew 1 Committed",
    ("WR", "WCR"): "Write-Read Skew Committed",
    ("WR", "RCW"): "Read Skew 2",
    ("RW", "WW"): "Read-Write Skew 1",
    ("RW", "WR"): "Read Skew",
    ("RW", "RW"): "Write Skew",
    ("RW", "WCW"): "Read-Write Skew 1 Committed",
    ("RW", "WCR"): "Read Skew Committed",
    ("RW", "RCW"): "Write Skew",
}


def class_of(kinds: Sequence[PopKind]) -> AnomalyClass:
    """WAT if any uncommitted double write, else RAT if any uncommitted write-read, else IAT."""
    if any(k in WRITE_WRITE_KINDS for k in kinds):
        return WAT
    if any(k in WRITE_READ_KINDS for k in kinds):
        return RAT
    return IAT


def subclass_of(c: Cycle) -> Subclass:
    footprint = (c.n_vars, c.n_txns)
    if footprint == (1, 2):
        return SDA
    if footprint == (2, 2):
        return DDA
    return MDA


def kind_pair_key(first: PopKind, second: PopKind) -> Tuple[str, str]:
    second_key = second.value if second.is_committed else second.base.value
    return first.base.value, second_key


def pair_name(subclass: Subclass, first: PopKind, second: PopKind) -> Optional[str]:
    """Name of a two-transaction cycle whose role-i edge has kind first."""
    table = SDA_NAMES if subclass == SDA else DDA_NAMES
    return table.get(kind_pair_key(first, second))


def two_edge_key(a: PopEdge, b: PopEdge) -> Tuple[str, str]:
    """Lookup key for a two-transaction cycle's name tables.

    The role-i edge is the one that is not a committed kind; with neither
    committed it is the edge whose first op comes first.
    """
    if a.kind.is_committed and b.kind.is_committed:
        raise UnmatchedCombinationError(
            f"two committed edges {a.label} and {b.label} cannot form a cycle"
        )
    if a.kind.is_committed:
        first, second = b, a
    elif b.kind.is_committed:
        first, second = a, b
    else:
        first, second = (a, b) if a.anchors[0] <= b.anchors[0] else (b, a)
    return kind_pair_key(first.kind, second.kind)


def name_of(c: Cycle, cls: AnomalyClass, subclass: Subclass) -> str:
    if subclass == MDA:
        return STEP_NAMES[cls]
    if c.is_self_cycle:
        kind = c.edges[0].kind
        return "Dirty Read" if kind == PopKind.WRA else "Dirty Write"
    if len(c.edges) != 2:
        raise UnmatchedCombinationError(f"expected two edges, got {len(c.edges)}")
    key = two_edge_key(*c.edges)
    name = (SDA_NAMES if subclass == SDA else DDA_NAMES).get(key)
    if name is None:
        raise UnmatchedCombinationError(
            f"no {subclass.value} name for role-i {key[0]} with back edge {key[1]}"
        )
    return name


def is_benign(c: Cycle) -> bool:
    """Two-edge single-variable cycle whose kind pair names no anomaly."""
    if len(c.edges) != 2 or c.is_self_cycle or subclass_of(c) != SDA:
        return False
    return two_edge_key(*c.edges) in BENIGN_SDA_PAIRS


def formal_expression(c: Cycle, s: Optional[Schedule] = None) -> str:
    """Defining ops of the cycle in schedule order, e.g. ``R1[x0]…W2[x1]…W1[x2]``.

    Without the schedule the edge labels are listed instead.
    """
    if s is None:
        return " - ".join(e.label for e in c.edges if not e.implicit)
    positions = sorted({pos for e in c.edges for pos in e.anchors})
    return "…".join(s.ops[pos].text() for pos in positions)


def classify_cycle(c: Cycle, s: Optional[Schedule] = None) -> AnomalyReport:
    cls = class_of(c.kinds)
    subclass = subclass_of(c)
    name = name_of(c, cls, subclass)
    form = FORMS_BY_NAME[name]
    if form.cls != cls:
        raise UnmatchedCombinationError(
            f"{name} is {form.cls.value} but the cycle kinds give {cls.value}"
        )
    return AnomalyReport(c, cls, subclass, name, formal_expression(c, s))


@dataclass(frozen=True)
class CleanVerdict:
    """No anomalous cycle. Benign two-edge cycles may remain in the POP set."""

    pops: Tuple[PopEdge, ...]

    def to_dict(self) -> Dict[str, object]:
        return {"clean": True, "pops": [e.to_dict() for e in self.pops]}


@dataclass(frozen=True)
class Analysis:
    """Everything the pipeline derives from one schedule."""

    schedule: Schedule
    pops: Tuple[PopEdge, ...]
    graph: PopGraph
    cycles: CycleList
    anomaly: Optional[AnomalyReport]

    @property
    def anomalous(self) -> bool:
        return self.anomaly is not None

    def reports(self) -> List[AnomalyReport]:
        """One report per cycle, in cycle order."""
        return [classify_cycle(c, self.schedule) for c in self.cycles]


def analyze(
    s: Schedule, strict_rcw: bool = False, limit: int = DEFAULT_CYCLE_LIMIT
) -> Analysis:
    edges = tuple(pops(s, strict_rcw=strict_rcw))
    g = build_pg(edges, s.txns)
    found = find_cycles(g, limit=limit)
    cycles = CycleList(c for c in found if not is_benign(c))
    cycles.truncated = found.truncated
    canonical = canonical_cycle(cycles)
    anomaly = classify_cycle(canonical, s) if canonical is not None else None
    return Analysis(s, edges, g, cycles, anomaly)


def classify_schedule(
    s: Schedule, strict_rcw: bool = False
) -> Union[AnomalyReport, CleanVerdict]:
    """Report for the canonical cycle of s, or a clean verdict with the POP set."""
    result = analyze(s, strict_rcw=strict_rcw)
    if result.anomaly is None:
        return CleanVerdict(result.pops)
    return result.anomaly


# Write-write status truth table: (first terminal, second terminal) -> anomalous.
WW_STATUS: Dict[Tuple[str, str], bool] = {
    ("Ci", "Cj"): True,
    ("Ci", "Aj"): True,
    ("Ai", "Cj"): True,
    ("Ai", "Aj"): True,
    ("Cj", "Ci"): True,
    ("Cj", "Ai"): False,
    ("Aj", "Ci"): False,
    ("Aj", "Ai"): False,
}

_ORDER_TOKEN = re.compile(r"([CA])([ij])")

OrderSpec = Union[str, Tuple[str, str]]


def _normalize_order(order: OrderSpec) -> Tuple[str, str]:
    text = " ".join(order) if isinstance(order, tuple) else str(order)
    cleaned = re.sub(r"\bthen\b|[\s_,;>-]+", "", text)
    tokens = _ORDER_TOKEN.findall(cleaned)
    if "".join(k + t for k, t in tokens) != cleaned or len(tokens) != 2:
        raise InvalidOrderingError(f"invalid terminal ordering {order!r}")
    first, second = (k + t for k, t in tokens)
    if first[1] == second[1]:
        raise InvalidOrderingError(f"ordering {order!r} terminates the same transaction twice")
    return first, second


def ww_status_outcome(order: OrderSpec) -> bool:
    """Whether W_i..W_j followed by the given terminal ordering is anomalous.

    Accepts ``"C_i then C_j"``, ``"CiCj"`` or ``("C_i", "C_j")``.
    """
    return WW_STATUS[_normalize_order(order)]


def ww_status_schedule(order: OrderSpec) -> Schedule:
    """Concrete schedule ``W1[x1]W2[x2]`` plus the ordering, with i = 1 and j = 2."""
    ops = [
        Op(OpKind.WRITE, 1, "x", 1, 0),
        Op(OpKind.WRITE, 2, "x", 2, 1),
    ]
    for pos, token in enumerate(_normalize_order(order), start=2):
        ops.append(Op(OpKind(token[0]), 1 if token[1] == "i" else 2, pos=pos))
    return Schedule(tuple(ops))
