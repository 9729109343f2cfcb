"""Type definitions for anomalylens."""

from dataclasses import dataclass, field, fields
from enum import Enum, IntEnum
from functools import cached_property
from typing import Any, Dict, FrozenSet, List, Optional, Tuple


class OpKind(str, Enum):
    READ = "R"
    WRITE = "W"
    COMMIT = "C"
    ABORT = "A"


class Status(str, Enum):
    """Transaction status at the end of a schedule."""

    COMMITTED = "committed"
    ABORTED = "aborted"
    UNDONE = "undone"


class Shape(str, Enum):
    """Operation shape of a conflict: (earlier op, later op)."""

    RW = "RW"
    WR = "WR"
    WW = "WW"


class PopKind(str, Enum):
    """The nine partial-order-pair kinds. Declaration order is the tie-break order."""

    WCR = "WCR"
    WCW = "WCW"
    RCW = "RCW"
    WW = "WW"
    WR = "WR"
    RW = "RW"
    WRA = "WRA"
    WWC = "WWC"
    WWA = "WWA"

    @property
    def rank(self) -> int:
        return _KIND_RANK[self]

    @property
    def is_self_cycle(self) -> bool:
        return self in SELF_CYCLE_KINDS

    @property
    def is_committed(self) -> bool:
        return self in COMMITTED_KINDS

    @property
    def base(self) -> Shape:
        """Op shape the kind was derived from."""
        return _KIND_BASE[self]


_KIND_RANK = {kind: i for i, kind in enumerate(PopKind)}
_KIND_BASE = {
    PopKind.WCR: Shape.WR,
    PopKind.WCW: Shape.WW,
    PopKind.RCW: Shape.RW,
    PopKind.WW: Shape.WW,
    PopKind.WR: Shape.WR,
    PopKind.RW: Shape.RW,
    PopKind.WRA: Shape.WR,
    PopKind.WWC: Shape.WW,
    PopKind.WWA: Shape.WW,
}

SELF_CYCLE_KINDS: FrozenSet[PopKind] = frozenset({PopKind.WRA, PopKind.WWC, PopKind.WWA})
COMMITTED_KINDS: FrozenSet[PopKind] = frozenset({PopKind.WCR, PopKind.WCW, PopKind.RCW})
WRITE_WRITE_KINDS: FrozenSet[PopKind] = frozenset({PopKind.WW, PopKind.WWC, PopKind.WWA})
WRITE_READ_KINDS: FrozenSet[PopKind] = frozenset({PopKind.WR, PopKind.WRA})


class Category(IntEnum):
    """The seven status interleavings of a conflict (p in ta, q in tb, p before q).

    1: ta commits before q          2: ta aborts before q
    3: ta commits after q, first    4: ta aborts after q, first
    5: tb commits first             6: tb aborts first
    7: neither terminates
    """

    COMMIT_BEFORE = 1
    ABORT_BEFORE = 2
    COMMIT_AFTER = 3
    ABORT_AFTER = 4
    PEER_COMMIT = 5
    PEER_ABORT = 6
    UNDONE = 7

    @property
    def inert(self) -> bool:
        return self in (Category.ABORT_BEFORE, Category.PEER_ABORT)


class AnomalyClass(str, Enum):
    WAT = "WAT"
    RAT = "RAT"
    IAT = "IAT"


class Subclass(str, Enum):
    SDA = "SDA"
    DDA = "DDA"
    MDA = "MDA"


@dataclass(frozen=True)
class Op:
    """One read, write, commit or abort event."""

    kind: OpKind
    txn: int
    var: Optional[str] = None
    version: Optional[int] = None
    pos: int = 0

    @property
    def is_data(self) -> bool:
        return self.kind in (OpKind.READ, OpKind.WRITE)

    @property
    def is_terminal(self) -> bool:
        return not self.is_data

    def text(self) -> str:
        """Render in schedule notation, e.g. ``W1[x2]`` or ``C1``."""
        if self.is_data:
            return f"{self.kind.value}{self.txn}[{self.var}{self.version}]"
        return f"{self.kind.value}{self.txn}"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind.value,
            "txn": self.txn,
            "var": self.var,
            "version": self.version,
            "pos": self.pos,
        }


@dataclass(frozen=True)
class Schedule:
    """An ordered sequence of ops. Derived indices are computed on first use."""

    ops: Tuple[Op, ...] = ()

    def __len__(self) -> int:
        return len(self.ops)

    def __iter__(self):
        return iter(self.ops)

    @cached_property
    def txns(self) -> Tuple[int, ...]:
        return tuple(sorted({op.txn for op in self.ops}))

    @cached_property
    def vars(self) -> Tuple[str, ...]:
        return tuple(sorted({op.var for op in self.ops if op.var is not None}))

    @cached_property
    def terminals(self) -> Dict[int, Op]:
        return {op.txn: op for op in self.ops if op.is_terminal}

    @cached_property
    def status(self) -> Dict[int, Status]:
        out: Dict[int, Status] = {}
        for txn in self.txns:
            term = self.terminals.get(txn)
            if term is None:
                out[txn] = Status.UNDONE
            elif term.kind == OpKind.COMMIT:
                out[txn] = Status.COMMITTED
            else:
                out[txn] = Status.ABORTED
        return out

    def ops_of(self, txn: int) -> List[Op]:
        return [op for op in self.ops if op.txn == txn]

    def text(self) -> str:
        return "".join(op.text() for op in self.ops)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "text": self.text(),
            "txns": list(self.txns),
            "vars": list(self.vars),
            "status": {str(t): s.value for t, s in self.status.items()},
        }


@dataclass(frozen=True)
class Conflict:
    """Two ops of different transactions on one variable, at least one a write."""

    first: Op
    second: Op

    @property
    def var(self) -> str:
        return self.first.var  # type: ignore[return-value]

    @property
    def shape(self) -> Shape:
        return Shape(self.first.kind.value + self.second.kind.value)

    def text(self) -> str:
        p, q = self.first, self.second
        return f"{p.kind.value}{p.txn}{q.kind.value}{q.txn}[{self.var}]"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "first": self.first.to_dict(),
            "second": self.second.to_dict(),
            "var": self.var,
            "shape": self.shape.value,
        }


@dataclass(frozen=True)
class StatusedConflict:
    conflict: Conflict
    category: Category
    status_pos: Tuple[int, ...] = ()

    @property
    def inert(self) -> bool:
        return self.category.inert

    def to_dict(self) -> Dict[str, Any]:
        data = self.conflict.to_dict()
        data.update(
            {
                "category": int(self.category),
                "inert": self.inert,
                "status_pos": list(self.status_pos),
            }
        )
        return data


@dataclass(frozen=True)
class PopEdge:
    """A partial order pair: src owns the earlier op, dst the later one.

    anchors holds the positions of the two defining ops, followed by the
    status op for committed and self-cycle kinds.
    """

    src: int
    dst: int
    var: str
    kind: PopKind
    anchors: Tuple[int, ...]
    implicit: bool = False

    @property
    def key(self) -> Tuple[int, int, str, PopKind]:
        return (self.src, self.dst, self.var, self.kind)

    @property
    def completion(self) -> int:
        return max(self.anchors)

    @property
    def label(self) -> str:
        return f"{self.kind.value}[{self.var}]"

    def reversed(self) -> "PopEdge":
        """Implicit back edge closing a self-cycle kind."""
        return PopEdge(self.dst, self.src, self.var, self.kind, self.anchors, implicit=True)

    def sort_key(self) -> Tuple[Any, ...]:
        return (self.src, self.dst, self.var, self.anchors, self.kind.rank, self.implicit)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "from": self.src,
            "to": self.dst,
            "var": self.var,
            "kind": self.kind.value,
            "anchors": list(self.anchors),
            "implicit": self.implicit,
        }


@dataclass(frozen=True)
class Cycle:
    """A directed simple cycle over distinct transactions."""

    edges: Tuple[PopEdge, ...]

    @property
    def txns(self) -> Tuple[int, ...]:
        return tuple(e.src for e in self.edges)

    @property
    def vars(self) -> Tuple[str, ...]:
        return tuple(e.var for e in self.edges)

    @property
    def kinds(self) -> Tuple[PopKind, ...]:
        return tuple(e.kind for e in self.edges)

    @property
    def n_vars(self) -> int:
        return len(set(self.vars))

    @property
    def n_txns(self) -> int:
        return len(set(self.txns))

    @property
    def completion(self) -> int:
        return max(e.completion for e in self.edges)

    @property
    def is_self_cycle(self) -> bool:
        return any(e.implicit for e in self.edges)

    def sort_key(self) -> Tuple[Any, ...]:
        """Fewest edges, earliest completion, then txns, vars and kinds."""
        return (
            len(self.edges),
            self.completion,
            self.txns,
            self.vars,
            tuple(k.rank for k in self.kinds),
            tuple(e.anchors for e in self.edges),
            tuple(e.implicit for e in self.edges),
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "edges": [e.to_dict() for e in self.edges],
            "nD": self.n_vars,
            "nT": self.n_txns,
        }


@dataclass(frozen=True)
class AnomalyReport:
    cycle: Cycle
    cls: AnomalyClass
    subclass: Subclass
    name: str
    formal_expression: str

    def to_dict(self) -> Dict[str, Any]:
        return {
            "class": self.cls.value,
            "subclass": self.subclass.value,
            "name": self.name,
            "formalExpression": self.formal_expression,
            "cycle": self.cycle.to_dict(),
        }


@dataclass(frozen=True)
class CatalogEntry:
    """One two-edge combination of the anomaly catalogs."""

    number: Optional[int]
    name: Optional[str]
    cls: Optional[AnomalyClass]
    forward: str
    back: str
    kinds: Optional[Tuple[PopKind, PopKind]]
    classified_as: Optional[str]
    provenance: str
    note: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "number": self.number,
            "name": self.name,
            "class": self.cls.value if self.cls else None,
            "forward": self.forward,
            "back": self.back,
            "kinds": [k.value for k in self.kinds] if self.kinds else None,
            "classified_as": self.classified_as,
            "provenance": self.provenance,
            "note": self.note,
        }


@dataclass(frozen=True)
class EnumSpec:
    """Bounds for the brute-force schedule generator."""

    n_txns: int
    n_vars: int
    max_data_ops: int
    include_terminals: bool = True
    lax_versions: bool = False
    allow_aborts: bool = True

    def to_dict(self) -> Dict[str, Any]:
        return {
            "nTxns": self.n_txns,
            "nVars": self.n_vars,
            "maxDataOpsPerTxn": self.max_data_ops,
            "includeTerminals": self.include_terminals,
            "laxVersions": self.lax_versions,
            "allowAborts": self.allow_aborts,
        }


class Strategy(str, Enum):
    BLOCK_WW = "block-ww"
    READ_COMMITTED = "read-committed"
    SNAPSHOT = "snapshot"
    FULL_CYCLE_CHECK = "full-cycle-check"


@dataclass(frozen=True)
class Workload:
    n_txns: int = 4
    n_vars: int = 3
    min_ops: int = 1
    max_ops: int = 4
    write_ratio: float = 0.5
    abort_ratio: float = 0.1
    zipf_s: float = 1.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "nTxns": self.n_txns,
            "nVars": self.n_vars,
            "minOps": self.min_ops,
            "maxOps": self.max_ops,
            "writeRatio": self.write_ratio,
            "abortRatio": self.abort_ratio,
            "zipfS": self.zipf_s,
        }


@dataclass(frozen=True)
class SchedulerConfig:
    strategies: FrozenSet[Strategy] = frozenset()
    seed: int = 0
    workload: Workload = field(default_factory=Workload)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "strategies": sorted(s.value for s in self.strategies),
            "seed": self.seed,
            "workload": self.workload.to_dict(),
        }


@dataclass(frozen=True)
class Decision:
    """One scheduler decision about an incoming op."""

    step: int
    op: str
    outcome: str
    reason: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        return {"step": self.step, "op": self.op, "outcome": self.outcome, "reason": self.reason}


@dataclass
class RunResult:
    config: SchedulerConfig
    history: Schedule
    committed: Schedule
    decisions: List[Decision]
    counters: Dict[str, int]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "config": self.config.to_dict(),
            "history": self.history.text(),
            "committed": self.committed.text(),
            "decisions": [d.to_dict() for d in self.decisions],
            "counters": dict(self.counters),
        }


@dataclass
class Settings:
    """User settings persisted in config.json."""

    ceiling: int = 10_000_000
    cycle_limit: int = 10_000
    strict_rcw: bool = False
    lax_versions: bool = False
    system: str = "simplified"
    level: str = "NA"
    write_ratio: float = 0.5
    abort_ratio: float = 0.1
    zipf_s: float = 1.0

    def to_dict(self) -> Dict[str, Any]:
        """Convert settings to dictionary for JSON serialization."""
        return {
            "ceiling": self.ceiling,
            "cycle_limit": self.cycle_limit,
            "strict_rcw": self.strict_rcw,
            "lax_versions": self.lax_versions,
            "system": self.system,
            "level": self.level,
            "write_ratio": self.write_ratio,
            "abort_ratio": self.abort_ratio,
            "zipf_s": self.zipf_s,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Settings":
        """Create settings from dictionary, falling back to defaults for missing keys.

        Raises ValueError when a value's JSON type does not match the field.
        """
        defaults = cls()
        values: Dict[str, Any] = {}
        for f in fields(cls):
            default = getattr(defaults, f.name)
            value = data.get(f.name, default)
            if isinstance(default, bool):
                ok = isinstance(value, bool)
                expected = "true or false"
            elif isinstance(default, int):
                ok = isinstance(value, int) and not isinstance(value, bool)
                expected = "an integer"
            elif isinstance(default, float):
                ok = isinstance(value, (int, float)) and not isinstance(value, bool)
                value = float(value) if ok else value
                expected = "a number"
            else:
                ok = isinstance(value, str)
                expected = "a string"
            if not ok:
                raise ValueError(f"{f.name} must be {expected}, got {value!r}")
            values[f.name] = value
        return cls(**values)
