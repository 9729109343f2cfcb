"""Isolation level systems and schedule checks against them."""

from dataclasses import dataclass
from typing import Dict, List, Tuple, Union

from .classify import FORMS_BY_NAME, STEP_NAMES, analyze
from .errors import AnomalyLensError
from .graph import DEFAULT_CYCLE_LIMIT
from .types import AnomalyClass, AnomalyReport, Schedule, Subclass

SIMPLIFIED = "simplified"
FINE = "fine"

SYSTEM_LEVELS: Dict[str, Tuple[str, ...]] = {
    SIMPLIFIED: ("NRW", "NA"),
    FINE: ("NW", "NRW", "NPA", "NA"),
}

P, N = True, False

_WAT_ROWS = (
    "Dirty Write",
    "Lost Update",
    "Lost Self Update",
    "Full-Write",
    "Full-Write Committed",
    "Read-Write Skew 1",
    "Read-Write Skew 2",
    "Double-Write Skew 1",
    "Double-Write Skew 2",
    "Double-Write Skew 2 Committed",
    "Full-Write Skew",
    "Full-Write Skew Committed",
    "Step WAT",
)
_RAT_ROWS = (
    "Dirty Read",
    "Non-repeatable Read",
    "Non-repeatable Read Committed",
    "Intermediate Read",
    "Read Skew",
    "Read Skew 2",
    "Write-Read Skew",
    "Write-Read Skew Committed",
    "Double-Write Skew 1 Committed",
    "Step RAT",
)
_IAT_ROWS = (
    "Lost Update Committed",
    "Read Skew Committed",
    "Read-Write Skew 1 Committed",
    "Write Skew",
    "Step IAT",
)


def _rows(values: Dict[str, Tuple[bool, ...]], names: Tuple[str, ...], cells: Tuple[bool, ...]):
    for name in names:
        values[name] = cells


_SIMPLIFIED_TABLE: Dict[str, Tuple[bool, ...]] = {}
_rows(_SIMPLIFIED_TABLE, _WAT_ROWS, (N, N))
_rows(_SIMPLIFIED_TABLE, _RAT_ROWS, (N, N))
_rows(_SIMPLIFIED_TABLE, _IAT_ROWS, (P, N))

_FINE_TABLE: Dict[str, Tuple[bool, ...]] = {}
_rows(_FINE_TABLE, _WAT_ROWS, (N, N, N, N))
_rows(_FINE_TABLE, _RAT_ROWS, (P, N, N, N))
_rows(_FINE_TABLE, ("Non-repeatable Read Committed", "Read Skew"), (P, P, N, N))
_rows(_FINE_TABLE, _IAT_ROWS, (P, P, P, N))

PERMIT_TABLES: Dict[str, Dict[str, Tuple[bool, ...]]] = {
    SIMPLIFIED: _SIMPLIFIED_TABLE,
    FINE: _FINE_TABLE,
}


@dataclass(frozen=True)
class LevelSystem:
    """One level of one system, e.g. ``LevelSystem("fine", "NRW")``."""

    system: str
    level: str

    def __post_init__(self):
        if self.system not in SYSTEM_LEVELS:
            raise AnomalyLensError(
                f"unknown isolation system {self.system!r} (use {SIMPLIFIED} or {FINE})"
            )
        if self.level not in SYSTEM_LEVELS[self.system]:
            allowed = ", ".join(SYSTEM_LEVELS[self.system])
            raise AnomalyLensError(
                f"level {self.level!r} is not part of the {self.system} system ({allowed})"
            )

    @property
    def index(self) -> int:
        return SYSTEM_LEVELS[self.system].index(self.level)

    @property
    def key(self) -> str:
        return f"{self.system}:{self.level}"

    def permits(self, name: str, cls: AnomalyClass, subclass: Subclass) -> bool:
        table = PERMIT_TABLES[self.system]
        row = table.get(name)
        if row is None:
            row = table[_fallback_row(name, cls, subclass)]
        return row[self.index]


def _fallback_row(name: str, cls: AnomalyClass, subclass: Subclass) -> str:
    """Row standing in for a name the table does not list.

    MDA falls back to its Step row. Other names take the first listed row
    of the same class and subclass.
    """
    if subclass == Subclass.MDA:
        return STEP_NAMES[cls]
    for row in PERMIT_TABLES[SIMPLIFIED]:
        form = FORMS_BY_NAME.get(row)
        if form is not None and (form.cls, form.subclass) == (cls, subclass):
            return row
    return STEP_NAMES[cls]


def level(system: str, name: str) -> LevelSystem:
    return LevelSystem(system, name)


def all_levels() -> List[LevelSystem]:
    """Every level of both systems, weakest first within a system."""
    return [LevelSystem(system, lvl) for system, lvls in SYSTEM_LEVELS.items() for lvl in lvls]


def permits(lvl: LevelSystem, report: AnomalyReport) -> bool:
    return lvl.permits(report.name, report.cls, report.subclass)


@dataclass(frozen=True)
class Allowed:
    level: LevelSystem

    @property
    def verdict(self) -> str:
        return "allowed"

    def to_dict(self) -> Dict[str, object]:
        return {"level": self.level.key, "verdict": self.verdict, "violations": []}


@dataclass(frozen=True)
class Violates:
    level: LevelSystem
    reports: Tuple[AnomalyReport, ...]

    @property
    def verdict(self) -> str:
        return "violates"

    def to_dict(self) -> Dict[str, object]:
        return {
            "level": self.level.key,
            "verdict": self.verdict,
            "violations": [r.to_dict() for r in self.reports],
        }


Verdict = Union[Allowed, Violates]


def verdict_for(lvl: LevelSystem, reports: List[AnomalyReport]) -> Verdict:
    denied = tuple(r for r in reports if not permits(lvl, r))
    return Violates(lvl, denied) if denied else Allowed(lvl)


def check_schedule(
    lvl: LevelSystem,
    s: Schedule,
    strict_rcw: bool = False,
    limit: int = DEFAULT_CYCLE_LIMIT,
) -> Verdict:
    """Classify every cycle of s and collect those the level does not permit."""
    return verdict_for(lvl, analyze(s, strict_rcw=strict_rcw, limit=limit).reports())


def check_level_monotonicity() -> None:
    """Raise if a stricter level permits something a weaker level of its system forbids."""
    for system, levels in SYSTEM_LEVELS.items():
        for name, row in PERMIT_TABLES[system].items():
            if len(row) != len(levels):
                raise AnomalyLensError(f"{system} row {name!r} has {len(row)} cells")
            for weaker, stricter in zip(row, row[1:]):
                if stricter and not weaker:
                    raise AnomalyLensError(f"{system} levels are not monotone for {name!r}")
            if row[-1]:
                raise AnomalyLensError(f"{system} NA permits {name!r}")


check_level_monotonicity()
