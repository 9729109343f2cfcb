"""Schedule grammar: tokenizing, parsing with version inference, validation, formatting.

Grammar (whitespace-insensitive, case-sensitive)::

    schedule := ws (item ws)*
    item     := ("R"|"W") int "[" var int? "]" | ("C"|"A") int
    var      := [a-z] ([a-z0-9_]* [a-z_])?
    int      := [0-9]+

``#`` starts a comment that runs to end of line. A file may hold several
schedules separated by blank lines.
"""

import re
from typing import Dict, Iterable, List, Optional, Set

from .errors import ScheduleSyntaxError, ScheduleValidationError
from .types import Op, OpKind, Schedule

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>\#[^\n]*)
  | (?P<data>(?P<dkind>[RW])(?P<dtxn>[0-9]+)
        \[(?P<var>[a-z](?:[a-z0-9_]*[a-z_])?)(?P<version>[0-9]+)?\])
  | (?P<term>(?P<tkind>[CA])(?P<ttxn>[0-9]+))
    """,
    re.VERBOSE,
)
_VAR_NAME = re.compile(r"[a-z](?:[a-z0-9_]*[a-z_])?")

# Partial forms, used only to produce a helpful "expected ..." on syntax errors.
_PARTIAL = [
    (re.compile(r"[RW](?![0-9])"), "transaction id after op kind"),
    (re.compile(r"[RW][0-9]+(?!\[)"), "'[' after transaction id"),
    (re.compile(r"[RW][0-9]+\[(?![a-z])"), "variable name"),
    (re.compile(r"[RW][0-9]+\[[a-z][a-z0-9_]*"), "']'"),
    (re.compile(r"[CA](?![0-9])"), "transaction id after terminal"),
]

_BLANK_LINE = re.compile(r"\n[ \t\r\f\v]*\n")


def _syntax_error(text: str, pos: int) -> ScheduleSyntaxError:
    rest = text[pos:]
    token = rest.split(None, 1)[0] if rest.strip() else ""
    for pattern, expected in _PARTIAL:
        m = pattern.match(text, pos)
        if m:
            return ScheduleSyntaxError(pos, token or m.group(0), expected)
    return ScheduleSyntaxError(pos, token, "R, W, C or A")


def tokenize(text: str) -> List[Op]:
    """Split text into ops. Versions are None where the text omits them."""
    ops: List[Op] = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise _syntax_error(text, pos)
        if m.group("data"):
            # Variables never end in a digit, so trailing digits are the version.
            var = m.group("var")
            version = m.group("version")
            ops.append(
                Op(
                    kind=OpKind(m.group("dkind")),
                    txn=_txn_id(m.group("dtxn"), m.start("dtxn")),
                    var=var,
                    version=int(version) if version is not None else None,
                    pos=m.start(),
                )
            )
        elif m.group("term"):
            ops.append(
                Op(
                    kind=OpKind(m.group("tkind")),
                    txn=_txn_id(m.group("ttxn"), m.start("ttxn")),
                    pos=m.start(),
                )
            )
        pos = m.end()
    return ops


def _txn_id(digits: str, offset: int) -> int:
    txn = int(digits)
    if txn < 1:
        raise ScheduleSyntaxError(offset, digits, "transaction id >= 1")
    return txn


def build(raw_ops: Iterable[Op], lax_versions: bool = False) -> Schedule:
    """Infer missing versions, renumber positions and validate.

    Error positions refer to the op index in the schedule.
    """
    max_written: Dict[str, int] = {}
    written: Dict[str, Set[int]] = {}
    terminated: Set[int] = set()
    ops: List[Op] = []
    for index, raw in enumerate(raw_ops):
        if raw.txn in terminated:
            label = raw.text() if raw.is_terminal else f"{raw.kind.value}{raw.txn}[{raw.var}]"
            raise ScheduleValidationError(
                index, f"{label} appears after transaction {raw.txn} terminated"
            )
        if raw.is_terminal:
            terminated.add(raw.txn)
            ops.append(Op(kind=raw.kind, txn=raw.txn, pos=index))
            continue
        var = raw.var
        assert var is not None
        if not _VAR_NAME.fullmatch(var):
            raise ScheduleValidationError(
                index, f"variable {var!r} must start with a letter and not end in a digit"
            )
        if raw.kind == OpKind.WRITE:
            version = _check_write(index, var, raw.version, max_written.get(var), lax_versions)
            max_written[var] = version
            written.setdefault(var, set()).add(version)
        else:
            version = _check_read(index, var, raw.version, max_written.get(var), written)
        ops.append(Op(kind=raw.kind, txn=raw.txn, var=var, version=version, pos=index))
    return Schedule(tuple(ops))


def _check_write(
    index: int, var: str, version: Optional[int], latest: Optional[int], lax: bool
) -> int:
    expected = (latest or 0) + 1
    if version is None:
        return expected
    if lax:
        if latest is not None and version <= latest:
            raise ScheduleValidationError(
                index, f"write version {var}{version} is not above {var}{latest}"
            )
        return version
    if version != expected:
        raise ScheduleValidationError(
            index, f"write version {var}{version} should be {var}{expected}"
        )
    return version


def _check_read(
    index: int,
    var: str,
    version: Optional[int],
    latest: Optional[int],
    written: Dict[str, Set[int]],
) -> int:
    if version is None:
        return latest if latest is not None else 0
    if version != 0 and version not in written.get(var, set()):
        raise ScheduleValidationError(index, f"read of {var}{version}, which was never written")
    return version


def parse(text: str, lax_versions: bool = False) -> Schedule:
    """Parse one schedule.

    Raises ScheduleSyntaxError (character offset) or ScheduleValidationError (op index).
    """
    return build(tokenize(text), lax_versions=lax_versions)


def split_schedules(text: str) -> List[str]:
    """Split file content on blank lines, dropping blocks that hold only comments."""
    blocks = []
    for block in _BLANK_LINE.split(text):
        stripped = "\n".join(
            line for line in block.splitlines() if line.strip() and not line.strip().startswith("#")
        )
        if stripped.strip():
            blocks.append(block)
    return blocks


def parse_many(text: str, lax_versions: bool = False) -> List[Schedule]:
    """Parse every schedule in a multi-schedule file."""
    return [parse(block, lax_versions=lax_versions) for block in split_schedules(text)]


def format_schedule(s: Schedule) -> str:
    """Canonical text with explicit versions and no whitespace.

    Raises ScheduleValidationError for a variable the parser would read back differently.
    """
    for index, op in enumerate(s.ops):
        if op.is_data and not _VAR_NAME.fullmatch(op.var or ""):
            raise ScheduleValidationError(index, f"variable {op.var!r} cannot be formatted")
    return s.text()


def validate(s: Schedule, lax_versions: bool = False) -> Schedule:
    """Re-check a Schedule built outside the parser. Returns it with positions renumbered."""
    return build(s.ops, lax_versions=lax_versions)


def strip_versions(s: Schedule) -> str:
    """Versionless rendering, e.g. ``R1[x]W2[x]C2``."""
    parts = []
    for op in s.ops:
        parts.append(f"{op.kind.value}{op.txn}[{op.var}]" if op.is_data else op.text())
    return "".join(parts)
