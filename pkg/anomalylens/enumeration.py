"""Two-transaction anomaly catalogs and the brute-force schedule generator."""

import itertools
import logging
import math
import re
from typing import Dict, Iterator, List, Optional, Set, Tuple

from .classify import FORMS, FORMS_BY_NUMBER, pair_name
from .errors import AnomalyLensError, EnumerationCeilingError
from .pops import derive_kind
from .types import (
    CatalogEntry,
    EnumSpec,
    Op,
    OpKind,
    PopKind,
    Schedule,
    Subclass,
)

logger = logging.getLogger(__name__)

DEFAULT_CEILING = 10_000_000
VAR_NAMES = "xyzabcdefghijklmnopqrstuvw"

_TOKEN = re.compile(r"([RWCA])_([ij])")
_TXN_IDS = {"i": 1, "j": 2}
_STATUS_OPS = ("", "C_i", "C_j", "A_i", "A_j")

# p_ij never carries a commit between its ops, since t_i acts first.
_FORWARD_KINDS = tuple(k for k in PopKind if not k.is_committed and not k.is_self_cycle)

# Combinations the single-variable case analysis files under another form
# than their formal expression gives.
_SDA_ATTRIBUTED: Dict[Tuple[str, str], int] = {
    ("W_iW_jC_j", "R_jW_iC_j"): 1,
    ("W_iW_jA_j", "R_jW_iA_j"): 2,
    ("R_iW_jA_j", "R_jW_iA_j"): 2,
}
# Declared anomaly-free by the case analysis although it spells Intermediate Read.
_SDA_ASSERTED_BENIGN = {("W_iR_jC_j", "R_jW_iC_j")}

_SDA_STANDALONE = (
    ("W_iW_jA_i", "W_jA_i", 1, PopKind.WWA),
    ("W_iW_jC_i", "W_jC_i", 1, PopKind.WWC),
    ("W_iR_jA_i", "R_jA_i", 2, PopKind.WRA),
)

_FORM_BY_EXPRESSION: Dict[Tuple[Subclass, str], int] = {
    (f.subclass, f.expression): f.number
    for f in FORMS
    if f.number is not None and f.subclass != Subclass.MDA
}


def _pattern(kind: PopKind, src: str, dst: str, status: str = "") -> str:
    """Subscript notation of a POP, e.g. ``W_jC_jR_i`` or ``R_iW_jC_i``."""
    first, second = kind.base.value
    middle = f"C_{src}" if kind.is_committed else ""
    return f"{first}_{src}{middle}{second}_{dst}{status}"


def _pattern_kind(pattern: str) -> Optional[PopKind]:
    """POP kind a one-variable pattern folds to, or None when it is inert."""
    ops = [
        Op(OpKind(k), _TXN_IDS[t], "x" if k in "RW" else None, pos=pos)
        for pos, (k, t) in enumerate(_TOKEN.findall(pattern))
    ]
    p, q = [op for op in ops if op.is_data]
    terms = {op.txn: op for op in ops if op.is_terminal}
    derived = derive_kind(p, q, terms.get(p.txn), terms.get(q.txn))
    return derived[0] if derived is not None else None


def _back_patterns() -> Iterator[Tuple[str, PopKind, str]]:
    """Every feasible p_ji with its kind and the status op p_ij must share.

    Committed kinds already hold C_j. Base kinds take each status op that
    leaves them a plain POP; statuses that make the pair inert or a
    self-cycle POP are dropped, the latter being standalone cycles.
    """
    for kind in PopKind:
        if kind.is_self_cycle:
            continue
        if kind.is_committed:
            yield _pattern(kind, "j", "i"), kind, "C_j"
            continue
        for status in _STATUS_OPS:
            pattern = _pattern(kind, "j", "i", status)
            derived = _pattern_kind(pattern)
            if derived is not None and not derived.is_self_cycle:
                yield pattern, derived, status


def _combinations() -> Iterator[Tuple[str, Optional[PopKind], str, PopKind]]:
    for back, back_kind, status in _back_patterns():
        for kind in _FORWARD_KINDS:
            forward = _pattern(kind, "i", "j", status)
            yield forward, _pattern_kind(forward), back, back_kind


def _expression(forward: str, back: str, subclass: Subclass, keep_commit: bool = True) -> str:
    """Formal expression of a combination, such as ``W_iR_jW_jC_jR_i``.

    On one variable t_j's two ops merge into a single op, a write if either is one.
    """
    fwd = [(k, t) for k, t in _TOKEN.findall(forward) if k in "RW"]
    bwd = _TOKEN.findall(back)
    (x, _), (y, _) = fwd
    z = next(k for k, t in bwd if t == "j" and k in "RW")
    w = next(k for k, t in bwd if t == "i" and k in "RW")
    j_ops = ["W" if "W" in (y, z) else "R"] if subclass == Subclass.SDA else [y, z]
    ops = [f"{x}_i"] + [f"{k}_j" for k in j_ops]
    if keep_commit and bwd[1] == ("C", "j"):
        ops.append("C_j")
    ops.append(f"{w}_i")
    return "".join(ops)


def _derive_number(
    forward: str,
    fwd_kind: Optional[PopKind],
    back: str,
    subclass: Subclass,
    keep_commit: bool = True,
) -> Optional[int]:
    """Form a combination yields, or None when no anomaly occurs."""
    if fwd_kind is not None and fwd_kind.is_self_cycle:
        return 1
    j_writes = ("W", "j") in _TOKEN.findall(forward + back)
    if back.endswith("A_j") and not j_writes:
        # an aborted read-only t_j leaves nothing behind
        return None
    return _FORM_BY_EXPRESSION.get((subclass, _expression(forward, back, subclass, keep_commit)))


def _entry(
    number: Optional[int],
    forward: str,
    back: str,
    kinds: Optional[Tuple[PopKind, PopKind]],
    subclass: Subclass,
    provenance: str,
    note: Optional[str] = None,
) -> CatalogEntry:
    form = FORMS_BY_NUMBER.get(number) if number is not None else None
    if kinds is None:
        classified_as = None
    elif kinds[0] == kinds[1] and kinds[0].is_self_cycle:
        classified_as = "Dirty Read" if kinds[0] == PopKind.WRA else "Dirty Write"
    else:
        classified_as = pair_name(subclass, *kinds)
    return CatalogEntry(
        number=number,
        name=form.name if form else None,
        cls=form.cls if form else None,
        forward=forward,
        back=back,
        kinds=kinds,
        classified_as=classified_as,
        provenance=provenance,
        note=note,
    )


def enumerate_sda() -> List[CatalogEntry]:
    """Single-variable two-transaction combinations with the form each one yields.

    Standalone self-cycle POPs come first, then every feasible back pattern
    crossed with the three forward shapes.
    """
    entries = [
        _entry(number, fwd, back, (kind, kind), Subclass.SDA, "standalone", "self-cycle")
        for fwd, back, number, kind in _SDA_STANDALONE
    ]
    for forward, fwd_kind, back, back_kind in _combinations():
        kinds = (fwd_kind, back_kind) if fwd_kind is not None else None
        number = _derive_number(forward, fwd_kind, back, Subclass.SDA)
        note = None
        if (forward, back) in _SDA_ATTRIBUTED:
            number, note = _SDA_ATTRIBUTED[(forward, back)], "attributed"
        elif (forward, back) in _SDA_ASSERTED_BENIGN:
            number, note = None, "asserted-benign"
        elif number is None:
            note = "benign"
        elif number == 1:
            note = "self-cycle"
        entries.append(_entry(number, forward, back, kinds, Subclass.SDA, "case-analysis", note))
    return entries


def enumerate_dda() -> List[CatalogEntry]:
    """Double-variable two-transaction combinations, p_ij on x and p_ji on y.

    Pairs with an RCW back edge are only listed in the summary table, which
    files them under their uncommitted forms; the case analysis never spells
    them out.
    """
    entries = []
    for forward, fwd_kind, back, back_kind in _combinations():
        kinds = (fwd_kind, back_kind) if fwd_kind is not None else None
        table_only = back_kind == PopKind.RCW
        number = _derive_number(forward, fwd_kind, back, Subclass.DDA, keep_commit=not table_only)
        note = None
        if number is None:
            note = "benign"
        elif number == 1:
            note = "self-cycle"
        provenance = "table-only" if table_only else "case-analysis"
        entries.append(_entry(number, forward, back, kinds, Subclass.DDA, provenance, note))
    return entries


def catalog_forms(entries: List[CatalogEntry], subclass: Subclass) -> List[int]:
    """Distinct form numbers of the given subclass named by the catalog."""
    return sorted(
        {
            e.number
            for e in entries
            if e.number is not None and FORMS_BY_NUMBER[e.number].subclass == subclass
        }
    )


def render_catalog_table(entries: List[CatalogEntry]) -> str:
    """Plain-text table: one row per combination, form number first."""
    header = ("No.", "Name", "Class", "p_ij", "p_ji", "Kinds", "Classified as", "Source", "Note")
    rows = [header]
    for e in entries:
        rows.append(
            (
                str(e.number) if e.number is not None else "-",
                e.name or "-",
                e.cls.value if e.cls else "-",
                e.forward,
                e.back,
                "/".join(k.value for k in e.kinds) if e.kinds else "-",
                e.classified_as or "-",
                e.provenance,
                e.note or "",
            )
        )
    widths = [max(len(row[i]) for row in rows) for i in range(len(header))]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in rows]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def _check_spec(spec: EnumSpec) -> None:
    if min(spec.n_txns, spec.n_vars, spec.max_data_ops) < 1:
        raise AnomalyLensError(f"generator counts must be >= 1, got {spec.to_dict()}")
    if spec.n_vars > len(VAR_NAMES):
        raise AnomalyLensError(f"at most {len(VAR_NAMES)} variables are supported")


def search_bound(spec: EnumSpec) -> int:
    """Upper bound on the number of schedules gen_schedules can visit.

    Sums, over every vector of per-transaction op counts, the number of
    interleavings times the number of op words each transaction can spell.
    """
    _check_spec(spec)
    versions = spec.n_txns * spec.max_data_ops + 1 if spec.lax_versions else 1
    per_op = spec.n_vars * (1 + versions)
    n_terms = (2 if spec.allow_aborts else 1) if spec.include_terminals else 0
    max_len = spec.max_data_ops + (1 if n_terms else 0)

    def words(length: int) -> int:
        total = per_op**length if length <= spec.max_data_ops else 0
        if n_terms and length >= 2:
            total += n_terms * per_op ** (length - 1)
        return total

    bound = 0
    for lengths in itertools.product(range(max_len + 1), repeat=spec.n_txns):
        interleavings = math.factorial(sum(lengths))
        for n in lengths:
            interleavings //= math.factorial(n)
        product = interleavings
        for n in lengths:
            product *= words(n)
        bound += product
    return bound


class _State:
    """Mutable DFS state; ops are pushed and popped in place."""

    def __init__(self, spec: EnumSpec):
        self.spec = spec
        self.ops: List[Op] = []
        self.started = 0
        self.used_vars = 0
        self.data_count: Dict[int, int] = {}
        self.terminated: Set[int] = set()
        self.written: Dict[str, List[int]] = {}

    def candidates(self) -> Iterator[Op]:
        spec = self.spec
        pos = len(self.ops)
        for txn in range(1, min(self.started + 1, spec.n_txns) + 1):
            if txn in self.terminated:
                continue
            count = self.data_count.get(txn, 0)
            if count < spec.max_data_ops:
                for kind in (OpKind.READ, OpKind.WRITE):
                    for v in range(min(self.used_vars + 1, spec.n_vars)):
                        var = VAR_NAMES[v]
                        history = self.written.get(var, [])
                        if kind == OpKind.WRITE:
                            yield Op(kind, txn, var, len(history) + 1, pos)
                        elif spec.lax_versions:
                            for version in [0] + history:
                                yield Op(kind, txn, var, version, pos)
                        else:
                            yield Op(kind, txn, var, history[-1] if history else 0, pos)
            if spec.include_terminals and count >= 1:
                yield Op(OpKind.COMMIT, txn, pos=pos)
                if spec.allow_aborts:
                    yield Op(OpKind.ABORT, txn, pos=pos)

    def push(self, op: Op) -> Tuple[int, int]:
        saved = (self.started, self.used_vars)
        self.ops.append(op)
        self.started = max(self.started, op.txn)
        if op.is_terminal:
            self.terminated.add(op.txn)
        else:
            self.data_count[op.txn] = self.data_count.get(op.txn, 0) + 1
            self.used_vars = max(self.used_vars, VAR_NAMES.index(op.var) + 1)
            if op.kind == OpKind.WRITE:
                self.written.setdefault(op.var, []).append(op.version)
        return saved

    def pop(self, saved: Tuple[int, int]) -> None:
        op = self.ops.pop()
        self.started, self.used_vars = saved
        if op.is_terminal:
            self.terminated.discard(op.txn)
        else:
            self.data_count[op.txn] -= 1
            if op.kind == OpKind.WRITE:
                self.written[op.var].pop()


def _walk(state: _State) -> Iterator[Schedule]:
    for op in list(state.candidates()):
        saved = state.push(op)
        yield Schedule(tuple(state.ops))
        yield from _walk(state)
        state.pop(saved)


def gen_schedules(spec: EnumSpec, ceiling: int = DEFAULT_CEILING) -> Iterator[Schedule]:
    """Every valid schedule within spec, each non-empty prefix included, in DFS order.

    Transactions and variables are numbered in order of first appearance, so
    isomorphic schedules are produced once. Raises EnumerationCeilingError
    before yielding anything if search_bound(spec) exceeds ceiling.
    """
    bound = search_bound(spec)
    if bound > ceiling:
        logger.warning("refusing generator run: bound %d exceeds ceiling %d", bound, ceiling)
        raise EnumerationCeilingError(bound, ceiling)
    logger.debug("generating schedules for %s (bound %d)", spec.to_dict(), bound)
    return _walk(_State(spec))
