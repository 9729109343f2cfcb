"""Rule-based online scheduler simulator.

A seeded workload of transaction programs is interleaved one op at a time.
Each op is admitted, blocked until its blocker terminates, or causes its
transaction to abort, depending on the active strategies.
"""

import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Deque, Dict, FrozenSet, List, Optional, Set, Tuple

import networkx as nx
import numpy as np

from .enumeration import VAR_NAMES
from .errors import SimulationConfigError
from .graph import graph_of, has_cycle
from .schedule import build
from .types import (
    Decision,
    Op,
    OpKind,
    RunResult,
    Schedule,
    SchedulerConfig,
    Strategy,
    Workload,
)

logger = logging.getLogger(__name__)

Program = List[Tuple[OpKind, Optional[str]]]


def parse_strategies(text: str) -> FrozenSet[Strategy]:
    """Comma-separated strategy names; ``none`` or an empty string selects none."""
    names = [part.strip() for part in text.split(",") if part.strip()]
    if names == ["none"]:
        return frozenset()
    try:
        return frozenset(Strategy(name) for name in names)
    except ValueError:
        valid = ", ".join(s.value for s in Strategy)
        raise SimulationConfigError(f"unknown strategy in {text!r} (valid: {valid}, none)")


def validate_workload(w: Workload) -> None:
    if w.n_txns < 1:
        raise SimulationConfigError("workload needs at least one transaction")
    if not 1 <= w.n_vars <= len(VAR_NAMES):
        raise SimulationConfigError(f"n_vars must be between 1 and {len(VAR_NAMES)}")
    if not 1 <= w.min_ops <= w.max_ops:
        raise SimulationConfigError(
            f"need 1 <= min_ops <= max_ops, got {w.min_ops} and {w.max_ops}"
        )
    for label, value in (("write_ratio", w.write_ratio), ("abort_ratio", w.abort_ratio)):
        if not 0.0 <= value <= 1.0:
            raise SimulationConfigError(f"{label} must be within [0, 1], got {value}")
    if w.zipf_s < 0:
        raise SimulationConfigError(f"zipf_s must be >= 0, got {w.zipf_s}")


def zipf_weights(n: int, s: float) -> np.ndarray:
    """Bounded Zipf distribution over ranks 1..n."""
    weights = 1.0 / np.arange(1, n + 1, dtype=float) ** s
    return weights / weights.sum()


def generate_programs(w: Workload, rng: np.random.Generator) -> Dict[int, Program]:
    """One op program per transaction, each ending with Commit or Abort."""
    validate_workload(w)
    weights = zipf_weights(w.n_vars, w.zipf_s)
    programs: Dict[int, Program] = {}
    for txn in range(1, w.n_txns + 1):
        length = int(rng.integers(w.min_ops, w.max_ops + 1))
        program: Program = []
        for _ in range(length):
            kind = OpKind.WRITE if rng.random() < w.write_ratio else OpKind.READ
            var = VAR_NAMES[int(rng.choice(w.n_vars, p=weights))]
            program.append((kind, var))
        program.append((OpKind.ABORT if rng.random() < w.abort_ratio else OpKind.COMMIT, None))
        programs[txn] = program
    return programs


def committed_projection(history: Schedule) -> Schedule:
    """Keep committed transactions only, renumbering versions per variable.

    A read of a version whose writer was dropped is bound to the version
    that write overwrote.
    """
    keep = {t for t, term in history.terminals.items() if term.kind == OpKind.COMMIT}
    renumbered: Dict[Tuple[str, int], int] = {}
    latest: Dict[str, int] = {}
    for op in history.ops:
        if op.kind == OpKind.WRITE:
            if op.txn in keep:
                latest[op.var] = latest.get(op.var, 0) + 1
            renumbered[(op.var, op.version)] = latest.get(op.var, 0)
    ops = []
    for op in history.ops:
        if op.txn not in keep:
            continue
        if op.is_data:
            version = renumbered.get((op.var, op.version), 0) if op.version else 0
            op = Op(op.kind, op.txn, op.var, version)
        ops.append(op)
    return build(ops)


@dataclass
class _Txn:
    txn: int
    program: Program
    pc: int = 0
    state: str = "active"
    first_step: Optional[int] = None
    commit_step: Optional[int] = None
    writes: Dict[str, int] = field(default_factory=dict)

    @property
    def next_op(self) -> Tuple[OpKind, Optional[str]]:
        return self.program[self.pc]

    @property
    def active(self) -> bool:
        return self.state == "active"


class Simulator:
    """Deterministic single-threaded admission loop for one SchedulerConfig."""

    def __init__(self, cfg: SchedulerConfig):
        self.cfg = cfg
        self.strategies = cfg.strategies
        self.rng = np.random.default_rng(cfg.seed)
        self.txns = {
            t: _Txn(t, program)
            for t, program in generate_programs(cfg.workload, self.rng).items()
        }
        self.history: List[Op] = []
        self.decisions: List[Decision] = []
        self.counters = {"admitted": 0, "blocked": 0, "aborted": 0, "deadlocks": 0}
        self.step = 0
        # var -> [(version, writer)] in admission order
        self.versions: Dict[str, List[Tuple[int, int]]] = {}
        self.waiting_for: Dict[int, Set[int]] = {}
        self.block_order: List[int] = []
        self.retry: Deque[int] = deque()
        self.wait_graph = nx.DiGraph()

    def run(self) -> RunResult:
        while any(t.active for t in self.txns.values()):
            if self.retry:
                self._attempt(self.retry.popleft(), retried=True)
                continue
            runnable = sorted(
                t for t, x in self.txns.items() if x.active and t not in self.waiting_for
            )
            if not runnable:
                # every live transaction waits
                self.counters["deadlocks"] += 1
                self._abort(self._youngest(self.waiting_for), "deadlock victim")
                continue
            self._attempt(runnable[int(self.rng.integers(len(runnable)))])
        history = build(self.history)
        return RunResult(
            config=self.cfg,
            history=history,
            committed=committed_projection(history),
            decisions=self.decisions,
            counters=dict(self.counters),
        )

    def _decide(self, op: str, outcome: str, reason: Optional[str] = None) -> None:
        self.step += 1
        self.decisions.append(Decision(self.step, op, outcome, reason))
        logger.debug("step %d %s %s %s", self.step, op, outcome, reason or "")

    def _attempt(self, txn: int, retried: bool = False) -> None:
        x = self.txns[txn]
        kind, var = x.next_op
        label = f"{kind.value}{txn}[{var}]" if var else f"{kind.value}{txn}"
        if retried:
            self._decide(label, "retried")

        if kind == OpKind.ABORT:
            self._abort(txn, "program abort")
            return

        if kind in (OpKind.READ, OpKind.WRITE):
            blockers = self._blockers(txn, kind, var)
            if blockers:
                self._block(txn, label, blockers)
                return

        op = self._materialize(x, kind, var)
        if Strategy.FULL_CYCLE_CHECK in self.strategies and self._closes_cycle(op):
            self._abort(txn, f"{op.text()} would close a POP cycle")
            return
        self._admit(x, op)

    def _blockers(self, txn: int, kind: OpKind, var: str) -> Set[int]:
        guarded = (kind == OpKind.WRITE and Strategy.BLOCK_WW in self.strategies) or (
            kind == OpKind.READ and Strategy.READ_COMMITTED in self.strategies
        )
        if not guarded:
            return set()
        return {
            other.txn
            for other in self.txns.values()
            if other.txn != txn and other.active and var in other.writes
        }

    def _block(self, txn: int, label: str, blockers: Set[int]) -> None:
        self.counters["blocked"] += 1
        waiting_on = ", ".join(f"t{b}" for b in sorted(blockers))
        self._decide(label, "blocked", f"waits for {waiting_on}")
        self.waiting_for[txn] = set(blockers)
        self.block_order.append(txn)
        for b in blockers:
            self.wait_graph.add_edge(txn, b)
        try:
            cycle = nx.find_cycle(self.wait_graph, source=txn)
        except nx.NetworkXNoCycle:
            return
        members = {u for u, _ in cycle}
        self.counters["deadlocks"] += 1
        self._abort(self._youngest(members), "deadlock victim")

    def _youngest(self, candidates) -> int:
        def age(t: int) -> Tuple[float, int]:
            first = self.txns[t].first_step
            return (float("inf") if first is None else first, t)

        return max(candidates, key=age)

    def _materialize(self, x: _Txn, kind: OpKind, var: Optional[str]) -> Op:
        pos = len(self.history)
        if kind == OpKind.WRITE:
            return Op(kind, x.txn, var, len(self.versions.get(var, [])) + 1, pos)
        if kind == OpKind.READ:
            return Op(kind, x.txn, var, self._read_version(x, var), pos)
        return Op(kind, x.txn, pos=pos)

    def _read_version(self, x: _Txn, var: str) -> int:
        if var in x.writes:
            return x.writes[var]
        chain = self.versions.get(var, [])
        if Strategy.SNAPSHOT in self.strategies:
            horizon = x.first_step if x.first_step is not None else self.step + 1
            visible = [v for v, w in chain if self._committed_before(w, horizon)]
        elif Strategy.READ_COMMITTED in self.strategies:
            visible = [v for v, w in chain if self.txns[w].state == "committed"]
        else:
            visible = [v for v, w in chain if self.txns[w].state != "aborted"]
        return visible[-1] if visible else 0

    def _committed_before(self, writer: int, horizon: int) -> bool:
        w = self.txns[writer]
        return w.state == "committed" and w.commit_step is not None and w.commit_step < horizon

    def _closes_cycle(self, op: Op) -> bool:
        members = {t for t, x in self.txns.items() if x.state == "committed"}
        members.add(op.txn)
        ops = [o for o in self.history if o.txn in members] + [op]
        tentative = Schedule(
            tuple(Op(o.kind, o.txn, o.var, o.version, i) for i, o in enumerate(ops))
        )
        return has_cycle(graph_of(tentative))

    def _admit(self, x: _Txn, op: Op) -> None:
        self.history.append(op)
        self.counters["admitted"] += 1
        self._decide(op.text(), "admitted")
        if x.first_step is None:
            x.first_step = self.step
        x.pc += 1
        if op.kind == OpKind.WRITE:
            self.versions.setdefault(op.var, []).append((op.version, x.txn))
            x.writes[op.var] = op.version
        elif op.kind == OpKind.COMMIT:
            x.state = "committed"
            x.commit_step = self.step
            self._terminated(x.txn)

    def _abort(self, txn: int, reason: str) -> None:
        x = self.txns[txn]
        op = Op(OpKind.ABORT, txn, pos=len(self.history))
        self.history.append(op)
        self.counters["aborted"] += 1
        self._decide(op.text(), "aborted", reason)
        x.state = "aborted"
        self.waiting_for.pop(txn, None)
        if txn in self.block_order:
            self.block_order.remove(txn)
        if txn in self.retry:
            self.retry.remove(txn)
        self._terminated(txn)

    def _terminated(self, txn: int) -> None:
        """Release txn's holds and queue waiters whose last blocker it was, FIFO."""
        if self.wait_graph.has_node(txn):
            self.wait_graph.remove_node(txn)
        for waiter in list(self.block_order):
            blockers = self.waiting_for[waiter]
            blockers.discard(txn)
            if not blockers:
                del self.waiting_for[waiter]
                self.block_order.remove(waiter)
                if self.wait_graph.has_node(waiter):
                    self.wait_graph.remove_edges_from(list(self.wait_graph.out_edges(waiter)))
                self.retry.append(waiter)


def simulate(cfg: SchedulerConfig) -> RunResult:
    """Run one seeded simulation. Identical configs give identical results."""
    return Simulator(cfg).run()
