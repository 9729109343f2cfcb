"""Partial-order-pair graph: construction, cycle search, reduction and DOT export."""

import itertools
import logging
from collections import Counter
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import networkx as nx

from .errors import ReductionError
from .pops import conf_ac, pops
from .types import Cycle, PopEdge, Schedule

logger = logging.getLogger(__name__)

DEFAULT_CYCLE_LIMIT = 10_000


@dataclass(frozen=True)
class PopGraph:
    """Vertices are transaction ids; edges keep parallel POPs apart by var and kind.

    Self-cycle kinds contribute their forward edge plus an implicit back edge.
    """

    vertices: Tuple[int, ...]
    edges: Tuple[PopEdge, ...]

    @property
    def forward_edges(self) -> Tuple[PopEdge, ...]:
        return tuple(e for e in self.edges if not e.implicit)

    def to_networkx(self) -> nx.MultiDiGraph:
        g = nx.MultiDiGraph()
        g.add_nodes_from(self.vertices)
        for e in self.edges:
            g.add_edge(e.src, e.dst, var=e.var, kind=e.kind.value, implicit=e.implicit)
        return g

    def to_dict(self) -> Dict[str, object]:
        return {"vertices": list(self.vertices), "edges": [e.to_dict() for e in self.edges]}


class CycleList(List[Cycle]):
    """find_cycles result; truncated is set when the limit cut the search short."""

    truncated: bool = False


def build_pg(edges: Iterable[PopEdge], txns: Iterable[int]) -> PopGraph:
    forward = [e for e in edges if not e.implicit]
    all_edges = list(forward)
    all_edges.extend(e.reversed() for e in forward if e.kind.is_self_cycle)
    all_edges.sort(key=PopEdge.sort_key)
    vertices = set(txns)
    for e in forward:
        vertices.update((e.src, e.dst))
    return PopGraph(tuple(sorted(vertices)), tuple(all_edges))


def graph_of(s: Schedule, strict_rcw: bool = False) -> PopGraph:
    return build_pg(pops(s, strict_rcw=strict_rcw), s.txns)


def _representatives(edges: Sequence[PopEdge]) -> Dict[Tuple[int, int], List[PopEdge]]:
    """Collapse parallel edges with equal (src, dst, var, kind) to the earliest-completing one."""
    best: Dict[Tuple, PopEdge] = {}
    for e in edges:
        if e.implicit:
            continue
        current = best.get(e.key)
        if current is None or (e.completion, e.anchors) < (current.completion, current.anchors):
            best[e.key] = e
    by_pair: Dict[Tuple[int, int], List[PopEdge]] = {}
    for e in sorted(best.values(), key=PopEdge.sort_key):
        by_pair.setdefault((e.src, e.dst), []).append(e)
    return by_pair


def _normalized(edges: Sequence[PopEdge]) -> Cycle:
    start = min(range(len(edges)), key=lambda i: edges[i].src)
    return Cycle(tuple(edges[start:]) + tuple(edges[:start]))


def self_cycle(edge: PopEdge) -> Cycle:
    return _normalized([edge, edge.reversed()])


def find_cycles(g: PopGraph, limit: int = DEFAULT_CYCLE_LIMIT) -> CycleList:
    """All simple cycles of g, self-cycle 2-cycles included, up to limit.

    Each cycle starts at its smallest transaction id. The list is sorted by
    Cycle.sort_key, so the canonical cycle comes first.
    """
    result = CycleList()
    by_pair = _representatives(g.edges)

    for group in by_pair.values():
        for e in group:
            if e.kind.is_self_cycle:
                if len(result) >= limit:
                    result.truncated = True
                    break
                result.append(self_cycle(e))

    digraph = nx.DiGraph()
    digraph.add_nodes_from(g.vertices)
    digraph.add_edges_from(by_pair.keys())
    for nodes in nx.simple_cycles(digraph):
        if result.truncated:
            break
        start = nodes.index(min(nodes))
        nodes = nodes[start:] + nodes[:start]
        hops = [by_pair[(nodes[i], nodes[(i + 1) % len(nodes)])] for i in range(len(nodes))]
        for choice in itertools.product(*hops):
            if len(result) >= limit:
                result.truncated = True
                break
            result.append(Cycle(tuple(choice)))

    if result.truncated:
        logger.warning("cycle enumeration truncated at %d cycles", limit)
    result.sort(key=Cycle.sort_key)
    return result


def canonical_cycle(cycles: Iterable[Cycle]) -> Optional[Cycle]:
    """Fewest edges, then earliest completion, then txns, vars and kinds."""
    return min(cycles, key=Cycle.sort_key, default=None)


def has_cycle(g: PopGraph) -> bool:
    """Cheaper than find_cycles when only existence matters."""
    if any(e.kind.is_self_cycle for e in g.forward_edges):
        return True
    digraph = nx.DiGraph()
    digraph.add_edges_from((e.src, e.dst) for e in g.forward_edges)
    return not nx.is_directed_acyclic_graph(digraph)


def reduce_single_var_cycle(c: Cycle, s: Schedule, strict_rcw: bool = False) -> Cycle:
    """Shrink a single-variable cycle over three or more transactions to two.

    Repeatedly takes a chord u -> w between cycle members (w not u's successor)
    and keeps the shorter cycle w -> ... -> u -> w, until two transactions remain.
    Every edge used exists in pops(s).
    """
    if c.n_vars != 1 or c.n_txns < 3:
        raise ReductionError(
            f"expected a single-variable cycle over >= 3 transactions, got nD={c.n_vars} "
            f"nT={c.n_txns}"
        )
    var = c.vars[0]
    by_pair = _representatives([e for e in pops(s, strict_rcw=strict_rcw) if e.var == var])
    order = list(c.txns)

    while len(order) > 2:
        members = set(order)
        for (src, dst), group in sorted(by_pair.items()):
            if src in members and dst in members:
                for e in group:
                    if e.kind.is_self_cycle:
                        return self_cycle(e)
        order = _shortcut(order, by_pair)

    a, b = order
    if (a, b) not in by_pair or (b, a) not in by_pair:
        raise ReductionError(f"no 2-transaction cycle between t{a} and t{b}")
    candidates = [
        _normalized([ab, ba]) for ab in by_pair[(a, b)] for ba in by_pair[(b, a)]
    ]
    return canonical_cycle(candidates)  # type: ignore[return-value]


def _shortcut(order: List[int], by_pair: Dict[Tuple[int, int], List[PopEdge]]) -> List[int]:
    n = len(order)
    best: Optional[Tuple[int, int, int]] = None
    for i, u in enumerate(order):
        for j, w in enumerate(order):
            if i == j or j == (i + 1) % n or (u, w) not in by_pair:
                continue
            length = (i - j) % n + 1
            if best is None or length < best[0]:
                best = (length, i, j)
    if best is None:
        raise ReductionError(
            "cycle over t" + ", t".join(map(str, order)) + " has no chord; "
            "it cannot be reduced (aborted transactions can prevent reduction)"
        )
    _, i, j = best
    seq = []
    k = j
    while k != i:
        seq.append(order[k])
        k = (k + 1) % n
    seq.append(order[i])
    return seq


def pg_equivalent(s1: Schedule, s2: Schedule, strict_rcw: bool = False) -> bool:
    """Same op multiset and same POP set compared on (from, to, var, kind)."""
    ops1 = Counter((op.kind, op.txn, op.var, op.version) for op in s1.ops)
    ops2 = Counter((op.kind, op.txn, op.var, op.version) for op in s2.ops)
    if ops1 != ops2:
        return False
    keys1 = {e.key for e in pops(s1, strict_rcw=strict_rcw)}
    keys2 = {e.key for e in pops(s2, strict_rcw=strict_rcw)}
    return keys1 == keys2


def conflict_graph(s: Schedule) -> nx.MultiDiGraph:
    """Conflict graph with status: one edge per conflict, labelled with its category."""
    g = nx.MultiDiGraph()
    g.add_nodes_from(s.txns)
    for sc in conf_ac(s):
        c = sc.conflict
        g.add_edge(
            c.first.txn,
            c.second.txn,
            label=f"{c.shape.value}[{c.var}] ({int(sc.category)})",
            inert=sc.inert,
        )
    return g


def _gvquote(s: str) -> str:
    return '"{}"'.format(s.replace('"', r"\""))


def to_dot(g: PopGraph, highlight: Optional[Cycle] = None) -> str:
    """Graphviz digraph; node names are t<id>, edge labels kind[var]."""
    marked = set(highlight.edges) if highlight is not None else set()
    lines = ["digraph pg {"]
    for v in g.vertices:
        lines.append(f"  {_gvquote(f't{v}')};")
    for e in g.edges:
        attrs = [f"label={_gvquote(e.label)}"]
        if e.implicit:
            attrs.append("style=dashed")
        if e in marked:
            attrs.append("color=red penwidth=2")
        lines.append(
            f"  {_gvquote(f't{e.src}')} -> {_gvquote(f't{e.dst}')} [{' '.join(attrs)}];"
        )
    lines.append("}")
    return "\n".join(lines) + "\n"


def conflict_dot(s: Schedule) -> str:
    """DOT for the conflict graph with status; inert conflicts are drawn grey."""
    g = conflict_graph(s)
    lines = ["digraph conflicts {"]
    for v in sorted(g.nodes):
        lines.append(f"  {_gvquote(f't{v}')};")
    for src, dst, data in g.edges(data=True):
        attrs = [f"label={_gvquote(data['label'])}"]
        if data["inert"]:
            attrs.append("color=grey fontcolor=grey")
        lines.append(
            f"  {_gvquote(f't{src}')} -> {_gvquote(f't{dst}')} [{' '.join(attrs)}];"
        )
    lines.append("}")
    return "\n".join(lines) + "\n"
