import random

import pytest

from anomalylens.enumeration import gen_schedules
from anomalylens.errors import ReductionError
from anomalylens.graph import (
    build_pg,
    canonical_cycle,
    conflict_dot,
    conflict_graph,
    find_cycles,
    graph_of,
    has_cycle,
    pg_equivalent,
    reduce_single_var_cycle,
    to_dot,
)
from anomalylens.pops import pop_text, pops
from anomalylens.schedule import parse
from anomalylens.types import EnumSpec, PopKind

ABORTED_CHAIN = "W1[x]R2[x]A1W2[y]C2R3[y]"
FOUR_TXNS = "R1[x0]W2[x1]W2[y1]W3[y2]W3[z1]R1[z1]R3[x1]W4[x2]"


def _texts(cycle, s):
    return {pop_text(e, s) for e in cycle.edges if not e.implicit}


def test_aborted_chain_graph():
    s = parse(ABORTED_CHAIN)
    g = build_pg(pops(s), s.txns)
    assert g.vertices == (1, 2, 3)
    assert len(g.forward_edges) == 2
    implicit = [e for e in g.edges if e.implicit]
    assert [(e.src, e.dst, e.kind) for e in implicit] == [(2, 1, PopKind.WRA)]


def test_empty_graph():
    g = build_pg([], [1])
    assert g.vertices == (1,)
    assert g.edges == ()
    assert find_cycles(g) == []
    assert canonical_cycle(find_cycles(g)) is None


def test_four_transaction_graph_and_cycles():
    s = parse(FOUR_TXNS)
    g = graph_of(s)
    assert g.vertices == (1, 2, 3, 4)
    assert len(g.forward_edges) == 7
    cycles = find_cycles(g)
    assert {"R1W2[x]", "W2R3[x]", "W3R1[z]"} in [_texts(c, s) for c in cycles]
    canonical = canonical_cycle(cycles)
    assert _texts(canonical, s) == {"R1W2[x]", "W2W3[y]", "W3R1[z]"}
    assert canonical.txns == (1, 2, 3)
    assert (canonical.n_vars, canonical.n_txns) == (3, 3)


def test_serial_schedule_is_acyclic():
    g = graph_of(parse("R1[x0]C1W2[x1]C2"))
    assert find_cycles(g) == []
    assert not has_cycle(g)


def test_self_cycle_pop_gives_two_edge_cycle():
    (c,) = find_cycles(graph_of(parse("W1[x1]R2[x1]A1")))
    assert c.is_self_cycle
    assert len(c.edges) == 2
    assert c.txns == (1, 2)
    assert c.kinds == (PopKind.WRA, PopKind.WRA)


def test_cycles_start_at_smallest_transaction():
    for c in find_cycles(graph_of(parse(FOUR_TXNS))):
        assert c.txns[0] == min(c.txns)
        for a, b in zip(c.edges, c.edges[1:] + c.edges[:1]):
            assert a.dst == b.src


def test_canonical_prefers_earliest_completion():
    # {t3, t4} closes at position 3, {t1, t2} at position 5
    s = parse("R1[x0]R3[y0]W4[y1]W3[y2]W2[x1]W1[x2]")
    canonical = canonical_cycle(find_cycles(graph_of(s)))
    assert canonical.txns == (3, 4)
    assert canonical.completion == 3


def test_canonical_prefers_earlier_kind_on_ties():
    s = parse("R1[x0]R2[x0]W2[x1]W1[x2]")
    cycles = find_cycles(graph_of(s))
    assert len(cycles) == 2
    assert canonical_cycle(cycles).kinds == (PopKind.RW, PopKind.WW)


def test_canonical_ignores_input_order():
    cycles = list(find_cycles(graph_of(parse(FOUR_TXNS))))
    expected = canonical_cycle(cycles)
    rng = random.Random(7)
    for _ in range(5):
        rng.shuffle(cycles)
        assert canonical_cycle(cycles) == expected


def test_canonical_of_singleton():
    (c,) = find_cycles(graph_of(parse("W1[x1]R2[x1]W1[x2]")))
    assert canonical_cycle([c]) is c


def test_cycle_limit_truncates():
    s = parse("R1[x0]W2[x1]W3[x2]W4[x3]W1[x4]")
    full = find_cycles(graph_of(s))
    assert len(full) > 2
    limited = find_cycles(graph_of(s), limit=2)
    assert len(limited) == 2
    assert limited.truncated
    assert not full.truncated


def _pop_keys(s):
    return {e.key for e in pops(s)}


def test_reduce_three_transaction_cycle():
    s = parse("R1[x0]W2[x1]W3[x2]W1[x3]")
    cycles = find_cycles(graph_of(s))
    three = next(c for c in cycles if c.n_txns == 3)
    reduced = reduce_single_var_cycle(three, s)
    assert reduced.n_txns == 2
    assert reduced.n_vars == 1
    assert {e.key for e in reduced.edges} <= _pop_keys(s)
    assert reduced in cycles


def test_reduce_five_transaction_cycle():
    s = parse("R1[x0]W2[x1]W3[x2]W4[x3]W5[x4]W1[x5]")
    cycles = find_cycles(graph_of(s))
    five = next(c for c in cycles if c.n_txns == 5)
    reduced = reduce_single_var_cycle(five, s)
    assert reduced.n_txns == 2
    assert reduced in cycles


def test_reduce_prefers_self_cycle_member():
    # t2's commit after W3 makes W2W3 a WWC pair inside the 3-cycle
    s = parse("R1[x0]W2[x1]W3[x2]C2W1[x3]")
    cycles = find_cycles(graph_of(s))
    three = next(c for c in cycles if c.n_txns == 3)
    reduced = reduce_single_var_cycle(three, s)
    assert reduced.is_self_cycle
    assert reduced.txns == (2, 3)
    assert reduced in cycles


def test_reduce_rejects_two_transaction_cycle():
    s = parse("R1[x0]W2[x1]W1[x2]")
    (c,) = find_cycles(graph_of(s))
    with pytest.raises(ReductionError):
        reduce_single_var_cycle(c, s)


def test_reduce_rejects_multi_variable_cycle():
    s = parse("R1[x0]W2[x1]W2[y1]W3[y2]R3[z0]W1[z1]")
    (c,) = find_cycles(graph_of(s))
    with pytest.raises(ReductionError):
        reduce_single_var_cycle(c, s)


def test_aborts_can_prevent_reduction():
    s = parse("R1[x0]W2[x1]R3[x1]W1[x2]C3A1")
    cycles = find_cycles(graph_of(s))
    assert [c.n_txns for c in cycles] == [3]
    with pytest.raises(ReductionError):
        reduce_single_var_cycle(cycles[0], s)


def _check_reductions(spec):
    checked = 0
    for s in gen_schedules(spec, ceiling=10**9):
        cycles = find_cycles(graph_of(s))
        long_cycles = [c for c in cycles if c.n_txns >= 3]
        if not long_cycles:
            continue
        assert any(c.n_txns == 2 for c in cycles), s.text()
        for c in long_cycles:
            reduced = reduce_single_var_cycle(c, s)
            assert reduced.n_txns == 2, s.text()
            assert reduced in cycles, s.text()
        checked += 1
    return checked


def test_single_variable_three_cycles_reduce():
    spec = EnumSpec(n_txns=3, n_vars=1, max_data_ops=2, include_terminals=False)
    assert _check_reductions(spec) > 0


@pytest.mark.slow
def test_single_variable_cycles_reduce_with_commits():
    spec = EnumSpec(n_txns=3, n_vars=1, max_data_ops=2, allow_aborts=False)
    assert _check_reductions(spec) > 0


@pytest.mark.slow
def test_single_variable_four_transaction_sweep():
    spec = EnumSpec(n_txns=4, n_vars=1, max_data_ops=2, include_terminals=False)
    assert _check_reductions(spec) > 0


def test_has_cycle_agrees_with_find_cycles():
    for s in gen_schedules(EnumSpec(n_txns=2, n_vars=2, max_data_ops=2)):
        g = graph_of(s)
        assert has_cycle(g) == bool(find_cycles(g)), s.text()


def test_pg_equivalence():
    s = parse(ABORTED_CHAIN)
    assert pg_equivalent(s, s)
    moved = parse("W1[x]R2[x]W2[y]A1C2R3[y]")
    assert pg_equivalent(s, moved)
    assert pg_equivalent(moved, s)
    assert not pg_equivalent(parse("R1[x0]W2[x1]R1[x1]"), parse("R1[x0]R1[x0]W2[x1]"))


def test_pg_equivalence_needs_same_pops():
    # same ops, the commit moves from after to before the read
    assert not pg_equivalent(parse("W1[x1]R2[x1]C1"), parse("W1[x1]C1R2[x1]"))


def test_dot_of_empty_graph():
    assert to_dot(build_pg([], [])) == "digraph pg {\n}\n"


def test_dot_labels_and_implicit_edges():
    dot = to_dot(graph_of(parse(ABORTED_CHAIN)))
    assert 'label="WRA[x]"' in dot
    assert 'label="WCR[y]"' in dot
    assert dot.count("style=dashed") == 1
    assert '"t1" -> "t2"' in dot


def test_dot_highlights_canonical_cycle():
    g = graph_of(parse(FOUR_TXNS))
    dot = to_dot(g, canonical_cycle(find_cycles(g)))
    assert dot.count("color=red") == 3
    assert to_dot(g) == to_dot(g)


def test_conflict_graph_keeps_inert_conflicts():
    s = parse("W1[x1]A1R2[x0]C2")
    g = conflict_graph(s)
    ((src, dst, data),) = g.edges(data=True)
    assert (src, dst) == (1, 2)
    assert data["inert"]
    assert data["label"] == "WR[x] (2)"
    assert "color=grey" in conflict_dot(s)
