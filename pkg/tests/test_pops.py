import pytest

from anomalylens.enumeration import gen_schedules
from anomalylens.pops import categorize, conf, conf_ac, derive_kind, pop_text, pops
from anomalylens.schedule import parse
from anomalylens.types import Category, EnumSpec, PopKind

FOUR_TXNS = "R1[x0]W2[x1]W2[y1]W3[y2]W3[z1]R1[z1]R3[x1]W4[x2]"


def _edges(s):
    return [(e.src, e.dst, e.var, e.kind) for e in pops(s)]


def test_conf_with_version_gap():
    s = parse("W1[x0]W1[x1]W2[x3]R1[x3]C1C2", lax_versions=True)
    assert {c.text() for c in conf(s)} == {"W1W2[x]", "W2R1[x]"}


@pytest.mark.parametrize("text", ["R1[x0]W1[x1]C1", "R1[x0]R2[x0]C1C2"])
def test_no_conflicts(text):
    assert conf(parse(text)) == []
    assert pops(parse(text)) == []


def test_committed_write_write_category():
    s = parse("R1[x0]R1[y0]W2[y1]W3[z1]W1[z2]C2W3[y2]")
    found = [sc for sc in conf_ac(s) if sc.conflict.text() == "W2W3[y]"]
    assert len(found) == 1
    assert found[0].category == Category.COMMIT_BEFORE
    assert found[0].status_pos == (5,)


def test_abort_before_read_is_inert():
    s = parse("W1[x1]A1R2[x0]C2")
    (sc,) = conf_ac(s)
    assert sc.category == Category.ABORT_BEFORE
    assert sc.inert
    assert pops(s) == []


def test_undone_conflict_category():
    (sc,) = conf_ac(parse("W1[x1]R2[x1]"))
    assert sc.category == Category.UNDONE
    assert sc.status_pos == ()


@pytest.mark.parametrize(
    "text, category, kind, anchors",
    [
        ("W1[x1]C1R2[x1]", Category.COMMIT_BEFORE, PopKind.WCR, (0, 2, 1)),
        ("W1[x1]C1W2[x2]", Category.COMMIT_BEFORE, PopKind.WCW, (0, 2, 1)),
        ("R1[x0]C1W2[x1]", Category.COMMIT_BEFORE, PopKind.RCW, (0, 2, 1)),
        ("W1[x1]W2[x2]C1C2", Category.COMMIT_AFTER, PopKind.WWC, (0, 1, 2)),
        ("W1[x1]W2[x2]A1", Category.ABORT_AFTER, PopKind.WWA, (0, 1, 2)),
        ("W1[x1]R2[x1]A1C2", Category.ABORT_AFTER, PopKind.WRA, (0, 1, 2)),
        ("W1[x1]R2[x1]C1", Category.COMMIT_AFTER, PopKind.WR, (0, 1)),
        ("R1[x0]W2[x1]C1", Category.COMMIT_AFTER, PopKind.RW, (0, 1)),
        ("R1[x0]W2[x1]A1", Category.ABORT_AFTER, PopKind.RW, (0, 1)),
        ("R1[x0]W2[x1]C2C1", Category.PEER_COMMIT, PopKind.RW, (0, 1)),
        ("W1[x1]W2[x2]C2", Category.PEER_COMMIT, PopKind.WW, (0, 1)),
        ("W1[x1]R2[x1]", Category.UNDONE, PopKind.WR, (0, 1)),
    ],
)
def test_kind_table(text, category, kind, anchors):
    s = parse(text)
    (sc,) = conf_ac(s)
    assert sc.category == category
    (edge,) = pops(s)
    assert (edge.kind, edge.anchors) == (kind, anchors)


def test_peer_abort_is_inert():
    s = parse("W1[x1]R2[x1]A2")
    (sc,) = conf_ac(s)
    assert sc.category == Category.PEER_ABORT
    assert pops(s) == []


def test_peer_terminal_never_changes_the_kind():
    p, q = parse("W1[x1]R2[x1]").ops
    assert derive_kind(p, q, None, None) == (PopKind.WR, (0, 1))
    s = parse("W1[x1]R2[x1]C2")
    assert derive_kind(s.ops[0], s.ops[1], None, s.ops[2]) == (PopKind.WR, (0, 1))


def test_categorize_is_positional():
    s = parse("W1[x1]R2[x1]A1C2")
    p, q, a1, c2 = s.ops
    assert categorize(p, q, a1, c2) == Category.ABORT_AFTER
    assert categorize(p, q, None, c2) == Category.PEER_COMMIT
    assert categorize(p, q, None, None) == Category.UNDONE


def test_aborted_chain_pops():
    s = parse("W1[x]R2[x]A1W2[y]C2R3[y]")
    assert _edges(s) == [(1, 2, "x", PopKind.WRA), (2, 3, "y", PopKind.WCR)]
    assert [pop_text(e, s) for e in pops(s)] == ["W1R2A1[x]", "W2C2R3[y]"]


def test_four_transaction_pops():
    s = parse(FOUR_TXNS)
    texts = {pop_text(e, s) for e in pops(s)}
    # R3W4 on x comes from reading a version W4 overwrites
    assert texts == {
        "R1W2[x]",
        "R1W4[x]",
        "W2R3[x]",
        "W2W4[x]",
        "W2W3[y]",
        "W3R1[z]",
        "R3W4[x]",
    }


def test_strict_rcw_needs_a_write_in_the_reader():
    s = parse("R1[x0]C1W2[x1]")
    assert [e.kind for e in pops(s)] == [PopKind.RCW]
    assert pops(s, strict_rcw=True) == []
    writer = parse("R1[x0]W1[y1]C1W2[x1]")
    assert [e.kind for e in pops(writer, strict_rcw=True)] == [PopKind.RCW]


def test_pops_sorted_by_source_destination_and_anchor():
    s = parse(FOUR_TXNS)
    keys = [e.sort_key() for e in pops(s)]
    assert keys == sorted(keys)


@pytest.mark.parametrize(
    "bare, committed",
    [
        ("R1[x0]W2[x1]", "R1[x0]W2[x1]C1"),
        ("W1[x1]R2[x1]", "W1[x1]R2[x1]C1"),
    ],
)
def test_trailing_commit_of_source_folds_to_base_kind(bare, committed):
    assert [e.kind for e in pops(parse(bare))] == [e.kind for e in pops(parse(committed))]


def _small_schedules():
    return gen_schedules(EnumSpec(n_txns=2, n_vars=2, max_data_ops=2))


def test_pops_never_exceed_conflicts():
    for s in _small_schedules():
        assert len(pops(s)) <= len(conf(s))


def test_kinds_rederive_from_anchors():
    for s in _small_schedules():
        terms = s.terminals
        for e in pops(s):
            p, q = s.ops[e.anchors[0]], s.ops[e.anchors[1]]
            assert derive_kind(p, q, terms.get(p.txn), terms.get(q.txn)) == (e.kind, e.anchors)
            if e.kind.is_self_cycle:
                assert terms[e.src].pos > q.pos
            if e.kind.is_committed:
                assert terms[e.src].pos < q.pos


@pytest.mark.slow
def test_kinds_rederive_from_anchors_three_transactions():
    spec = EnumSpec(n_txns=3, n_vars=1, max_data_ops=2)
    for s in gen_schedules(spec, ceiling=10**9):
        terms = s.terminals
        for e in pops(s):
            p, q = s.ops[e.anchors[0]], s.ops[e.anchors[1]]
            assert derive_kind(p, q, terms.get(p.txn), terms.get(q.txn)) == (e.kind, e.anchors)
