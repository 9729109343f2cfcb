import pytest
from hypothesis import given
from hypothesis import strategies as st

from anomalylens.errors import ScheduleSyntaxError, ScheduleValidationError
from anomalylens.schedule import (
    build,
    format_schedule,
    parse,
    parse_many,
    split_schedules,
    strip_versions,
)
from anomalylens.types import Op, OpKind, Schedule, Status


def test_parse_version_gap_in_lax_mode():
    s = parse("W1[x0]W1[x1]W2[x3]R1[x3]C1C2", lax_versions=True)
    assert len(s) == 6
    assert s.txns == (1, 2)
    assert s.vars == ("x",)


def test_version_gap_rejected_in_strict_mode():
    with pytest.raises(ScheduleValidationError) as exc:
        parse("W1[x0]W1[x1]W2[x3]R1[x3]C1C2")
    assert exc.value.position == 0


def test_lax_mode_still_needs_increasing_versions():
    with pytest.raises(ScheduleValidationError) as exc:
        parse("W1[x2]W2[x1]", lax_versions=True)
    assert exc.value.position == 1


def test_empty_input_is_empty_schedule():
    s = parse("")
    assert len(s) == 0
    assert s.txns == ()
    assert format_schedule(s) == ""


def test_versions_are_inferred():
    s = parse("R1[x] W2[x] C2 R1[x]")
    assert format_schedule(s) == "R1[x0]W2[x1]C2R1[x1]"


def test_aborted_chain_inferred_text():
    s = parse("W1[x]R2[x]A1W2[y]C2R3[y]")
    assert format_schedule(s) == "W1[x1]R2[x1]A1W2[y1]C2R3[y1]"


def test_explicit_text_formats_back_unchanged():
    assert format_schedule(parse("R1[x0]W2[x1]C2W1[x2]")) == "R1[x0]W2[x1]C2W1[x2]"


def test_multi_character_variables():
    s = parse("W1[balance]R2[balance]W3[acct_1]")
    assert s.vars == ("acct_", "balance")  # trailing digits are the version
    assert format_schedule(s) == "W1[balance1]R2[balance1]W3[acct_1]"


def test_digits_inside_variable_names():
    s = parse("W1[a1b]W1[ab1]R2[a1b1]")
    assert [(op.var, op.version) for op in s.ops] == [("a1b", 1), ("ab", 1), ("a1b", 1)]
    assert parse(format_schedule(s)) == s


@pytest.mark.parametrize("var", ["x1", "ab12", "1x"])
def test_variable_ending_in_digit_rejected(var):
    with pytest.raises(ScheduleValidationError) as exc:
        build([Op(OpKind.WRITE, 1, "x"), Op(OpKind.READ, 2, var, 0)])
    assert exc.value.position == 1
    with pytest.raises(ScheduleValidationError):
        format_schedule(Schedule((Op(OpKind.WRITE, 1, var, 1),)))


def test_status_per_transaction():
    s = parse("W1[x1]R2[x1]A1R3[x1]C3")
    assert s.status == {1: Status.ABORTED, 2: Status.UNDONE, 3: Status.COMMITTED}


def test_unknown_token_reports_position():
    with pytest.raises(ScheduleSyntaxError) as exc:
        parse("R1[x0]Q2")
    assert exc.value.position == 6
    assert exc.value.token == "Q2"


def test_missing_bracket_names_expectation():
    with pytest.raises(ScheduleSyntaxError) as exc:
        parse("R1x0]")
    assert exc.value.position == 0
    assert "'['" in str(exc.value)


def test_transaction_zero_rejected():
    with pytest.raises(ScheduleSyntaxError) as exc:
        parse("R0[x0]")
    assert exc.value.position == 1


def test_op_after_commit_rejected():
    with pytest.raises(ScheduleValidationError) as exc:
        parse("R1[x0]C1W1[x1]")
    assert exc.value.position == 2
    assert "terminated" in exc.value.reason


def test_second_terminal_rejected():
    with pytest.raises(ScheduleValidationError):
        parse("W1[x1]C1A1")


def test_read_of_unwritten_version_rejected():
    with pytest.raises(ScheduleValidationError) as exc:
        parse("W1[x1]R2[x3]")
    assert exc.value.position == 1


def test_comments_and_blank_lines_split_schedules():
    text = "# first\nR1[x0]W2[x1]\n\n# only a comment\n\nW1[x1]\nC1\n"
    assert len(split_schedules(text)) == 2
    first, second = parse_many(text)
    assert format_schedule(first) == "R1[x0]W2[x1]"
    assert format_schedule(second) == "W1[x1]C1"


def test_positions_are_op_indices():
    s = parse("  W1[x1]   R2[x1] A1")
    assert [op.pos for op in s.ops] == [0, 1, 2]


def test_strip_versions():
    assert strip_versions(parse("R1[x0]W2[x1]C2")) == "R1[x]W2[x]C2"


# (kind, txn, var); ops of a transaction after its terminal are dropped
VARS = ("x", "y", "acct_", "a1b", "z_9q")
_raw_ops = st.lists(
    st.tuples(st.sampled_from("RWCA"), st.integers(1, 3), st.sampled_from(VARS)),
    max_size=14,
)


def _valid_schedule(raw):
    done = set()
    ops = []
    for kind, txn, var in raw:
        if txn in done:
            continue
        if kind in "CA":
            done.add(txn)
            ops.append(Op(OpKind(kind), txn))
        else:
            ops.append(Op(OpKind(kind), txn, var))
    return build(ops)


@given(_raw_ops)
def test_format_then_parse_round_trips(raw):
    s = _valid_schedule(raw)
    assert parse(format_schedule(s)) == s


@given(_raw_ops)
def test_versionless_text_infers_the_same_versions(raw):
    s = _valid_schedule(raw)
    assert parse(strip_versions(s)) == s


@given(_raw_ops, st.integers(0, 2))
def test_op_after_terminal_always_rejected(raw, extra_var):
    s = _valid_schedule(raw)
    terminals = [op for op in s.ops if op.is_terminal]
    if not terminals:
        return
    txn = terminals[0].txn
    text = format_schedule(s) + f"R{txn}[{'xyz'[extra_var]}]"
    with pytest.raises(ScheduleValidationError):
        parse(text)
