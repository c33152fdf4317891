import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from relign.imp import (
    INT_MAX,
    SKIP,
    Add,
    ArithmeticOverflow,
    Assign,
    Identifier,
    If,
    ImpSyntaxError,
    Lit,
    Lt,
    MixedSides,
    Mul,
    Not,
    OutOfFuel,
    Seq,
    Side,
    Skip,
    Sub,
    UnboundVariable,
    Var,
    While,
    eval_imp,
    free_reads,
    loops,
    one_line,
    parse_bool,
    parse_imp,
    rename,
    show_cmd,
    variables,
)

from strategies import commands, counting_loops, states

x, y = Identifier("x"), Identifier("y")
DOUBLE1 = """
z := 0; y := 0;
z := 2 * x;
while (z > 0) { z := z - 1; y := y + x }
"""


def test_parse_skip():
    assert parse_imp("skip") == SKIP


def test_parse_grammar_mapping():
    got = parse_imp("x := 1 + 2; while (x < 5) { x := x * 2 }")
    want = Seq(Assign(x, Add(Lit(1), Lit(2))), While(Lt(Var(x), Lit(5)), Assign(x, Mul(Var(x), Lit(2)))))
    assert got == want


def test_parse_double1_loop_body():
    c = parse_imp(DOUBLE1)
    (loop,) = list(loops(c))
    z = Identifier("z")
    assert loop.body == Seq(Assign(z, Sub(Var(z), Lit(1))), Assign(y, Add(Var(y), Var(x))))


def test_greater_than_desugars_to_lt():
    assert parse_bool("x > 0") == Lt(Lit(0), Var(x))
    assert parse_bool("x >= 0") == Not(Lt(Var(x), Lit(0)))


def test_if_without_else_is_if_skip():
    assert parse_imp("if (x < 1) { x := 1 }") == If(Lt(Var(x), Lit(1)), Assign(x, Lit(1)), SKIP)


@pytest.mark.parametrize("text", ["x := ", "while x < 1 { skip }", "if := 3", "x := 1 +", "{ skip"])
def test_syntax_errors_have_position(text):
    with pytest.raises(ImpSyntaxError) as e:
        parse_imp(text)
    assert e.value.line >= 1 and e.value.column >= 1


def test_sided_names():
    c = parse_imp("x_1 := y_2", sided=True)
    assert c == Assign(Identifier("x", Side.LEFT), Var(Identifier("y", Side.RIGHT)))
    assert parse_imp("x_1 := 0") == Assign(Identifier("x_1"), Lit(0))


@settings(max_examples=1000, deadline=None)
@given(commands())
def test_print_parse_round_trip(c):
    assert parse_imp(show_cmd(c)) == c
    assert parse_imp(one_line(c)) == c


def test_eval_skip():
    assert eval_imp({}, SKIP, 10) == {}


def test_eval_counting_loop():
    assert eval_imp({x: 3}, parse_imp("while (x > 0) { x := x - 1 }"), 100) == {x: 0}


def test_eval_double1_from_two():
    # the left program doubles x into z and adds x once per unit of z: y = 2 * x * x
    out = eval_imp({x: 2}, parse_imp(DOUBLE1), 1000)
    assert out[y] == 8 and out[Identifier("z")] == 0


def test_unbound_read_is_error():
    with pytest.raises(UnboundVariable):
        eval_imp({}, parse_imp("x := y"), 10)


def test_overflow_is_error():
    with pytest.raises(ArithmeticOverflow):
        eval_imp({x: INT_MAX}, parse_imp("x := x + 1"), 10)


def test_diverging_loop_runs_out_of_fuel():
    with pytest.raises(OutOfFuel):
        eval_imp({}, parse_imp("while (true) { skip }"), 1000)


def test_input_state_not_mutated():
    s = {x: 1}
    eval_imp(s, parse_imp("x := 5"), 10)
    assert s == {x: 1}


@settings(max_examples=300, deadline=None)
@given(commands(), states(), st.integers(1, 400))
def test_fuel_monotonic(c, s, fuel):
    """Any result reached with some fuel is reached, unchanged, with more."""
    try:
        out = eval_imp(s, c, fuel)
    except OutOfFuel:
        return
    except ArithmeticOverflow:
        with pytest.raises(ArithmeticOverflow):
            eval_imp(s, c, fuel * 2)
        return
    assert eval_imp(s, c, fuel * 2) == out


@settings(max_examples=300, deadline=None)
@given(counting_loops(), states(), st.integers(-50, 50))
def test_frame_untouched_variables(c, s, v):
    """Variables the program never mentions keep their value."""
    extra = Identifier("frame")
    s = {**s, extra: v}
    try:
        out = eval_imp(s, c, 10_000)
    except (OutOfFuel, ArithmeticOverflow):
        return
    assert out[extra] == v
    assert set(out) == set(s) | {a.target for a in _assigns(c)}


def _assigns(c):
    if isinstance(c, Assign):
        yield c
    elif isinstance(c, Seq):
        yield from _assigns(c.first)
        yield from _assigns(c.second)
    elif isinstance(c, If):
        # only assignments on the branch taken appear; be conservative
        return
    elif isinstance(c, While):
        return


def test_rename_single_assignment():
    assert rename(Assign(x, Lit(1)), Side.LEFT) == Assign(Identifier("x", Side.LEFT), Lit(1))


@given(commands())
def test_rename_idempotent(c):
    once = rename(c, Side.LEFT)
    assert rename(once, Side.LEFT) == once


def test_rename_sides_disjoint():
    c = parse_imp(DOUBLE1)
    assert not variables(rename(c, Side.LEFT)) & variables(rename(c, Side.RIGHT))


def test_rename_refuses_mixed_sides():
    with pytest.raises(MixedSides):
        rename(rename(parse_imp("x := 1"), Side.LEFT), Side.RIGHT)


def test_variables():
    assert variables(SKIP) == set()
    assert variables(Assign(x, Add(Var(x), Var(y)))) == {x, y}
    assert variables(parse_imp(DOUBLE1)) == {Identifier("z"), y, x}


def test_free_reads():
    assert free_reads(parse_imp("x := 1; y := x + z")) == {Identifier("z")}
    assert free_reads(parse_imp("if (a < 0) { x := 1 } else { skip }; y := x")) == {Identifier("a"), x}


def test_skip_instance_is_shared_type():
    assert isinstance(parse_imp("skip; skip"), (Seq, Skip))
