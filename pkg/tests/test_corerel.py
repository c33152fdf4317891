import random

import pytest
from hypothesis import given, settings

from relign.corerel import (
    DomainClash,
    IfR,
    Pair,
    RelSeq,
    StatePair,
    WhileR,
    aligned_whiles,
    as_while_st,
    desugar_while_st,
    embed,
    eval_rel,
    rel_equiv_test,
    reify,
    relseq,
    show_rel,
)
from relign.imp import (
    FALSE,
    SKIP,
    TRUE,
    And,
    Assign,
    Identifier,
    If,
    Lit,
    OriginTag,
    OutOfFuel,
    Seq,
    Side,
    While,
    eval_imp,
    parse_bool,
    parse_imp,
    rename,
    variables,
)

from strategies import alignments, counting_loops, lockstep_whiles, state_pairs, states

L, R = Side.LEFT, Side.RIGHT


def sided(text):
    return parse_imp(text, sided=True)


def ident(name, side):
    return Identifier(name, side)


DOUBLE1 = "z := 0; y := 0; z := 2 * x; while (z > 0) { z := z - 1; y := y + x }"
DOUBLE2 = "z := 0; y := 0; z := x; while (z > 0) { z := z - 1; y := y + x }; y := 2 * y"


def test_embed_skip():
    assert embed(SKIP, SKIP) == Pair(SKIP, SKIP)


def test_embed_renames_each_side():
    c1, c2 = parse_imp(DOUBLE1), parse_imp(DOUBLE2)
    r = embed(c1, c2)
    assert r == Pair(rename(c1, L), rename(c2, R))
    assert not variables(r.left) & variables(r.right)


def test_embed_assignments_from_empty_states():
    r = embed(parse_imp("x := 2"), parse_imp("y := 3"))
    assert eval_rel(StatePair(), r, 10) == StatePair({ident("x", L): 2}, {ident("y", R): 3})


def test_eval_pair():
    r = Pair(sided("x_1 := 2"), sided("y_2 := 3"))
    assert eval_rel(StatePair(), r, 10) == StatePair({ident("x", L): 2}, {ident("y", R): 3})


def test_while_r_stops_when_either_condition_fails():
    r = WhileR(parse_bool("i_1 > 0", True), parse_bool("i_2 > 0", True),
               Pair(sided("i_1 := i_1 - 1"), sided("i_2 := i_2 - 1")))
    out = eval_rel(StatePair({ident("i", L): 3}, {ident("i", R): 2}), r, 100)
    assert out == StatePair({ident("i", L): 1}, {ident("i", R): 0})


@given(state_pairs())
def test_if_r_false_true_takes_else(sp):
    r1 = Pair(sided("a_1 := 1"), SKIP)
    r2 = Pair(SKIP, sided("a_2 := 7"))
    assert eval_rel(sp, IfR(FALSE, TRUE, r1, r2), 10) == eval_rel(sp, r2, 10)


def test_state_pair_domains_disjoint():
    with pytest.raises(DomainClash):
        StatePair({ident("x", L): 1}, {ident("x", L): 2})


def test_desugar_while_st_base_case():
    b1, b2 = parse_bool("a_1 > 0", True), parse_bool("a_2 > 0", True)
    c1, c2 = sided("a_1 := a_1 - 1"), sided("a_2 := a_2 - 1")
    w = desugar_while_st(1, 1, b1, b2, c1, c2)
    assert (w.cond1, w.cond2, w.body) == (b1, b2, Pair(If(b1, c1, SKIP), If(b2, c2, SKIP)))


def test_desugar_while_st_two_one():
    b1, b2 = parse_bool("z_1 > 0", True), parse_bool("z_2 > 0", True)
    c1 = sided("z_1 := z_1 - 1; y_1 := y_1 + x_1")
    c2 = sided("z_2 := z_2 - 1; y_2 := y_2 + x_2")
    w = desugar_while_st(2, 1, b1, b2, c1, c2)
    assert w.body.left == Seq(If(b1, c1, SKIP), If(b1, c1, SKIP))
    assert w.body.right == If(b2, c2, SKIP)
    assert as_while_st(w) == (2, 1, c1, c2)
    with pytest.raises(ValueError):
        desugar_while_st(0, 1, b1, b2, c1, c2)


def double3_alignment():
    b1, b2 = parse_bool("z_1 > 0", True), parse_bool("z_2 > 0", True)
    c1 = sided("z_1 := z_1 - 1; y_1 := y_1 + x_1")
    c2 = sided("z_2 := z_2 - 1; y_2 := y_2 + x_2")
    return relseq(
        Pair(sided("z_1 := 0; y_1 := 0; z_1 := 2 * x_1"), sided("z_2 := 0; y_2 := 0; z_2 := x_2")),
        desugar_while_st(2, 1, b1, b2, c1, c2),
        Pair(SKIP, sided("y_2 := 2 * y_2")),
    )


# the fused program as printed for double1/double2, transcribed by hand
DOUBLE3 = """
y_1 := 0; y_2 := 0;
z_1 := 2 * x_1; z_2 := x_2;
while (z_2 > 0) {
  z_1 := z_1 - 1; y_1 := y_1 + x_1; z_1 := z_1 - 1; y_1 := y_1 + x_1;
  z_2 := z_2 - 1; y_2 := y_2 + x_2
};
y_2 := 2 * y_2
"""


def test_reified_two_one_matches_hand_fused_program():
    prog = reify(double3_alignment())
    ref = sided(DOUBLE3)
    rng = random.Random(7)
    for _ in range(100):
        v = rng.randint(0, 40)
        s = {ident("x", L): v, ident("x", R): v}
        assert eval_imp(s, prog, 100_000) == eval_imp(s, ref, 100_000)


def test_reify_pair():
    c1, c2 = sided("a_1 := 1"), sided("b_2 := 2")
    assert reify(Pair(c1, c2)) == Seq(c1, c2)


def test_reify_relseq_and_while_r():
    p = Pair(sided("a_1 := 1"), SKIP)
    q = Pair(SKIP, sided("b_2 := 2"))
    assert reify(RelSeq(p, q)) == Seq(reify(p), reify(q))
    b1, b2 = parse_bool("a_1 < 3", True), parse_bool("b_2 < 3", True)
    assert reify(WhileR(b1, b2, p)) == While(And(b1, b2), reify(p), OriginTag.RELATIONAL)


def test_equiv_reflexive():
    r = double3_alignment()
    sps = [StatePair({ident("x", L): v}, {ident("x", R): v}) for v in range(10)]
    assert rel_equiv_test(r, r, sps, 10_000).verdicts == ["equal"] * 10


def test_equiv_rel_comm():
    c1, c2 = sided("a_1 := 1; b_1 := a_1 + c_1"), sided("a_2 := c_2 * 2")
    naive = Pair(c1, c2)
    commuted = RelSeq(Pair(SKIP, c2), Pair(c1, SKIP))
    rng = random.Random(3)
    sps = [StatePair({ident(n, L): rng.randint(-9, 9) for n in "abc"},
                     {ident(n, R): rng.randint(-9, 9) for n in "abc"}) for _ in range(100)]
    assert rel_equiv_test(naive, commuted, sps, 1000).equivalent


def test_equiv_detects_swapped_programs():
    c1 = Assign(ident("x", L), Lit(1))
    rep = rel_equiv_test(Pair(c1, SKIP), Pair(SKIP, SKIP), [StatePair({ident("x", L): 0}, {})], 10)
    assert not rep.equivalent and rep.counterexample is not None


def test_equiv_divergence_is_inconclusive():
    loop = Pair(sided("while (true) { skip }"), SKIP)
    rep = rel_equiv_test(loop, Pair(SKIP, SKIP), [StatePair()], 100)
    assert rep.verdicts == ["inconclusive"] and rep.equivalent


@settings(max_examples=300, deadline=None)
@given(counting_loops(), counting_loops(), states(L), states(R))
def test_embedding_runs_each_side_independently(c1, c2, s1, s2):
    """<<c1|c2>> from (s1,s2) yields (c1 from s1, c2 from s2)."""
    r = embed(c1, c2)
    try:
        left = eval_imp(s1, r.left, 10_000)
        right = eval_imp(s2, r.right, 10_000)
    except OutOfFuel:
        return
    except Exception as e:  # run-time errors must match too
        with pytest.raises(type(e)):
            eval_rel(StatePair(s1, s2), r, 10_000)
        return
    assert eval_rel(StatePair(s1, s2), r, 20_000) == StatePair(left, right)


@settings(max_examples=300, deadline=None)
@given(alignments(), state_pairs())
def test_reify_coherent(r, sp):
    """Running the reified program on the merged state agrees with eval_rel."""
    try:
        want = eval_rel(sp, r, 10_000)
    except OutOfFuel:
        return
    except Exception as e:
        with pytest.raises(type(e)):
            eval_imp(sp.merged(), reify(r), 10_000)
        return
    assert eval_imp(sp.merged(), reify(r), 20_000) == want.merged()


@settings(max_examples=100, deadline=None)
@given(lockstep_whiles(), state_pairs())
def test_while_r_coherent(w, sp):
    want = eval_rel(sp, w, 10_000)
    assert eval_imp(sp.merged(), reify(w), 20_000) == want.merged()


def test_aligned_whiles_preorder():
    w = desugar_while_st(2, 1, TRUE, TRUE, SKIP, SKIP)
    r = relseq(Pair(SKIP, SKIP), w, IfR(TRUE, TRUE, WhileR(FALSE, FALSE, Pair(SKIP, SKIP)), Pair(SKIP, SKIP)))
    assert [x.stutter for x in aligned_whiles(r)] == [(2, 1), None]


def test_show_rel_marks_one_sided_pairs():
    text = show_rel(RelSeq(Pair(sided("a_1 := 1"), SKIP), Pair(SKIP, sided("b_2 := 1"))))
    assert text == "<<a_1 := 1|];; [|b_2 := 1>>"
