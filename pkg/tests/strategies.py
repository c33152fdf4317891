"""Hypothesis strategies for Imp and CoreRel syntax."""
from hypothesis import strategies as st

from relign.corerel import IfR, Pair, RelSeq, StatePair, WhileR
from relign.imp import (
    FALSE,
    SKIP,
    TRUE,
    Add,
    And,
    Assign,
    Eq,
    Identifier,
    If,
    Lit,
    Lt,
    Mul,
    Not,
    Seq,
    Side,
    Sub,
    Var,
    While,
)

NAMES = ("a", "b", "c")


def idents(side=Side.NEUTRAL):
    return st.sampled_from(NAMES).map(lambda n: Identifier(n, side))


def int_exprs(side=Side.NEUTRAL):
    leaf = st.one_of(st.integers(-5, 9).map(Lit), idents(side).map(Var))
    return st.recursive(
        leaf,
        lambda sub: st.tuples(st.sampled_from((Add, Sub, Mul)), sub, sub).map(lambda t: t[0](t[1], t[2])),
        max_leaves=6,
    )


def bool_exprs(side=Side.NEUTRAL):
    ints = int_exprs(side)
    leaf = st.one_of(
        st.just(TRUE), st.just(FALSE),
        st.builds(Eq, ints, ints), st.builds(Lt, ints, ints),
    )
    return st.recursive(leaf, lambda sub: st.one_of(st.builds(Not, sub), st.builds(And, sub, sub)), max_leaves=4)


def commands(side=Side.NEUTRAL, loops=True):
    """Arbitrary commands; loops may diverge, so evaluate them with bounded fuel."""
    leaf = st.one_of(st.just(SKIP), st.builds(Assign, idents(side), int_exprs(side)))

    def extend(sub):
        opts = [st.builds(Seq, sub, sub), st.builds(If, bool_exprs(side), sub, sub)]
        if loops:
            opts.append(st.builds(While, bool_exprs(side), sub))
        return st.one_of(*opts)

    return st.recursive(leaf, extend, max_leaves=8)


def counting_loops(side=Side.NEUTRAL):
    """Terminating commands: each loop counts a variable the body never writes."""
    straight = commands(side, loops=False)

    @st.composite
    def build(draw):
        v = draw(st.sampled_from(NAMES))
        others = [n for n in NAMES if n != v]
        body_target = draw(st.sampled_from(others))
        counter = Identifier(v, side)
        body = Seq(Assign(Identifier(body_target, side), draw(int_exprs(side))),
                   Assign(counter, Sub(Var(counter), Lit(1))))
        loop = While(Lt(Lit(0), Var(counter)), body)
        pre = draw(straight)
        return Seq(pre, loop) if draw(st.booleans()) else loop

    return st.one_of(straight, build())


def states(side=Side.NEUTRAL, lo=-6, hi=9):
    return st.fixed_dictionaries({Identifier(n, side): st.integers(lo, hi) for n in NAMES})


def state_pairs():
    return st.builds(StatePair, states(Side.LEFT), states(Side.RIGHT))


def alignments(max_leaves=5):
    """Terminating CoreRel terms over side-tagged variables."""
    pair = st.builds(Pair, counting_loops(Side.LEFT), counting_loops(Side.RIGHT))

    def extend(sub):
        return st.one_of(
            st.builds(RelSeq, sub, sub),
            st.builds(IfR, bool_exprs(Side.LEFT), bool_exprs(Side.RIGHT), sub, sub),
        )

    return st.recursive(pair, extend, max_leaves=max_leaves)


def lockstep_whiles():
    """WhileR nodes whose bodies count both loop variables down."""
    @st.composite
    def build(draw):
        a1, a2 = Identifier("a", Side.LEFT), Identifier("a", Side.RIGHT)
        b1 = Lt(Lit(draw(st.integers(-1, 1))), Var(a1))
        b2 = Lt(Lit(draw(st.integers(-1, 1))), Var(a2))
        c1 = Seq(Assign(Identifier("b", Side.LEFT), draw(int_exprs(Side.LEFT))), Assign(a1, Sub(Var(a1), Lit(1))))
        c2 = Seq(Assign(Identifier("c", Side.RIGHT), draw(int_exprs(Side.RIGHT))), Assign(a2, Sub(Var(a2), Lit(1))))
        return WhileR(b1, b2, Pair(c1, c2))
    return build()
