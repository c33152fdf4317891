"""Realignment laws as e-graph rewrites, basic-block wrapping, and rule fuzzing."""
from __future__ import annotations

import random
from dataclasses import dataclass, field

from .corerel import AlignedCommand, IfR, Pair, RelSeq, StatePair, WhileR, rel_equiv_test, show_rel
from .egraph import EGraph, EClassId, P, PNode, PVar, RewriteRule, Term, V, pattern_vars, substitute
from .imp import (
    SKIP,
    Add,
    And,
    Assign,
    Block,
    Identifier,
    If,
    Lit,
    Lt,
    Eq,
    Mul,
    Not,
    OriginTag,
    Seq,
    Side,
    Skip,
    Sub,
    TRUE,
    FALSE,
    Var,
    While,
    seq,
    seq_items,
    show,
)
from .terms import from_term, to_term

PLAIN, RUNOFF = OriginTag.PLAIN, OriginTag.RUNOFF

SKIP_P = P("skip")
TRUE_P = P("true")


def family(name: str) -> str:
    """Rule family: ``while-align[2:1]`` -> ``while-align``."""
    return name.split("[", 1)[0]


def _tag(st) -> str:
    return "1:1" if st is None else f"{st[0]}:{st[1]}"


# -- guards ------------------------------------------------------------------

def _has_skip(g: EGraph, cid: EClassId) -> bool:
    return any(n.op == "skip" for n in g.M[g.find(cid)].nodes)


def _no_skip(*names):
    def guard(g: EGraph, cid: EClassId, subst: dict) -> bool:
        return not any(_has_skip(g, subst[n]) for n in names)
    return guard


# -- pattern helpers ---------------------------------------------------------

def left(c) -> PNode:
    return P("pair", c, SKIP_P)


def right(c) -> PNode:
    return P("pair", SKIP_P, c)


def guarded(b, c, k: int) -> PNode:
    """Sequence of ``k`` copies of ``if b then c``."""
    one = P("if", b, c, SKIP_P)
    out = one
    for _ in range(k - 1):
        out = P("seq", one, out)
    return out


def while_align(n: int, m: int) -> tuple[PNode, PNode]:
    b1, b2, c1, c2 = V("b1"), V("b2"), V("c1"), V("c2")
    lhs = P("pair", P("while", b1, c1, data=PLAIN), P("while", b2, c2, data=PLAIN))
    rhs = P("relseq",
            P("whileR", b1, b2, P("pair", guarded(b1, c1, n), guarded(b2, c2, m)), data=(n, m)),
            P("relseq", left(P("while", b1, c1, data=RUNOFF)), right(P("while", b2, c2, data=RUNOFF))))
    return lhs, rhs


def if_align() -> tuple[PNode, PNode]:
    b1, b2, c1, c2, c3, c4 = (V(x) for x in ("b1", "b2", "c1", "c2", "c3", "c4"))
    lhs = P("pair", P("if", b1, c1, c2), P("if", b2, c3, c4))
    rhs = P("ifR", b1, b2, P("pair", c1, c3),
            P("ifR", b1, P("not", b2), P("pair", c1, c4),
              P("ifR", P("not", b1), b2, P("pair", c2, c3), P("pair", c2, c4))))
    return lhs, rhs


def guard_elim(n: int, m: int) -> tuple[PNode, PNode]:
    """Inside ``whileR <<b1|b2>>`` both conditions hold on entry to the body,
    so the first guard on each side is redundant."""
    b1, b2, c1, c2 = V("b1"), V("b2"), V("c1"), V("c2")

    def side(b, c, k, rest):
        one = P("if", b, c, SKIP_P)
        return (one, c) if k == 1 else (P("seq", one, V(rest)), P("seq", c, V(rest)))

    l_in, l_out = side(b1, c1, n, "restl")
    r_in, r_out = side(b2, c2, m, "restr")
    out_data = None if (n, m) == (1, 1) else (n, m)
    return (P("whileR", b1, b2, P("pair", l_in, r_in), data=(n, m)),
            P("whileR", b1, b2, P("pair", l_out, r_out), data=out_data))


def stutter_schedules(max_stutter: int) -> list:
    return [None] + [(n, m) for n in range(1, max_stutter + 1) for m in range(1, max_stutter + 1)]


# -- the rule set ------------------------------------------------------------

@dataclass(frozen=True)
class RuleSet:
    rules: tuple[RewriteRule, ...]
    enable_unrolling: bool = True
    enable_if_align: bool = True
    max_stutter: int = 3

    def __post_init__(self):
        names = [r.name for r in self.rules]
        if len(set(names)) != len(names):
            raise ValueError("rule names must be unique")

    def __iter__(self):
        return iter(self.rules)

    def __len__(self) -> int:
        return len(self.rules)

    def names(self) -> list[str]:
        return [r.name for r in self.rules]

    def families(self) -> list[str]:
        return list(dict.fromkeys(family(n) for n in self.names()))

    def get(self, name: str) -> RewriteRule:
        for r in self.rules:
            if r.name == name:
                return r
        raise KeyError(name)

    def without(self, *names: str) -> RuleSet:
        """Drop rules by exact name or by family."""
        drop = set(names)
        unknown = drop - set(self.names()) - set(self.families())
        if unknown:
            raise KeyError(f"unknown rules: {sorted(unknown)}")
        kept = tuple(r for r in self.rules if r.name not in drop and family(r.name) not in drop)
        return RuleSet(kept, self.enable_unrolling, self.enable_if_align, self.max_stutter)


def _both(name, lhs, rhs, guard=None, rev_guard=None) -> list[RewriteRule]:
    return [RewriteRule(name, lhs, rhs, guard), RewriteRule(name + "-rev", rhs, lhs, rev_guard)]


def corerel_rules(max_stutter: int = 3, enable_unrolling: bool = True,
                  enable_if_align: bool = True) -> RuleSet:
    if max_stutter < 1:
        raise ValueError("max_stutter must be at least 1")
    c1, c2, c3, b, b1, b2 = V("c1"), V("c2"), V("c3"), V("b"), V("b1"), V("b2")
    r, r1, r2, r3 = V("r"), V("r1"), V("r2"), V("r3")
    rules: list[RewriteRule] = []
    rules += _both("rel-def", P("pair", c1, c2), P("relseq", left(c1), right(c2)),
                   guard=_no_skip("c1", "c2"))
    rules += _both("hom-l", left(P("seq", c1, c2)), P("relseq", left(c1), left(c2)),
                   rev_guard=_no_skip("c1", "c2"))
    rules += _both("hom-r", right(P("seq", c1, c2)), P("relseq", right(c1), right(c2)),
                   rev_guard=_no_skip("c1", "c2"))
    if enable_unrolling:
        w = P("while", b, c1, data=PLAIN)
        rules.append(RewriteRule("unroll-l", left(w), left(P("seq", P("if", b, c1, SKIP_P), w))))
        rules.append(RewriteRule("unroll-r", right(w), right(P("seq", P("if", b, c1, SKIP_P), w))))
    rules += _both("rel-comm", P("relseq", left(c1), right(c2)), P("relseq", right(c2), left(c1)))
    rules += _both("rel-assoc", P("relseq", r1, P("relseq", r2, r3)), P("relseq", P("relseq", r1, r2), r3))
    for n in range(1, max_stutter + 1):
        for m in range(1, max_stutter + 1):
            rules += _both(f"while-align[{n}:{m}]", *while_align(n, m))
    for n in range(1, max_stutter + 1):
        for m in range(1, max_stutter + 1):
            rules.append(RewriteRule(f"guard-elim[{n}:{m}]", *guard_elim(n, m)))
    if enable_if_align:
        rules += _both("if-align", *if_align())
    if enable_unrolling:
        for st in stutter_schedules(max_stutter):
            loop = P("whileR", b1, b2, r, data=st)
            rules.append(RewriteRule(f"unroll-both[{_tag(st) if st else 'plain'}]", loop,
                                     P("relseq", P("ifR", b1, b2, r, P("pair", SKIP_P, SKIP_P)), loop)))
    rules += _both("cond-l", P("pair", P("if", b1, c1, c2), c3),
                   P("ifR", b1, TRUE_P, P("pair", c1, c3), P("pair", c2, c3)))
    rules += _both("cond-r", P("pair", c1, P("if", b1, c2, c3)),
                   P("ifR", TRUE_P, b1, P("pair", c1, c2), P("pair", c1, c3)))
    return RuleSet(tuple(rules), enable_unrolling, enable_if_align, max_stutter)


def mutant_rules() -> list[RewriteRule]:
    """Deliberately unsound variants; the soundness fuzz must reject each."""
    c1, c2, c3, b, b1, b2, r = V("c1"), V("c2"), V("c3"), V("b"), V("b1"), V("b2"), V("r")
    wa_lhs, _ = while_align(1, 1)
    ia_lhs, _ = if_align()
    c4 = V("c4")
    return [
        RewriteRule("same-side-comm", P("relseq", left(c1), left(c2)), P("relseq", left(c2), left(c1))),
        RewriteRule("while-align-no-runoff", wa_lhs,
                    P("whileR", b1, b2, P("pair", guarded(b1, c1, 1), guarded(b2, c2, 1)), data=(1, 1))),
        RewriteRule("if-align-swapped", ia_lhs,
                    P("ifR", b1, b2, P("pair", c1, c3),
                      P("ifR", b1, P("not", b2), P("pair", c1, c4),
                        P("ifR", P("not", b1), b2, P("pair", c2, c4), P("pair", c2, c3))))),
        RewriteRule("unroll-l-unguarded", left(P("while", b, c1, data=PLAIN)),
                    left(P("seq", c1, P("while", b, c1, data=PLAIN)))),
        RewriteRule("cond-l-swapped", P("pair", P("if", b1, c1, c2), c3),
                    P("ifR", b1, TRUE_P, P("pair", c2, c3), P("pair", c1, c3))),
        RewriteRule("unroll-both-unguarded", P("whileR", b1, b2, r),
                    P("relseq", r, P("whileR", b1, b2, r))),
        RewriteRule("rel-def-drop-right", P("pair", c1, c2),
                    P("relseq", left(c1), P("pair", SKIP_P, SKIP_P))),
        RewriteRule("hom-l-swapped", left(P("seq", c1, c2)), P("relseq", left(c2), left(c1))),
    ]


# -- basic blocks ------------------------------------------------------------

def blockify_cmd(c):
    """Wrap maximal runs of two or more assignments in a Block."""
    if isinstance(c, While):
        return While(c.cond, blockify_cmd(c.body), c.origin)
    if isinstance(c, If):
        return If(c.cond, blockify_cmd(c.then), blockify_cmd(c.orelse))
    if not isinstance(c, Seq):
        return c
    out, run = [], []

    def flush():
        if len(run) >= 2:
            out.append(Block(seq(*run)))
        else:
            out.extend(run)
        run.clear()

    for item in seq_items(c):
        if isinstance(item, Assign):
            run.append(item)
        else:
            flush()
            out.append(blockify_cmd(item))
    flush()
    return seq(*out)


def basic_blockify(r: AlignedCommand) -> AlignedCommand:
    if isinstance(r, Pair):
        return Pair(blockify_cmd(r.left), blockify_cmd(r.right))
    if isinstance(r, RelSeq):
        return RelSeq(basic_blockify(r.first), basic_blockify(r.second))
    if isinstance(r, IfR):
        return IfR(r.cond1, r.cond2, basic_blockify(r.then), basic_blockify(r.orelse))
    if isinstance(r, WhileR):
        return WhileR(r.cond1, r.cond2, basic_blockify(r.body), r.stutter)
    return blockify_cmd(r)


# -- soundness fuzzing -------------------------------------------------------

CMD, BOOL, ALIGNED = "cmd", "bool", "aligned"


def pattern_sorts(p, sort=(ALIGNED, None), out=None) -> dict[str, tuple]:
    """Infer (kind, side) for each pattern variable from its position."""
    out = {} if out is None else out
    kind, side = sort
    if isinstance(p, PVar):
        if out.setdefault(p.name, sort) != sort:
            raise ValueError(f"variable {p.name} used at sorts {out[p.name]} and {sort}")
        return out
    L, R = Side.LEFT, Side.RIGHT
    kids = {
        "pair": [(CMD, L), (CMD, R)],
        "relseq": [(ALIGNED, None)] * 2,
        "ifR": [(BOOL, L), (BOOL, R), (ALIGNED, None), (ALIGNED, None)],
        "whileR": [(BOOL, L), (BOOL, R), (ALIGNED, None)],
        "seq": [(CMD, side)] * 2,
        "while": [(BOOL, side), (CMD, side)],
        "if": [(BOOL, side), (CMD, side), (CMD, side)],
        "block": [(CMD, side)],
        "not": [(BOOL, side)],
        "and": [(BOOL, side)] * 2,
    }.get(p.op, [])
    for a, s in zip(p.args, kids):
        pattern_sorts(a, s, out)
    return out


POOL = ("a", "b", "c")


class ProgramGen:
    """Random small programs over a three-variable pool per side.

    Loops are biased to terminate: conditions usually test a per-side focus
    counter and command bodies usually decrement it.
    """

    def __init__(self, rng: random.Random, max_depth: int = 2):
        self.rng = rng
        self.max_depth = max_depth
        self.focus = {Side.LEFT: rng.choice(POOL), Side.RIGHT: rng.choice(POOL)}

    def ident(self, side, name=None):
        return Identifier(name or self.rng.choice(POOL), side)

    def int_expr(self, side, depth=0):
        rng = self.rng
        k = rng.random()
        if depth >= 2 or k < 0.3:
            return Lit(rng.randint(-3, 3))
        if k < 0.6:
            return Var(self.ident(side))
        if k < 0.9:
            op = rng.choice((Add, Sub))
            return op(self.int_expr(side, depth + 1), self.int_expr(side, depth + 1))
        return Mul(Lit(rng.choice((-2, 2, 3))), Var(self.ident(side)))

    def bool_expr(self, side, depth=0):
        rng = self.rng
        k = rng.random()
        f = Var(self.ident(side, self.focus[side]))
        if k < 0.45:
            return Lt(Lit(rng.randint(-1, 2)), f)
        if k < 0.6:
            return Lt(Var(self.ident(side)), Var(self.ident(side)))
        if k < 0.7:
            return Eq(Var(self.ident(side)), Lit(rng.randint(-2, 2)))
        if k < 0.78 and depth < 2:
            return Not(self.bool_expr(side, depth + 1))
        if k < 0.88 and depth < 2:
            return And(self.bool_expr(side, depth + 1), self.bool_expr(side, depth + 1))
        return rng.choice((TRUE, FALSE))

    def loop_cond(self, side):
        """Condition bounded by the focus counter, so loops counting it down stop."""
        f = Var(self.ident(side, self.focus[side]))
        bound = Lt(Lit(self.rng.randint(-1, 2)), f)
        return bound if self.rng.random() < 0.7 else And(bound, self.bool_expr(side, 1))

    def assign(self, side, protected=()):
        names = [n for n in POOL if n not in protected]
        if not names:
            return SKIP
        if self.focus[side] in names and self.rng.random() < 0.5:
            f = self.ident(side, self.focus[side])
            return Assign(f, Sub(Var(f), Lit(self.rng.randint(1, 2))))
        target = self.ident(side, self.rng.choice(names))
        return Assign(target, self.int_expr(side))

    def cmd(self, side, depth=0, protected=()):
        rng = self.rng
        k = rng.random()
        if depth >= self.max_depth or k < 0.15:
            return SKIP if rng.random() < 0.3 else self.assign(side, protected)
        if k < 0.45:
            return self.assign(side, protected)
        if k < 0.7:
            return Seq(self.cmd(side, depth + 1, protected), self.cmd(side, depth + 1, protected))
        if k < 0.85:
            return If(self.bool_expr(side), self.cmd(side, depth + 1, protected),
                      self.cmd(side, depth + 1, protected))
        # self-contained counting loop
        free = [n for n in POOL if n not in protected]
        if not free:
            return self.assign(side, protected)
        v = self.ident(side, rng.choice(free))
        body = Seq(self.cmd(side, depth + 1, tuple(protected) + (v.name,)), Assign(v, Sub(Var(v), Lit(1))))
        return While(Lt(Lit(0), Var(v)), body)

    def loop_body(self, side):
        """Command that counts the focus variable down and leaves it alone otherwise."""
        f = self.ident(side, self.focus[side])
        step = Assign(f, Sub(Var(f), Lit(self.rng.choice((1, 1, 2)))))
        return Seq(self.cmd(side, 1, (f.name,)), step)

    def aligned(self, depth=0, in_loop=False):
        """Random alignment; inside a loop it ends by counting both focus variables down."""
        rng = self.rng
        L, R = Side.LEFT, Side.RIGHT
        if in_loop:
            keep = {L: (self.focus[L],), R: (self.focus[R],)}
            step = Pair(self.loop_body(L), self.loop_body(R))
            return step if rng.random() < 0.5 else RelSeq(self._aligned(depth + 1, keep), step)
        return self._aligned(depth, {L: (), R: ()})

    def _aligned(self, depth, keep):
        rng = self.rng
        k = rng.random()
        L, R = Side.LEFT, Side.RIGHT
        if depth >= 2 or k < 0.5:
            return Pair(self.cmd(L, 1, keep[L]), self.cmd(R, 1, keep[R]))
        if k < 0.7:
            return RelSeq(self._aligned(depth + 1, keep), self._aligned(depth + 1, keep))
        if k < 0.85:
            return IfR(self.bool_expr(L), self.bool_expr(R),
                       self._aligned(depth + 1, keep), self._aligned(depth + 1, keep))
        if keep[L] or keep[R]:
            return Pair(self.cmd(L, 1, keep[L]), self.cmd(R, 1, keep[R]))
        return WhileR(self.loop_cond(L), self.loop_cond(R), Pair(self.loop_body(L), self.loop_body(R)))

    def for_sort(self, sort, in_loop: bool):
        kind, side = sort
        if kind == BOOL:
            return self.loop_cond(side) if in_loop else self.bool_expr(side)
        if kind == CMD:
            return self.loop_body(side) if in_loop else self.cmd(side)
        return self.aligned(in_loop=in_loop)

    def states(self, n: int) -> list[StatePair]:
        out = []
        for _ in range(n):
            out.append(StatePair({Identifier(v, Side.LEFT): self.rng.randint(-4, 8) for v in POOL},
                                 {Identifier(v, Side.RIGHT): self.rng.randint(-4, 8) for v in POOL}))
        return out


def _loop_vars(p, inside=False, out=None) -> set[str]:
    out = set() if out is None else out
    if isinstance(p, PVar):
        if inside:
            out.add(p.name)
    else:
        loopish = p.op in ("while", "whileR")
        for a in p.args:
            _loop_vars(a, inside or loopish, out)
    return out


@dataclass
class SoundnessReport:
    rule: str
    trials: int
    counterexamples: int = 0
    inconclusive_states: int = 0
    checked_states: int = 0
    witness: dict | None = None

    @property
    def sound(self) -> bool:
        return self.counterexamples == 0


def instantiate(rule: RewriteRule, binding: dict) -> tuple[AlignedCommand, AlignedCommand]:
    terms = {k: to_term(v) for k, v in binding.items()}
    return from_term(substitute(rule.lhs, terms)), from_term(substitute(rule.rhs, terms))


def _shrink_candidates(x) -> list:
    """Smaller values of the same sort to try in place of ``x``."""
    if isinstance(x, (Lt, Eq)):
        return [TRUE, FALSE]
    if isinstance(x, Not):
        return [TRUE, FALSE, x.arg]
    if isinstance(x, And):
        return [TRUE, FALSE, x.lhs, x.rhs]
    if isinstance(x, Seq):
        return [SKIP, x.first, x.second]
    if isinstance(x, If):
        return [SKIP, x.then, x.orelse]
    if isinstance(x, (While, Block)):
        return [SKIP, x.body]
    if isinstance(x, Assign):
        return [SKIP]
    empty = Pair(SKIP, SKIP)
    if isinstance(x, RelSeq):
        return [empty, x.first, x.second]
    if isinstance(x, IfR):
        return [empty, x.then, x.orelse]
    if isinstance(x, WhileR):
        return [empty, x.body]
    if isinstance(x, Pair) and x != empty:
        return [c for c in (empty, Pair(SKIP, x.right), Pair(x.left, SKIP)) if c != x]
    return []


def minimize(rule: RewriteRule, binding: dict, state: StatePair, fuel: int) -> dict:
    """Greedy shrink of a failing instantiation; returns the smallest found."""
    def fails(bd):
        try:
            lhs, rhs = instantiate(rule, bd)
        except (TypeError, ValueError):
            return False
        return not rel_equiv_test(lhs, rhs, [state], fuel).equivalent

    binding = dict(binding)
    progress = True
    while progress:
        progress = False
        for name in sorted(binding):
            for cand in _shrink_candidates(binding[name]):
                trial = {**binding, name: cand}
                if fails(trial):
                    binding = trial
                    progress = True
                    break
    lhs, rhs = instantiate(rule, binding)
    return {"binding": {k: show(v) if not isinstance(v, (Pair, RelSeq, IfR, WhileR)) else show_rel(v)
                        for k, v in sorted(binding.items())},
            "lhs": show_rel(lhs), "rhs": show_rel(rhs),
            "state": {str(k): v for k, v in sorted({**state.left, **state.right}.items())}}


def check_rule_soundness(rule: RewriteRule, trials: int = 500, seed: int = 0, states: int = 16,
                         fuel: int = 10_000, stop_at_first: bool = False) -> SoundnessReport:
    """Differentially test ``lhs == rhs`` on random instantiations."""
    rng = random.Random(f"{rule.name}/{seed}")
    sorts = pattern_sorts(rule.lhs)
    in_loop = _loop_vars(rule.lhs)
    report = SoundnessReport(rule.name, trials)
    for _ in range(trials):
        gen = ProgramGen(rng)
        binding = {v: gen.for_sort(sorts[v], v in in_loop) for v in pattern_vars(rule.lhs)}
        lhs, rhs = instantiate(rule, binding)
        sps = gen.states(states)
        res = rel_equiv_test(lhs, rhs, sps, fuel)
        report.inconclusive_states += res.inconclusive
        report.checked_states += len(sps) - res.inconclusive
        if not res.equivalent:
            report.counterexamples += 1
            if report.witness is None:
                report.witness = minimize(rule, binding, res.counterexample, fuel)
            if stop_at_first:
                break
    return report
