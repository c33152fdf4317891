"""Aligned commands: relational big-step semantics, embedding and reification."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

from .imp import (
    SKIP,
    And,
    BoolExpr,
    Command,
    EvalError,
    Identifier,
    If,
    Machine,
    OriginTag,
    OutOfFuel,
    Seq,
    Side,
    Skip,
    State,
    While,
    cmd_size,
    eval_bool,
    one_line,
    rename,
    seq,
    seq_items_shallow,
    show_bool,
    variables,
)


@dataclass(frozen=True, slots=True)
class Pair:
    """``<<left | right>>``: both programs run independently."""

    left: Command
    right: Command


@dataclass(frozen=True, slots=True)
class RelSeq:
    first: AlignedCommand
    second: AlignedCommand


@dataclass(frozen=True, slots=True)
class IfR:
    cond1: BoolExpr
    cond2: BoolExpr
    then: AlignedCommand
    orelse: AlignedCommand


@dataclass(frozen=True, slots=True)
class WhileR:
    """Lockstep loop. ``stutter`` keeps the (n, m) schedule it was desugared from."""

    cond1: BoolExpr
    cond2: BoolExpr
    body: AlignedCommand
    stutter: tuple[int, int] | None = None


AlignedCommand = Union[Pair, RelSeq, IfR, WhileR]


class DomainClash(ValueError):
    pass


@dataclass(frozen=True)
class StatePair:
    left: State = field(default_factory=dict)
    right: State = field(default_factory=dict)

    def __post_init__(self):
        clash = self.left.keys() & self.right.keys()
        if clash:
            raise DomainClash(f"state domains overlap on {sorted(map(str, clash))}")

    def merged(self) -> State:
        return {**self.left, **self.right}

    def restrict(self, s: State) -> StatePair:
        """Split a merged state back along this pair's (final) side assignment."""
        left = {k: v for k, v in s.items() if k.side is not Side.RIGHT}
        right = {k: v for k, v in s.items() if k.side is Side.RIGHT}
        return StatePair(left, right)


def merge(sp: StatePair) -> State:
    return sp.merged()


def split(s: State) -> StatePair:
    """Split a merged state by identifier side (neutral names go left)."""
    return StatePair().restrict(s)


# -- construction ------------------------------------------------------------

def embed(c1: Command, c2: Command) -> Pair:
    """The naive alignment ``<<c1 | c2>>`` over side-renamed programs."""
    return Pair(rename(c1, Side.LEFT), rename(c2, Side.RIGHT))


def left_only(c: Command) -> Pair:
    return Pair(c, SKIP)


def right_only(c: Command) -> Pair:
    return Pair(SKIP, c)


def relseq(*rs: AlignedCommand) -> AlignedCommand:
    out = rs[-1]
    for r in reversed(rs[:-1]):
        out = RelSeq(r, out)
    return out


def stutter_body(n: int, m: int, b1: BoolExpr, b2: BoolExpr, c1: Command, c2: Command) -> Pair:
    return Pair(seq(*[If(b1, c1, SKIP)] * n), seq(*[If(b2, c2, SKIP)] * m))


def desugar_while_st(n: int, m: int, b1: BoolExpr, b2: BoolExpr, c1: Command, c2: Command) -> WhileR:
    """``whileSt n m <<b1|b2>> <<c1|c2>>``: n guarded left bodies against m right ones."""
    if n < 1 or m < 1:
        raise ValueError(f"stutter counts must be positive, got ({n}, {m})")
    return WhileR(b1, b2, stutter_body(n, m, b1, b2, c1, c2), (n, m))


def as_while_st(r: AlignedCommand):
    """Recover ``(n, m, c1, c2)`` if ``r`` is literally a desugared whileSt."""
    if not isinstance(r, WhileR) or not isinstance(r.body, Pair):
        return None
    sides = []
    for cmd, b in ((r.body.left, r.cond1), (r.body.right, r.cond2)):
        items = seq_items_shallow(cmd) if isinstance(cmd, Seq) else [cmd]
        first = items[0]
        if not (isinstance(first, If) and first.cond == b and isinstance(first.orelse, Skip)):
            return None
        if any(x != first for x in items):
            return None
        sides.append((len(items), first.then))
    (n, c1), (m, c2) = sides
    return n, m, c1, c2


def aligned_size(r: AlignedCommand) -> int:
    if isinstance(r, Pair):
        return 1 + cmd_size(r.left) + cmd_size(r.right)
    if isinstance(r, RelSeq):
        return 1 + aligned_size(r.first) + aligned_size(r.second)
    if isinstance(r, IfR):
        return 1 + cmd_size(r.cond1) + cmd_size(r.cond2) + aligned_size(r.then) + aligned_size(r.orelse)
    if isinstance(r, WhileR):
        return 1 + cmd_size(r.cond1) + cmd_size(r.cond2) + aligned_size(r.body)
    raise TypeError(f"not an aligned command: {r!r}")


def aligned_vars(r: AlignedCommand) -> set[Identifier]:
    if isinstance(r, Pair):
        return variables(r.left) | variables(r.right)
    if isinstance(r, RelSeq):
        return aligned_vars(r.first) | aligned_vars(r.second)
    if isinstance(r, IfR):
        return variables(r.cond1) | variables(r.cond2) | aligned_vars(r.then) | aligned_vars(r.orelse)
    if isinstance(r, WhileR):
        return variables(r.cond1) | variables(r.cond2) | aligned_vars(r.body)
    raise TypeError(f"not an aligned command: {r!r}")


def aligned_whiles(r: AlignedCommand):
    """Every WhileR node of ``r`` in preorder."""
    stack = [r]
    while stack:
        r = stack.pop()
        if isinstance(r, WhileR):
            yield r
            stack.append(r.body)
        elif isinstance(r, RelSeq):
            stack += [r.second, r.first]
        elif isinstance(r, IfR):
            stack += [r.orelse, r.then]


# -- semantics ---------------------------------------------------------------

def run_rel(m: Machine, left: State, right: State, r: AlignedCommand) -> None:
    """Execute ``r`` in place on the two component states."""
    while True:
        m.burn()
        if isinstance(r, Pair):
            m.run(left, r.left)
            m.run(right, r.right)
        elif isinstance(r, RelSeq):
            run_rel(m, left, right, r.first)
            r = r.second
            continue
        elif isinstance(r, WhileR):
            b1, b2, body = r.cond1, r.cond2, r.body
            while eval_bool(left, b1) and eval_bool(right, b2):
                m.burn()
                run_rel(m, left, right, body)
        elif isinstance(r, IfR):
            both = eval_bool(left, r.cond1) and eval_bool(right, r.cond2)
            r = r.then if both else r.orelse
            continue
        else:
            raise TypeError(f"not an aligned command: {r!r}")
        return


def eval_rel(sp: StatePair, r: AlignedCommand, fuel: int) -> StatePair:
    """Relational big-step evaluation; raises OutOfFuel or EvalError."""
    left, right = dict(sp.left), dict(sp.right)
    run_rel(Machine(fuel), left, right, r)
    return StatePair(left, right)


# -- reification -------------------------------------------------------------

def reify(r: AlignedCommand) -> Command:
    """Translate an alignment into one Imp program over disjoint variables.

    Relational loops come out as ``While(..., origin=RELATIONAL)`` so that
    instrumentation can tell them apart from the runoff and plain loops that
    live inside pairs.
    """
    if isinstance(r, Pair):
        return Seq(rename(r.left, Side.LEFT), rename(r.right, Side.RIGHT))
    if isinstance(r, RelSeq):
        return Seq(reify(r.first), reify(r.second))
    if isinstance(r, WhileR):
        cond = And(rename(r.cond1, Side.LEFT), rename(r.cond2, Side.RIGHT))
        return While(cond, reify(r.body), OriginTag.RELATIONAL)
    if isinstance(r, IfR):
        cond = And(rename(r.cond1, Side.LEFT), rename(r.cond2, Side.RIGHT))
        return If(cond, reify(r.then), reify(r.orelse))
    raise TypeError(f"not an aligned command: {r!r}")


# -- differential equivalence ------------------------------------------------

@dataclass
class EquivReport:
    verdicts: list[str]  # "equal" | "mismatch" | "inconclusive"
    counterexample: StatePair | None = None
    outputs: tuple | None = None

    @property
    def equivalent(self) -> bool:
        return "mismatch" not in self.verdicts

    @property
    def inconclusive(self) -> int:
        return self.verdicts.count("inconclusive")


def _outcome(sp: StatePair, r: AlignedCommand, fuel: int):
    try:
        return eval_rel(sp, r, fuel)
    except OutOfFuel:
        return OutOfFuel
    except EvalError as e:
        return type(e)


def rel_equiv_test(r1: AlignedCommand, r2: AlignedCommand, states: list[StatePair], fuel: int) -> EquivReport:
    """Compare two alignments state by state.

    Divergence (out of fuel) on either side is inconclusive. Both sides failing
    with the same run-time error counts as agreement; any other difference is
    a mismatch.
    """
    report = EquivReport([])
    for sp in states:
        o1, o2 = _outcome(sp, r1, fuel), _outcome(sp, r2, fuel)
        if o1 is OutOfFuel or o2 is OutOfFuel:
            report.verdicts.append("inconclusive")
        elif o1 == o2:
            report.verdicts.append("equal")
        else:
            report.verdicts.append("mismatch")
            if report.counterexample is None:
                report.counterexample = sp
                report.outputs = (o1, o2)
    return report


# -- printing ----------------------------------------------------------------

def _cmd(c: Command) -> str:
    return one_line(c, origins=True)


def show_rel(r: AlignedCommand) -> str:
    """Render with ``<< | >>``, ``<<c|]``, ``[|c>>``, ``;;``, ``ifR``, ``whileR``, ``whileSt``."""
    if isinstance(r, Pair):
        if isinstance(r.right, Skip) and not isinstance(r.left, Skip):
            return f"<<{_cmd(r.left)}|]"
        if isinstance(r.left, Skip) and not isinstance(r.right, Skip):
            return f"[|{_cmd(r.right)}>>"
        return f"<<{_cmd(r.left)} | {_cmd(r.right)}>>"
    if isinstance(r, RelSeq):
        first = show_rel(r.first)
        if isinstance(r.first, RelSeq):
            first = f"({first})"
        return f"{first};; {show_rel(r.second)}"
    if isinstance(r, IfR):
        return (f"ifR <<{show_bool(r.cond1)} | {show_bool(r.cond2)}>> "
                f"then ({show_rel(r.then)}) else ({show_rel(r.orelse)})")
    if isinstance(r, WhileR):
        st = as_while_st(r)
        conds = f"<<{show_bool(r.cond1)} | {show_bool(r.cond2)}>>"
        if st is not None:
            n, m, c1, c2 = st
            return f"whileSt {n} {m} {conds} <<{_cmd(c1)} | {_cmd(c2)}>>"
        body = show_rel(r.body)
        if not isinstance(r.body, Pair):
            body = f"({body})"
        tag = "" if r.stutter is None else f"{{{r.stutter[0]}:{r.stutter[1]}}} "
        return f"whileR {tag}{conds} {body}"
    raise TypeError(f"not an aligned command: {r!r}")
