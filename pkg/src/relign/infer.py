"""Loop-invariant candidates mined from trace snapshots, and Houdini elimination."""
from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from typing import Iterable, Protocol

from .extract import TraceTag, collect_traces, instrument
from .imp import (
    Add,
    BoolExpr,
    Command,
    Eq,
    EvalError,
    Identifier,
    Lit,
    Lt,
    Mul,
    Not,
    State,
    TRUE,
    Var,
    eval_bool,
    loops,
    parse_bool,
    show_bool,
    sorted_vars,
    variables,
)

HEAD_TAGS = frozenset({TraceTag.wH, TraceTag.wE, TraceTag.wH_R, TraceTag.wE_R, TraceTag.wH_O, TraceTag.wE_O})
SCALES = (-2, -1, 1, 2)
OFFSETS = range(-4, 5)
BOUNDS = (-1, 0, 1)


@dataclass(frozen=True)
class CandidateInvariant:
    loop_site: int
    predicate: BoolExpr

    def __str__(self) -> str:
        return f"{self.loop_site}: {show_bool(self.predicate)}"


@dataclass(frozen=True)
class AnnotatedProgram:
    program: Command
    invariants: dict = field(default_factory=dict)  # site -> tuple[CandidateInvariant]
    pre: BoolExpr = TRUE
    post: BoolExpr = TRUE
    rounds: int = 0

    def __post_init__(self):
        sites = set(range(sum(1 for _ in loops(self.program))))
        bad = set(self.invariants) - sites
        if bad:
            raise ValueError(f"annotations on missing loop sites {sorted(bad)}")

    def all_invariants(self) -> list[CandidateInvariant]:
        return [inv for site in sorted(self.invariants) for inv in self.invariants[site]]

    def at(self, site: int) -> tuple[CandidateInvariant, ...]:
        return self.invariants.get(site, ())

    def with_invariants(self, invs: Iterable[CandidateInvariant], rounds: int | None = None) -> AnnotatedProgram:
        table: dict = {}
        for inv in invs:
            table.setdefault(inv.loop_site, [])
            if inv not in table[inv.loop_site]:
                table[inv.loop_site].append(inv)
        table = {k: tuple(v) for k, v in sorted(table.items())}
        return replace(self, invariants=table, rounds=self.rounds if rounds is None else rounds)


class Verifier(Protocol):
    def check(self, p: AnnotatedProgram) -> set[CandidateInvariant]:
        """Annotated invariants known to fail; must not report valid ones."""


# -- templates ----------------------------------------------------------------

def _le(a, b) -> BoolExpr:
    return Not(Lt(b, a))


def _affine(x: Identifier, a: int, y: Identifier, b: int) -> BoolExpr:
    rhs = Var(y) if a == 1 else Mul(Lit(a), Var(y))
    if b:
        rhs = Add(rhs, Lit(b))
    return Eq(Var(x), rhs)


def templates(vs: list[Identifier], constants: dict[Identifier, int]) -> list[tuple[BoolExpr, object]]:
    """(predicate, fast checker) pairs; checkers take a state and return bool."""
    out: list = []
    for x in vs:
        if x in constants:
            c = constants[x]
            out.append((Eq(Var(x), Lit(c)), lambda s, x=x, c=c: s[x] == c))
        for c in BOUNDS:
            out.append((_le(Lit(c), Var(x)), lambda s, x=x, c=c: c <= s[x]))
            out.append((_le(Var(x), Lit(c)), lambda s, x=x, c=c: s[x] <= c))
    for x in vs:
        for y in vs:
            if x == y:
                continue
            if x < y:
                out.append((Eq(Var(x), Var(y)), lambda s, x=x, y=y: s[x] == s[y]))
            out.append((_le(Var(x), Var(y)), lambda s, x=x, y=y: s[x] <= s[y]))
            out.append((Lt(Var(x), Var(y)), lambda s, x=x, y=y: s[x] < s[y]))
            for a in SCALES:
                for b in OFFSETS:
                    if a == 1 and b == 0:
                        continue
                    out.append((_affine(x, a, y, b), lambda s, x=x, y=y, a=a, b=b: s[x] == a * s[y] + b))
    return out


def head_snapshots(traces) -> dict[int, list[State]]:
    """States observed at each loop site's condition checks."""
    by_site: dict[int, list[State]] = {}
    for t in traces:
        for idx, site, st in t.snapshots or ():
            if t.tags[idx] in HEAD_TAGS:
                by_site.setdefault(site, []).append(st)
    return by_site


@dataclass(frozen=True)
class Candidates:
    invariants: tuple[CandidateInvariant, ...]
    low_confidence: bool = False

    def __iter__(self):
        return iter(self.invariants)

    def __len__(self) -> int:
        return len(self.invariants)

    def __contains__(self, x) -> bool:
        return x in self.invariants


def guess_invariants(c: Command, traces) -> Candidates:
    """Template instances that hold in every recorded loop-head state.

    With no observations every non-constant template survives and the
    result is flagged low-confidence.
    """
    vs = sorted_vars(variables(c))
    n_sites = sum(1 for _ in loops(c))
    snaps = head_snapshots(traces)
    out: list[CandidateInvariant] = []
    low = not any(snaps.values())
    for site in range(n_sites):
        states = snaps.get(site, [])
        site_vars = [v for v in vs if all(v in s for s in states)]
        consts = {}
        if states:
            for v in site_vars:
                vals = {s[v] for s in states}
                if len(vals) == 1:
                    consts[v] = vals.pop()
        for pred, ok in templates(site_vars, consts):
            if all(ok(s) for s in states):
                out.append(CandidateInvariant(site, pred))
    return Candidates(tuple(out), low)


# -- falsifier and Houdini ----------------------------------------------------

@dataclass
class TraceFalsifier:
    """Dynamic stand-in for a verifier: runs the program and reports every
    invariant violated at its loop head on some input."""

    states: list[State]
    fuel: int = 10_000
    calls: int = 0

    def check(self, p: AnnotatedProgram) -> set[CandidateInvariant]:
        self.calls += 1
        traces = collect_traces(instrument(p.program), self.states, self.fuel, snapshots=True)
        snaps = head_snapshots(traces)
        failed = set()
        for inv in p.all_invariants():
            for s in snaps.get(inv.loop_site, ()):
                try:
                    holds = eval_bool(s, inv.predicate)
                except EvalError:
                    holds = False
                if not holds:
                    failed.add(inv)
                    break
        return failed


def trace_falsifier(states: list[State], fuel: int = 10_000) -> TraceFalsifier:
    return TraceFalsifier(list(states), fuel)


def houdini(p: AnnotatedProgram, v: Verifier) -> AnnotatedProgram:
    """Drop falsified candidates until the verifier reports none."""
    current = p.all_invariants()
    rounds = 0
    while True:
        rounds += 1
        failed = v.check(p.with_invariants(current))
        if not failed:
            return p.with_invariants(current, rounds)
        current = [inv for inv in current if inv not in failed]


# -- hints ----------------------------------------------------------------------

_HINT = re.compile(r"^\s*(\d+)\s*:\s*(.+?)\s*$")


def parse_hints(text: str) -> list[CandidateInvariant]:
    """Lines ``<loop site>: <boolean expression>``; ``#`` and ``//`` start comments."""
    out = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0]
        line = line.split("//", 1)[0].strip()
        if not line:
            continue
        m = _HINT.match(line)
        if not m:
            raise ValueError(f"hints line {lineno}: expected '<site>: <predicate>'")
        out.append(CandidateInvariant(int(m.group(1)), parse_bool(m.group(2), sided=True)))
    return out
