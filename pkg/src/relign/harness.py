"""End-to-end alignment pipeline, relational specs, safety checks and emitters."""
from __future__ import annotations

import json
import random
import re
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction

from .corerel import AlignedCommand, StatePair, WhileR, aligned_whiles, embed, reify, show_rel
from .egraph import EGraph, Limits, check_invariants, saturate
from .extract import (
    AnnealConfig,
    NeighborContext,
    Scorer,
    TraceTag,
    alignment_traces,
    anneal,
    count_tags,
    instrument,
    collect_traces,
    local_selection,
)
from .imp import (
    TRUE,
    Add,
    And,
    Assign,
    Block,
    BFalse,
    BoolExpr,
    BTrue,
    Command,
    Eq,
    EvalError,
    Identifier,
    If,
    Lit,
    Lt,
    Mul,
    Not,
    OutOfFuel,
    Seq,
    Side,
    Skip,
    State,
    Sub,
    Var,
    While,
    eval_bool,
    eval_imp,
    loops,
    map_bool,
    parse_bool,
    rename,
    show_bool,
    show_cmd,
    sorted_vars,
    variables,
)
from .infer import AnnotatedProgram, CandidateInvariant, guess_invariants, houdini, trace_falsifier
from .rules import basic_blockify, corerel_rules
from .terms import to_term

# -- specs ---------------------------------------------------------------------


@dataclass(frozen=True)
class RelationalSpec:
    pre: BoolExpr = TRUE
    post: BoolExpr = TRUE

    def variables(self) -> set[Identifier]:
        return variables(self.pre) | variables(self.post)

    def check_sides(self) -> None:
        neutral = [str(v) for v in self.variables() if v.side is Side.NEUTRAL]
        if neutral:
            raise ValueError(f"spec identifiers without a side: {sorted(neutral)}")


class SpecError(ValueError):
    pass


def parse_spec(text: str) -> RelationalSpec:
    """``pre:`` and ``post:`` lines in the boolean grammar; names end in _1 / _2."""
    parts = {"pre": TRUE, "post": TRUE}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("//", 1)[0].strip()
        if not line:
            continue
        m = re.match(r"^(pre|post)\s*:\s*(.*)$", line)
        if not m:
            raise SpecError(f"spec line {lineno}: expected 'pre:' or 'post:'")
        parts[m.group(1)] = parse_bool(m.group(2), sided=True)
    return RelationalSpec(parts["pre"], parts["post"])


def resolve_spec(spec: RelationalSpec, left_vars, right_vars) -> RelationalSpec:
    """Assign a side to untagged spec names by which program mentions them."""
    lnames = {v.name for v in left_vars}
    rnames = {v.name for v in right_vars}

    def side_of(v: Identifier) -> Identifier:
        if v.side is not Side.NEUTRAL:
            return v
        inl, inr = v.name in lnames, v.name in rnames
        if inl == inr:
            raise SpecError(f"cannot tell which program '{v.name}' belongs to; use {v.name}_1 or {v.name}_2")
        return Identifier(v.name, Side.LEFT if inl else Side.RIGHT)

    return RelationalSpec(map_bool(spec.pre, side_of), map_bool(spec.post, side_of))


class SamplingError(RuntimeError):
    pass


def _conjuncts(b: BoolExpr):
    if isinstance(b, And):
        yield from _conjuncts(b.lhs)
        yield from _conjuncts(b.rhs)
    else:
        yield b


def _equal_groups(pre: BoolExpr, vs: list[Identifier]) -> dict[Identifier, Identifier]:
    """Representative per class of variables forced equal by top-level ``x == y`` conjuncts.

    Drawing one value per class and then rejecting gives the same distribution
    as rejecting independent draws, with far fewer attempts.
    """
    rep = {v: v for v in vs}

    def find(v):
        while rep[v] != v:
            v = rep[v]
        return v

    for c in _conjuncts(pre):
        if isinstance(c, Eq) and isinstance(c.lhs, Var) and isinstance(c.rhs, Var) \
                and c.lhs.ident in rep and c.rhs.ident in rep:
            a, b = sorted((find(c.lhs.ident), find(c.rhs.ident)))
            rep[b] = a
    return {v: find(v) for v in vs}


def random_states(spec: RelationalSpec, n: int, seed, left_vars=(), right_vars=(),
                  lo: int = -32, hi: int = 32, max_attempts: int = 10_000) -> list[StatePair]:
    """``n`` state pairs satisfying the precondition, by rejection sampling."""
    vs = set(left_vars) | set(right_vars) | spec.variables()
    left = sorted_vars(v for v in vs if v.side is not Side.RIGHT)
    right = sorted_vars(v for v in vs if v.side is Side.RIGHT)
    rep = _equal_groups(spec.pre, left + right)
    rng = random.Random(seed)
    out: list[StatePair] = []
    attempts = 0
    while len(out) < n:
        if attempts >= max_attempts:
            raise SamplingError(f"found {len(out)}/{n} states satisfying "
                                f"{show_bool(spec.pre)} in {max_attempts} attempts")
        attempts += 1
        draw = {v: rng.randint(lo, hi) for v in left + right if rep[v] == v}
        sp = StatePair({v: draw[rep[v]] for v in left}, {v: draw[rep[v]] for v in right})
        try:
            ok = eval_bool(sp.merged(), spec.pre)
        except EvalError:
            ok = False
        if ok:
            out.append(sp)
    return out


# -- differential safety --------------------------------------------------------


@dataclass(frozen=True)
class SafetyVerdict:
    equivalence: str  # pass | fail | inconclusive
    post: str  # pass | fail | inconclusive


def _run(c: Command, s: State, fuel: int):
    try:
        return eval_imp(s, c, fuel)
    except OutOfFuel:
        return OutOfFuel
    except EvalError as e:
        return type(e)


def differential_safety(p1: Command, p2: Command, r: AlignedCommand, spec: RelationalSpec,
                        states: list[StatePair], fuel: int) -> list[SafetyVerdict]:
    """Per state: does reify(r) match p1 and p2 run separately, and does the post hold?"""
    q1, q2, prod = rename(p1, Side.LEFT), rename(p2, Side.RIGHT), reify(r)
    out = []
    for sp in states:
        a, b, c = _run(q1, sp.left, fuel), _run(q2, sp.right, fuel), _run(prod, sp.merged(), fuel)
        if OutOfFuel in (a, b, c):
            out.append(SafetyVerdict("inconclusive", "inconclusive"))
            continue
        if isinstance(a, dict) and isinstance(b, dict):
            expected = {**a, **b}
        else:
            expected = a if not isinstance(a, dict) else b
        eq = "pass" if expected == c else "fail"
        if isinstance(c, dict):
            try:
                post = "pass" if eval_bool(c, spec.post) else "fail"
            except EvalError:
                post = "fail"
        else:
            post = "inconclusive"
        out.append(SafetyVerdict(eq, post))
    return out


def tally(verdicts: list[SafetyVerdict], which: str) -> dict[str, int]:
    out = {"pass": 0, "fail": 0, "inconclusive": 0}
    for v in verdicts:
        out[getattr(v, which)] += 1
    return out


# -- pipeline --------------------------------------------------------------------


@dataclass(frozen=True)
class PipelineConfig:
    anneal: AnnealConfig = AnnealConfig()
    limits: Limits = Limits()
    max_stutter: int = 3
    enable_unrolling: bool = True
    enable_if_align: bool = True
    disabled_rules: tuple[str, ...] = ()
    hints: tuple[CandidateInvariant, ...] = ()
    falsifier_states: int = 64
    audit: bool = False


class AlignmentBug(RuntimeError):
    """A materialized alignment disagreed with the input programs."""


@dataclass
class RunReport:
    alignment: str
    reified: str
    cost: dict
    initial_alignment: str
    initial_cost: dict
    cost_trajectory: list[str]
    short_circuit: bool
    equivalence: dict
    postcondition: dict
    invariants: dict
    stutter: list
    saturation: dict
    seed: int
    config: dict
    timings: dict = field(default_factory=dict)
    candidates: int = 0
    houdini_rounds: int = 0

    @property
    def safe(self) -> bool:
        return self.equivalence["fail"] == 0 and self.postcondition["fail"] == 0

    def to_dict(self, timings: bool = True) -> dict:
        d = asdict(self)
        if not timings:
            d.pop("timings")
        return d

    def to_json(self, timings: bool = True) -> str:
        return json.dumps(self.to_dict(timings), indent=2, sort_keys=True)


@dataclass
class PipelineResult:
    report: RunReport
    alignment: AlignedCommand
    annotated: AnnotatedProgram
    egraph: EGraph
    states: list[StatePair]
    anneal_result: object = None  # AnnealResult, absent when annealing was skipped


def _config_dict(cfg: PipelineConfig) -> dict:
    return {"anneal": asdict(cfg.anneal), "limits": asdict(cfg.limits), "max_stutter": cfg.max_stutter,
            "enable_unrolling": cfg.enable_unrolling, "enable_if_align": cfg.enable_if_align,
            "disabled_rules": list(cfg.disabled_rules), "falsifier_states": cfg.falsifier_states}


def run_pipeline(p1: Command, p2: Command, spec: RelationalSpec,
                 cfg: PipelineConfig = PipelineConfig()) -> PipelineResult:
    """Sample states, saturate, extract syntactically, anneal, check, infer invariants."""
    ac = cfg.anneal
    timings: dict[str, float] = {}
    clock = time.monotonic()

    def lap(name):
        nonlocal clock
        now = time.monotonic()
        timings[name] = round(now - clock, 4)
        clock = now

    q1, q2 = rename(p1, Side.LEFT), rename(p2, Side.RIGHT)
    spec = resolve_spec(spec, variables(q1), variables(q2))
    states = random_states(spec, ac.state_count, ac.seed, variables(q1), variables(q2))
    lap("states")

    g = EGraph()
    root = g.add(to_term(basic_blockify(embed(q1, q2))))
    rules = corerel_rules(cfg.max_stutter, cfg.enable_unrolling, cfg.enable_if_align)
    if cfg.disabled_rules:
        rules = rules.without(*cfg.disabled_rules)
    sat = saturate(g, list(rules), cfg.limits, audit=cfg.audit)
    lap("saturate")

    init = local_selection(g, root, ac.depth_limit)
    init_align = init.materialize(g)
    init_cost = Scorer(g, states, ac.fuel, ac.runoff_denominator)(init)
    init_safety = differential_safety(p1, p2, init_align, spec, states, ac.fuel)
    short = init_cost.total == 0 and tally(init_safety, "post")["fail"] == 0 \
        and tally(init_safety, "equivalence")["fail"] == 0
    lap("extract_local")

    if short:
        res = None
        best, best_cost, trajectory = init_align, init_cost, []
    else:
        ctx = NeighborContext(g, unroll_radius=ac.unroll_radius)
        res = anneal(g, init, ac, states, ctx)
        best, best_cost, trajectory = res.alignment, res.cost, [str(c) for c in res.best_costs]
    lap("anneal")

    safety = differential_safety(p1, p2, best, spec, states, ac.fuel)
    eq = tally(safety, "equivalence")
    if eq["fail"]:
        raise AlignmentBug(f"alignment disagrees with the input programs on {eq['fail']} states:\n"
                           f"{show_rel(best)}")
    lap("safety")

    prog = reify(best)
    traces = collect_traces(instrument(prog), [sp.merged() for sp in states], ac.fuel, snapshots=True)
    cands = guess_invariants(prog, traces)
    n_sites = sum(1 for _ in loops(prog))
    extra = [h for h in cfg.hints if h.loop_site < n_sites]
    fstates = random_states(spec, cfg.falsifier_states, f"falsify/{ac.seed}", variables(q1), variables(q2))
    annotated = AnnotatedProgram(prog, {}, spec.pre, spec.post).with_invariants(list(cands) + extra)
    annotated = houdini(annotated, trace_falsifier([sp.merged() for sp in fstates], ac.fuel))
    lap("invariants")

    report = RunReport(
        alignment=show_rel(best),
        reified=show_cmd(prog, origins=True),
        cost=best_cost.as_dict(),
        initial_alignment=show_rel(init_align),
        initial_cost=init_cost.as_dict(),
        cost_trajectory=trajectory,
        short_circuit=short,
        equivalence=eq,
        postcondition=tally(safety, "post"),
        invariants={str(site): [show_bool(i.predicate) for i in invs]
                    for site, invs in annotated.invariants.items()},
        stutter=[list(w.stutter) if w.stutter else [1, 1] for w in aligned_whiles(best)],
        saturation=sat.as_dict(),
        seed=ac.seed,
        config=_config_dict(cfg),
        timings=timings,
        candidates=len(cands),
        houdini_rounds=annotated.rounds,
    )
    return PipelineResult(report, best, annotated, g, states, res)


def runoff_iterations(r: AlignedCommand, states: list[StatePair], fuel: int) -> int:
    return count_tags(alignment_traces(r, states, fuel))[TraceTag.wH_O]


# -- emitters ----------------------------------------------------------------------

_C_BIN = {Add: "+", Sub: "-", Mul: "*"}


def _c_int(a) -> str:
    if isinstance(a, Lit):
        return f"INT64_C({a.value})" if a.value >= 0 else f"(-INT64_C({-a.value}))"
    if isinstance(a, Var):
        return str(a.ident)
    return f"({_c_int(a.lhs)} {_C_BIN[type(a)]} {_c_int(a.rhs)})"


def _c_bool(b) -> str:
    if isinstance(b, BTrue):
        return "1"
    if isinstance(b, BFalse):
        return "0"
    if isinstance(b, Eq):
        return f"({_c_int(b.lhs)} == {_c_int(b.rhs)})"
    if isinstance(b, Lt):
        return f"({_c_int(b.lhs)} < {_c_int(b.rhs)})"
    if isinstance(b, Not):
        return f"(!{_c_bool(b.arg)})"
    if isinstance(b, And):
        return f"({_c_bool(b.lhs)} && {_c_bool(b.rhs)})"
    raise TypeError(b)


def _dfy_int(a) -> str:
    if isinstance(a, Lit):
        return str(a.value) if a.value >= 0 else f"({a.value})"
    if isinstance(a, Var):
        return str(a.ident)
    return f"({_dfy_int(a.lhs)} {_C_BIN[type(a)]} {_dfy_int(a.rhs)})"


def _dfy_bool(b) -> str:
    if isinstance(b, BTrue):
        return "true"
    if isinstance(b, BFalse):
        return "false"
    if isinstance(b, Eq):
        return f"({_dfy_int(b.lhs)} == {_dfy_int(b.rhs)})"
    if isinstance(b, Lt):
        return f"({_dfy_int(b.lhs)} < {_dfy_int(b.rhs)})"
    if isinstance(b, Not):
        return f"(!{_dfy_bool(b.arg)})"
    if isinstance(b, And):
        return f"({_dfy_bool(b.lhs)} && {_dfy_bool(b.rhs)})"
    raise TypeError(b)


class _Emitter:
    def __init__(self, p: AnnotatedProgram, c_style: bool):
        self.p = p
        self.c = c_style
        self.site = 0
        self.lines: list[str] = []

    def b(self, e) -> str:
        return _c_bool(e) if self.c else _dfy_bool(e)

    def i(self, e) -> str:
        return _c_int(e) if self.c else _dfy_int(e)

    def emit(self, c: Command, ind: int) -> None:
        pad = "  " * ind
        if isinstance(c, Seq):
            self.emit(c.first, ind)
            self.emit(c.second, ind)
        elif isinstance(c, Skip):
            pass
        elif isinstance(c, Block):
            self.emit(c.body, ind)
        elif isinstance(c, Assign):
            self.lines.append(f"{pad}{c.target} = {self.i(c.expr)};" if self.c
                              else f"{pad}{c.target} := {self.i(c.expr)};")
        elif isinstance(c, If):
            self.lines.append(f"{pad}if ({self.b(c.cond)}) {{" if self.c else f"{pad}if {self.b(c.cond)} {{")
            self.emit(c.then, ind + 1)
            if isinstance(c.orelse, Skip):
                self.lines.append(f"{pad}}}")
            else:
                self.lines.append(f"{pad}}} else {{")
                self.emit(c.orelse, ind + 1)
                self.lines.append(f"{pad}}}")
        elif isinstance(c, While):
            site = self.site
            self.site += 1
            invs = [inv.predicate for inv in self.p.at(site)]
            if self.c:
                self.lines.append(f"{pad}/* loop {site} ({c.origin.name.lower()}) */")
                for inv in invs:
                    self.lines.append(f"{pad}__VERIFIER_assert({self.b(inv)});")
                self.lines.append(f"{pad}while ({self.b(c.cond)}) {{")
                self.emit(c.body, ind + 1)
                for inv in invs:
                    self.lines.append(f"{pad}  __VERIFIER_assert({self.b(inv)});")
                self.lines.append(f"{pad}}}")
            else:
                self.lines.append(f"{pad}// loop {site} ({c.origin.name.lower()})")
                self.lines.append(f"{pad}while {self.b(c.cond)}")
                for inv in invs:
                    self.lines.append(f"{pad}  invariant {self.b(inv)}")
                self.lines.append(f"{pad}  decreases *")
                self.lines.append(f"{pad}{{")
                self.emit(c.body, ind + 1)
                self.lines.append(f"{pad}}}")
        else:
            raise TypeError(f"cannot emit {c!r}")


def _all_vars(p: AnnotatedProgram) -> list[Identifier]:
    vs = variables(p.program) | variables(p.pre) | variables(p.post)
    for inv in p.all_invariants():
        vs |= variables(inv.predicate)
    return sorted_vars(vs)


def emit_c(p: AnnotatedProgram) -> str:
    """C translation unit: nondeterministic inputs, assumed pre, asserted post and invariants."""
    e = _Emitter(p, True)
    e.emit(p.program, 1)
    vs = _all_vars(p)
    out = ["#include <stdint.h>", "",
           "extern int64_t nondet_int64(void);",
           "extern void __VERIFIER_assume(int cond);",
           "extern void __VERIFIER_assert(int cond);", "",
           "int main(void) {"]
    out += [f"  int64_t {v} = nondet_int64();" for v in vs]
    out.append(f"  __VERIFIER_assume({_c_bool(p.pre)});")
    out += e.lines
    out.append(f"  __VERIFIER_assert({_c_bool(p.post)});")
    out += ["  return 0;", "}", ""]
    return "\n".join(out)


def emit_dafny(p: AnnotatedProgram) -> str:
    """Dafny method with requires / ensures / loop invariants."""
    e = _Emitter(p, False)
    e.emit(p.program, 1)
    vs = _all_vars(p)
    init = {v: Identifier(f"{v}_0") for v in vs}
    pre = map_bool(p.pre, lambda v: init[v])
    ins = ", ".join(f"{init[v]}: int" for v in vs)
    outs = ", ".join(f"{v}: int" for v in vs)
    out = [f"method Product({ins})", f"  returns ({outs})" if vs else "", f"  requires {_dfy_bool(pre)}",
           f"  ensures {_dfy_bool(p.post)}", "  decreases *", "{"]
    out = [line for line in out if line]
    out += [f"  {v} := {init[v]};" for v in vs]
    out += e.lines
    out += ["}", ""]
    return "\n".join(out)


def loop_skeleton(c: Command) -> list:
    """Nesting structure of loops: one list per loop holding its inner loops."""
    if isinstance(c, Seq):
        return loop_skeleton(c.first) + loop_skeleton(c.second)
    if isinstance(c, If):
        return loop_skeleton(c.then) + loop_skeleton(c.orelse)
    if isinstance(c, Block):
        return loop_skeleton(c.body)
    if isinstance(c, While):
        return [loop_skeleton(c.body)]
    return []


def text_loop_skeleton(text: str) -> list:
    """Recover loop nesting from emitted C or Dafny by brace matching."""
    root: list = []
    stack: list = [(root, False)]
    pending = False
    for tok in re.findall(r"\bwhile\b|[{}]", text):
        if tok == "while":
            pending = True
        elif tok == "{":
            if pending:
                node: list = []
                stack[-1][0].append(node)
                stack.append((node, True))
            else:
                stack.append((stack[-1][0], False))
            pending = False
        else:
            stack.pop()
    return root
