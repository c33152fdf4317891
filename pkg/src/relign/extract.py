"""Extraction: greedy local extraction, trace collection and cost, and the
simulated-annealing search over e-node selections."""
from __future__ import annotations

import csv
import math
import random
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Iterable

from .corerel import AlignedCommand, StatePair, reify
from .egraph import EClassId, EGraph, ENode, Term
from .imp import (
    Block,
    Command,
    EvalError,
    If,
    Log,
    Machine,
    OriginTag,
    OutOfFuel,
    Seq,
    State,
    While,
    seq,
)
from .terms import from_term

# -- local extraction --------------------------------------------------------

LOOP_WEIGHT = 100


def node_weight(n: ENode) -> int:
    """Plain loops are expensive so that fused alternatives win."""
    if n.op == "while" and n.data is OriginTag.PLAIN:
        return LOOP_WEIGHT
    return 1


def _node_key(n: ENode) -> tuple:
    return (n.op, str(n.data))


def class_costs(g: EGraph, weight=node_weight) -> dict[EClassId, tuple]:
    """Fixpoint of (cost, size) per class; unreachable-cost classes are absent."""
    best: dict[EClassId, tuple] = {}
    classes = g.class_ids()
    changed = True
    while changed:
        changed = False
        for cid in classes:
            for n in g.M[cid].nodes:
                kids = [best.get(g.find(c)) for c in n.children]
                if any(k is None for k in kids):
                    continue
                cand = (weight(n) + sum(k[0] for k in kids), 1 + sum(k[1] for k in kids))
                old = best.get(cid)
                if old is None or cand < old:
                    best[cid] = cand
                    changed = True
    return best


def best_nodes(g: EGraph, weight=node_weight) -> dict[EClassId, ENode]:
    costs = class_costs(g, weight)
    choice: dict[EClassId, ENode] = {}
    for cid in g.class_ids():
        options = []
        for n in g.M[cid].nodes:
            kids = [costs.get(g.find(c)) for c in n.children]
            if any(k is None for k in kids):
                continue
            key = (weight(n) + sum(k[0] for k in kids), 1 + sum(k[1] for k in kids), _node_key(n))
            options.append((key, n))
        if options:
            choice[cid] = min(options, key=lambda o: o[0])[1]
    return choice


def extract_term(g: EGraph, root: EClassId, weight=node_weight) -> Term:
    choice = best_nodes(g, weight)

    def build(cid: EClassId) -> Term:
        cid = g.find(cid)
        if cid not in choice:
            raise ValueError(f"class {cid} has no finite extraction")
        n = choice[cid]
        return Term(n.op, tuple(build(c) for c in n.children), n.data)

    return build(root)


def extract_local(g: EGraph, root: EClassId) -> AlignedCommand:
    """Cheapest alignment under the syntactic loop-count cost."""
    return from_term(extract_term(g, root))


# -- selections --------------------------------------------------------------

Path = tuple[int, ...]


@dataclass(frozen=True)
class Selection:
    root: EClassId
    choices: dict  # Path -> ENode
    depth_limit: int = 24
    changed: bool = True  # False when neighbor could not move

    def class_at(self, g: EGraph, path: Path) -> EClassId:
        cid = g.find(self.root)
        for depth, i in enumerate(path):
            cid = g.find(self.choices[path[:depth]].children[i])
        return cid

    def term(self, g: EGraph) -> Term:
        def build(path: Path) -> Term:
            if len(path) > self.depth_limit:
                raise ValueError("selection exceeds depth limit")
            n = self.choices[path]
            return Term(n.op, tuple(build(path + (i,)) for i in range(len(n.children))), n.data)
        return build(())

    def materialize(self, g: EGraph) -> AlignedCommand:
        return from_term(self.term(g))

    def validate(self, g: EGraph) -> None:
        """Each choice lives in the class its path reaches, and the tree is closed."""
        def go(path: Path, cid: EClassId):
            n = self.choices.get(path)
            assert n is not None, f"no choice at {path}"
            assert g.canonicalize(n) in g.M[g.find(cid)].nodes, f"choice at {path} not in class {cid}"
            for i, c in enumerate(n.children):
                go(path + (i,), c)
        go((), self.root)
        reachable = set()

        def walk(path):
            reachable.add(path)
            for i in range(len(self.choices[path].children)):
                walk(path + (i,))
        walk(())
        assert reachable == set(self.choices), "dangling choices"


def selection_from_term(g: EGraph, root: EClassId, t: Term, depth_limit: int = 24) -> Selection:
    """Occurrence-path choices that spell out ``t`` (which must be represented at root)."""
    choices: dict = {}

    def go(cid: EClassId, t: Term, path: Path):
        cid = g.find(cid)
        for n in g.M[cid].nodes:
            if n.op == t.op and n.data == t.data and len(n.children) == len(t.args):
                saved = dict(choices)
                choices[path] = n
                if all(go(c, a, path + (i,)) for i, (c, a) in enumerate(zip(n.children, t.args))):
                    return True
                choices.clear()
                choices.update(saved)
        return False

    if not go(root, t, ()):
        raise ValueError("term is not represented in the given class")
    return Selection(g.find(root), choices, depth_limit)


def local_selection(g: EGraph, root: EClassId, depth_limit: int = 24) -> Selection:
    return selection_from_term(g, root, extract_term(g, root), depth_limit)


# -- neighbor ----------------------------------------------------------------

class _Shape:
    """Per-class minimum weighted size and height, used to bias random subterms.

    Size is the extraction weight, so a plain loop counts as LOOP_WEIGHT
    nodes and random fills lean toward fused shapes.
    """

    def __init__(self, g: EGraph):
        self.size = {c: v[0] for c, v in class_costs(g).items()}
        height: dict[EClassId, int] = {}
        changed = True
        classes = g.class_ids()
        while changed:
            changed = False
            for cid in classes:
                for n in g.M[cid].nodes:
                    hs = [height.get(g.find(c)) for c in n.children]
                    if any(h is None for h in hs):
                        continue
                    h = 1 + max(hs, default=0)
                    if cid not in height or h < height[cid]:
                        height[cid] = h
                        changed = True
        self.height = height


def _stutter_sig(g: EGraph, n: ENode):
    if n.op == "whileR":
        return n.data or (1, 1)
    if n.op == "relseq":
        sigs = {m.data or (1, 1) for m in g.M[g.find(n.children[0])].nodes if m.op == "whileR"}
        if len(sigs) == 1:
            return sigs.pop()
    return None


def _within_radius(g: EGraph, old: ENode, new: ENode, radius: int) -> bool:
    a, b = _stutter_sig(g, old), _stutter_sig(g, new)
    if a is None or b is None:
        return True
    return abs(a[0] - b[0]) + abs(a[1] - b[1]) <= radius


@dataclass
class NeighborContext:
    """Graph-derived data reused across neighbor calls on one saturated graph."""

    g: EGraph
    shape: _Shape = None
    unroll_radius: int = 1

    def __post_init__(self):
        if self.shape is None:
            self.shape = _Shape(self.g)


def _random_subtree(ctx: NeighborContext, cid: EClassId, path: Path, depth_limit: int,
                    rng: random.Random, out: dict) -> None:
    g, shape = ctx.g, ctx.shape
    cid = g.find(cid)
    room = depth_limit - len(path)
    opts, weights = [], []
    for n in g.M[cid].nodes:
        sizes = [shape.size.get(g.find(c)) for c in n.children]
        heights = [shape.height.get(g.find(c)) for c in n.children]
        if any(s is None for s in sizes) or 1 + max(heights, default=0) > room + 1:
            continue
        opts.append(n)
        weights.append(2.0 ** -(1 + sum(sizes) - shape.size[cid]))
    if not opts:
        raise ValueError(f"no node of class {cid} fits in the depth limit")
    n = rng.choices(opts, weights)[0]
    out[path] = n
    for i, c in enumerate(n.children):
        _random_subtree(ctx, c, path + (i,), depth_limit, rng, out)


def _copy_subtree(choices: dict, src: Path, dst: Path, out: dict) -> None:
    k = len(src)
    for p, n in choices.items():
        if p[:k] == src:
            out[dst + p[k:]] = n


def _reuse_source(ctx: NeighborContext, sel: Selection, at: Path, target: EClassId,
                  classes: dict) -> Path | None:
    """Breadth-first search of the replaced subtree for an occurrence of ``target``."""
    g = ctx.g
    frontier = [at]
    while frontier:
        nxt = []
        for p in frontier:
            if classes[p] == target:
                return p
            n = sel.choices[p]
            nxt.extend(p + (i,) for i in range(len(n.children)))
        frontier = nxt
    return None


def _pick(ctx: NeighborContext, alts: list[ENode], rng: random.Random) -> ENode:
    """Uniform over structural kinds first, then biased toward cheap nodes.

    Saturated classes hold thousands of commuted / reassociated variants of
    the same shape next to a handful of loop-fusing ones; picking nodes
    uniformly would almost never propose the latter.
    """
    g, size = ctx.g, ctx.shape.size
    groups: dict = {}
    for n in alts:
        groups.setdefault((n.op, str(n.data), _stutter_sig(g, n)), []).append(n)
    group = groups[rng.choice(sorted(groups, key=str))]
    costs = [node_weight(n) + sum(size[g.find(c)] for c in n.children) for n in group]
    low = min(costs)
    return rng.choices(group, [2.0 ** (low - c) for c in costs])[0]


def neighbor(ctx: NeighborContext | EGraph, sel: Selection, rng: random.Random) -> Selection:
    """Re-choose the e-node at one occurrence path, keeping everything outside it.

    Children of the new node reuse subtrees of the old choice when they share
    a class; otherwise they are built at random, biased toward small terms.
    Returns the input with ``changed=False`` when no class on the selection
    has an alternative.
    """
    if isinstance(ctx, EGraph):
        ctx = NeighborContext(ctx)
    g = ctx.g
    classes: dict = {}

    def walk(path: Path, cid: EClassId):
        classes[path] = g.find(cid)
        for i, c in enumerate(sel.choices[path].children):
            walk(path + (i,), c)

    walk((), sel.root)
    paths = sorted((p for p in classes if len(g.M[classes[p]].nodes) >= 2), key=lambda p: (len(p), p))
    rng.shuffle(paths)
    for at in paths:
        cid = classes[at]
        old = g.canonicalize(sel.choices[at])
        alts = [n for n in g.M[cid].nodes if n != old and _within_radius(g, old, n, ctx.unroll_radius)]
        alts = [n for n in alts if all(g.find(c) in ctx.shape.size for c in n.children)]
        if not alts:
            continue
        new = _pick(ctx, alts, rng)
        out = {p: n for p, n in sel.choices.items() if p[:len(at)] != at}
        out[at] = new
        try:
            for i, c in enumerate(new.children):
                child = at + (i,)
                src = _reuse_source(ctx, sel, at, g.find(c), classes)
                if src is not None and src != child and _depth(sel.choices, src) - len(src) + len(child) <= sel.depth_limit:
                    tmp: dict = {}
                    _copy_subtree(sel.choices, src, child, tmp)
                    out.update(tmp)
                elif src == child:
                    _copy_subtree(sel.choices, src, child, out)
                else:
                    _random_subtree(ctx, c, child, sel.depth_limit, rng, out)
        except ValueError:
            continue
        if _depth(out, ()) > sel.depth_limit:
            continue
        return Selection(sel.root, out, sel.depth_limit, True)
    return Selection(sel.root, sel.choices, sel.depth_limit, False)


def _depth(choices: dict, under: Path) -> int:
    k = len(under)
    return max((len(p) for p in choices if p[:k] == under), default=k)


# -- traces ------------------------------------------------------------------

class TraceTag(Enum):
    wB_R = "wB_R"
    wH_R = "wH_R"
    wE_R = "wE_R"
    wB_O = "wB_O"
    wH_O = "wH_O"
    wE_O = "wE_O"
    wB = "wB"
    wH = "wH"
    wE = "wE"

    def __str__(self) -> str:
        return self.value


_TAGS = {
    OriginTag.RELATIONAL: (TraceTag.wB_R, TraceTag.wH_R, TraceTag.wE_R),
    OriginTag.RUNOFF: (TraceTag.wB_O, TraceTag.wH_O, TraceTag.wE_O),
    OriginTag.PLAIN: (TraceTag.wB, TraceTag.wH, TraceTag.wE),
}


def instrument(c: Command) -> Command:
    """Insert entry / iteration-head / exit logs around every loop.

    Loop sites are numbered in preorder, matching ``imp.loops``.
    """
    counter = [0]

    def go(c: Command) -> Command:
        if isinstance(c, Seq):
            return Seq(go(c.first), go(c.second))
        if isinstance(c, If):
            return If(c.cond, go(c.then), go(c.orelse))
        if isinstance(c, Block):
            return Block(go(c.body))
        if isinstance(c, While):
            if c.origin not in _TAGS:
                raise ValueError(f"loop without origin metadata: {c!r}")
            site = counter[0]
            counter[0] += 1
            b, h, e = _TAGS[c.origin]
            body = go(c.body)
            return seq(Log(b, site), While(c.cond, Seq(Log(h, site), body), c.origin), Log(e, site))
        return c

    return go(c)


@dataclass
class Trace:
    tags: list[TraceTag]
    snapshots: list[tuple[int, int, State]] | None = None  # (tag index, loop site, state)
    partial: bool = False
    error: str | None = None


def run_traced(c: Command, s: State, fuel: int, snapshots: bool = False) -> tuple[Trace, State | None]:
    tags: list = []
    m = Machine(fuel, tags, snapshots)
    st = dict(s)
    try:
        m.run(st, c)
    except OutOfFuel:
        return Trace(tags, m.snaps, partial=True), None
    except EvalError as e:
        return Trace(tags, m.snaps, partial=True, error=type(e).__name__), None
    return Trace(tags, m.snaps), st


def collect_traces(c: Command, states: Iterable[State], fuel: int, snapshots: bool = False) -> list[Trace]:
    """Run instrumented ``c`` from each state; diverging runs give partial traces."""
    return [run_traced(c, s, fuel, snapshots)[0] for s in states]


def alignment_traces(r: AlignedCommand, states: Iterable[StatePair], fuel: int,
                     snapshots: bool = False) -> list[Trace]:
    prog = instrument(reify(r))
    return collect_traces(prog, [sp.merged() for sp in states], fuel, snapshots)


# -- cost ----------------------------------------------------------------------

@dataclass(frozen=True)
class CostReport:
    r_unmerged: Fraction
    r_runoff: Fraction
    total: Fraction
    counts: tuple = ()

    def as_dict(self) -> dict:
        return {"r_unmerged": str(self.r_unmerged), "r_runoff": str(self.r_runoff),
                "total": str(self.total), "counts": dict(self.counts)}


def _ratio(a: int, b: int) -> Fraction:
    return Fraction(a, b) if b else Fraction(0)


def count_tags(traces: Iterable[Trace]) -> Counter:
    n = Counter()
    for t in traces:
        n.update(t.tags)
    return n


def trace_cost(traces: Iterable[Trace], runoff_denominator: str = "all") -> CostReport:
    """Loop-fusion cost summed over all traces.

    ``runoff_denominator="doubled-relational"`` counts relational iterations twice
    and ignores runoff iterations in the denominator.
    """
    n = count_tags(traces)
    T = TraceTag
    r_unmer = _ratio(n[T.wB], n[T.wB_R] + n[T.wB])
    if runoff_denominator == "all":
        den = n[T.wH_R] + n[T.wH_O] + n[T.wH]
    elif runoff_denominator == "doubled-relational":
        den = 2 * n[T.wH_R] + n[T.wH]
    else:
        raise ValueError(f"unknown runoff denominator mode {runoff_denominator!r}")
    r_run = _ratio(n[T.wH_O], den)
    if r_run > 1:
        r_run = Fraction(1)
    counts = tuple((t.value, n[t]) for t in T if n[t])
    return CostReport(r_unmer, r_run, (r_unmer + r_run) / 2, counts)


# -- annealing ----------------------------------------------------------------

@dataclass(frozen=True)
class AnnealConfig:
    mu: int = 500
    seed: int = 0
    initial_temperature: float = 0.25
    unroll_radius: int = 1
    state_count: int = 16
    fuel: int = 10_000
    runoff_denominator: str = "all"
    depth_limit: int = 24

    def __post_init__(self):
        if self.mu < 0:
            raise ValueError("mu must be non-negative")
        if self.initial_temperature <= 0:
            raise ValueError("initial temperature must be positive")


def temperature(k: int, mu: int, t0: float) -> float:
    return t0 * (1 - k / mu) if mu else 0.0


def jump(tau: float, best_cost: Fraction, cand_cost: Fraction, rng: random.Random) -> bool:
    """Metropolis acceptance of a candidate no better than the current one."""
    if tau <= 0:
        return False
    return rng.random() < math.exp(float(best_cost - cand_cost) / tau)


@dataclass
class AnnealResult:
    alignment: AlignedCommand
    cost: CostReport
    selection: Selection
    best_costs: list[Fraction] = field(default_factory=list)  # best-seen after each step
    log: list[tuple] = field(default_factory=list)  # (k, tau, eta, accepted)
    evaluations: int = 0

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k", "tau", "eta", "accepted"])
            for k, tau, eta, acc in self.log:
                w.writerow([k, f"{tau:.6f}", str(eta), int(acc)])


class Scorer:
    """Cost of a selection via reify + instrument + run, cached per term."""

    def __init__(self, g: EGraph, states: list[StatePair], fuel: int, runoff_denominator: str = "all"):
        self.g = g
        self.states = [sp.merged() for sp in states]
        self.fuel = fuel
        self.mode = runoff_denominator
        self.cache: dict[Term, CostReport] = {}

    def __call__(self, sel: Selection) -> CostReport:
        t = sel.term(self.g)
        hit = self.cache.get(t)
        if hit is None:
            prog = instrument(reify(from_term(t)))
            hit = trace_cost(collect_traces(prog, self.states, self.fuel), self.mode)
            self.cache[t] = hit
        return hit


def anneal(g: EGraph, init: Selection, cfg: AnnealConfig, states: list[StatePair],
           ctx: NeighborContext | None = None) -> AnnealResult:
    """Simulated annealing over selections; returns the best selection seen."""
    rng = random.Random(cfg.seed)
    ctx = ctx or NeighborContext(g, unroll_radius=cfg.unroll_radius)
    score = Scorer(g, states, cfg.fuel, cfg.runoff_denominator)
    cur, cur_cost = init, score(init)
    best, best_cost = cur, cur_cost
    res = AnnealResult(init.materialize(g), cur_cost, init)
    for k in range(cfg.mu):
        if best_cost.total == 0:
            break
        tau = temperature(k, cfg.mu, cfg.initial_temperature)
        cand = neighbor(ctx, cur, rng)
        if not cand.changed:
            res.log.append((k, tau, cur_cost.total, False))
            res.best_costs.append(best_cost.total)
            break
        eta = score(cand)
        accepted = eta.total < cur_cost.total or jump(tau, cur_cost.total, eta.total, rng)
        if accepted:
            cur, cur_cost = cand, eta
            if eta.total < best_cost.total:
                best, best_cost = cand, eta
        res.log.append((k, tau, eta.total, accepted))
        res.best_costs.append(best_cost.total)
    res.alignment, res.cost, res.selection = best.materialize(g), best_cost, best
    res.evaluations = len(score.cache)
    return res
