"""E-graph with deferred congruence repair, e-matching and bounded saturation.

The graph is the usual triple: a union-find ``parent`` over class ids, a map
``M`` from every id ever issued to its (shared) class object, and a hashcons
``H`` from canonical e-nodes to class ids. Congruence is restored lazily by
``rebuild``.
"""
from __future__ import annotations

import gc
import json
import time
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterator, NamedTuple

EClassId = int


@dataclass(frozen=True)
class Term:
    op: str
    args: tuple[Term, ...] = ()
    data: Hashable = None

    def __str__(self) -> str:
        head = self.op if self.data is None else f"{self.op}[{self.data}]"
        if not self.args:
            return head
        return f"({head} {' '.join(map(str, self.args))})"


def T(op: str, *args: Term, data: Hashable = None) -> Term:
    return Term(op, tuple(args), data)


class ENode(NamedTuple):
    op: str
    children: tuple[EClassId, ...] = ()
    data: Hashable = None


class EClass:
    __slots__ = ("id", "nodes", "parents", "members")

    def __init__(self, cid: EClassId):
        self.id = cid
        self.nodes: dict[ENode, None] = {}
        self.parents: list[tuple[ENode, EClassId]] = []
        self.members: list[EClassId] = [cid]


# -- patterns ----------------------------------------------------------------

@dataclass(frozen=True)
class PVar:
    name: str

    def __str__(self) -> str:
        return "?" + self.name


@dataclass(frozen=True)
class PNode:
    op: str
    args: tuple = ()
    data: Hashable = None

    def __str__(self) -> str:
        head = self.op if self.data is None else f"{self.op}[{self.data}]"
        return head if not self.args else f"({head} {' '.join(map(str, self.args))})"


Pattern = PVar | PNode
Substitution = dict


def P(op: str, *args, data: Hashable = None) -> PNode:
    return PNode(op, tuple(args), data)


def V(name: str) -> PVar:
    return PVar(name)


def pattern_vars(p: Pattern) -> list[str]:
    out: list[str] = []

    def go(q):
        if isinstance(q, PVar):
            if q.name not in out:
                out.append(q.name)
        else:
            for a in q.args:
                go(a)

    go(p)
    return out


def substitute(p: Pattern, binding: dict) -> Term:
    """Instantiate a pattern with terms for its variables."""
    if isinstance(p, PVar):
        return binding[p.name]
    return Term(p.op, tuple(substitute(a, binding) for a in p.args), p.data)


Guard = Callable[["EGraph", EClassId, Substitution], bool]


@dataclass(frozen=True)
class RewriteRule:
    name: str
    lhs: Pattern
    rhs: Pattern
    guard: Guard | None = field(default=None, compare=False)

    def __post_init__(self):
        free = set(pattern_vars(self.rhs)) - set(pattern_vars(self.lhs))
        if free:
            raise ValueError(f"rule {self.name}: rhs variables {sorted(free)} not bound by lhs")

    def __str__(self) -> str:
        return f"{self.name}: {self.lhs} => {self.rhs}"


# -- the graph ---------------------------------------------------------------

class EGraph:
    def __init__(self):
        self.parent: list[EClassId] = []
        self.M: dict[EClassId, EClass] = {}
        self.H: dict[ENode, EClassId] = {}
        self.pending: list[EClassId] = []

    # union-find
    def find(self, i: EClassId) -> EClassId:
        parent = self.parent
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    def canonicalize(self, n: ENode) -> ENode:
        if not n.children:
            return n
        return ENode(n.op, tuple(self.find(c) for c in n.children), n.data)

    def add_node(self, node: ENode) -> EClassId:
        node = self.canonicalize(node)
        hit = self.H.get(node)
        if hit is not None:
            return self.find(hit)
        cid = len(self.parent)
        self.parent.append(cid)
        cls = EClass(cid)
        cls.nodes[node] = None
        self.M[cid] = cls
        self.H[node] = cid
        for child in dict.fromkeys(node.children):
            self.M[child].parents.append((node, cid))
        return cid

    def add(self, t: Term) -> EClassId:
        """Insert a term bottom-up; structurally equal subterms share classes."""
        return self.add_node(ENode(t.op, tuple(self.add(a) for a in t.args), t.data))

    def lookup(self, t: Term) -> EClassId | None:
        """Class holding exactly this term's node structure, without inserting."""
        kids = []
        for a in t.args:
            k = self.lookup(a)
            if k is None:
                return None
            kids.append(k)
        hit = self.H.get(self.canonicalize(ENode(t.op, tuple(kids), t.data)))
        return None if hit is None else self.find(hit)

    def merge(self, a: EClassId, b: EClassId) -> EClassId:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return ra
        ca, cb = self.M[ra], self.M[rb]
        if (len(ca.parents), -ra) < (len(cb.parents), -rb):
            ra, rb, ca, cb = rb, ra, cb, ca
        self.parent[rb] = ra
        ca.nodes.update(cb.nodes)
        ca.parents.extend(cb.parents)
        ca.members.extend(cb.members)
        for m in cb.members:
            self.M[m] = ca
        cb.nodes, cb.parents, cb.members = {}, [], []
        self.pending.append(ra)
        return ra

    def rebuild(self) -> int:
        """Restore hashcons canonicity and congruence; returns repaired-class count."""
        touched: dict[EClassId, None] = {}
        repaired = 0
        while self.pending:
            todo = dict.fromkeys(self.find(c) for c in self.pending)
            self.pending = []
            for cid in todo:
                repaired += 1
                self._repair(self.find(cid), touched)
        if repaired:
            # a node under two merged children can leave a half-canonical key
            # behind, so rederive node sets and the hashcons from the classes
            self.H = {}
            for cid in self.class_ids():
                cls = self.M[cid]
                cls.nodes = dict.fromkeys(self.canonicalize(n) for n in cls.nodes)
                for n in cls.nodes:
                    self.H[n] = cid
        return repaired

    def _repair(self, cid: EClassId, touched: dict) -> None:
        cls = self.M[cid]
        parents, cls.parents = cls.parents, []
        for pnode, pc in parents:
            self.H.pop(pnode, None)
            self.H[self.canonicalize(pnode)] = self.find(pc)
        fresh: dict[ENode, EClassId] = {}
        for pnode, pc in parents:
            cn = self.canonicalize(pnode)
            if cn in fresh:
                self.merge(fresh[cn], pc)
            fresh[cn] = self.find(pc)
            touched[pc] = None
        # merges above may have retired this class; hand the entries to the root
        self.M[self.find(cid)].parents.extend(fresh.items())

    # queries
    def class_ids(self) -> list[EClassId]:
        return [i for i in range(len(self.parent)) if self.parent[i] == i]

    def nodes(self, cid: EClassId) -> list[ENode]:
        return list(self.M[self.find(cid)].nodes)

    def num_classes(self) -> int:
        return sum(1 for i in range(len(self.parent)) if self.parent[i] == i)

    def num_nodes(self) -> int:
        return len(self.H)

    def same(self, a: EClassId, b: EClassId) -> bool:
        return self.find(a) == self.find(b)

    def represents(self, cid: EClassId, t: Term) -> bool:
        """Does class ``cid`` contain term ``t``? Terminates on cyclic graphs
        because the recursion follows the finite term."""
        memo: dict[tuple[EClassId, int], bool] = {}

        def go(c: EClassId, t: Term) -> bool:
            c = self.find(c)
            key = (c, id(t))
            if key in memo:
                return memo[key]
            memo[key] = False
            ok = any(
                n.op == t.op and n.data == t.data and len(n.children) == len(t.args)
                and all(go(k, a) for k, a in zip(n.children, t.args))
                for n in self.M[c].nodes
            )
            memo[key] = ok
            return ok

        return go(cid, t)

    def represented(self, t: Term) -> bool:
        return any(self.represents(c, t) for c in self.class_ids())

    # matching
    def op_index(self) -> dict[str, list[EClassId]]:
        index: dict[str, list[EClassId]] = {}
        for cid in self.class_ids():
            for op in dict.fromkeys(n.op for n in self.M[cid].nodes):
                index.setdefault(op, []).append(cid)
        return index

    def _match(self, p: Pattern, cid: EClassId, subst: dict) -> Iterator[dict]:
        cid = self.find(cid)
        if isinstance(p, PVar):
            bound = subst.get(p.name)
            if bound is None:
                yield {**subst, p.name: cid}
            elif self.find(bound) == cid:
                yield subst
            return
        arity = len(p.args)
        for n in self.M[cid].nodes:
            if n.op != p.op or n.data != p.data or len(n.children) != arity:
                continue
            yield from self._match_args(p.args, n.children, 0, subst)

    def _match_args(self, pats, kids, i, subst) -> Iterator[dict]:
        if i == len(pats):
            yield subst
            return
        for s in self._match(pats[i], kids[i], subst):
            yield from self._match_args(pats, kids, i + 1, s)

    def ematch(self, p: Pattern, index: dict[str, list[EClassId]] | None = None) -> list[tuple[EClassId, dict]]:
        """All (class, substitution) pairs with the class representing p[subst]."""
        if isinstance(p, PVar):
            return [(c, {p.name: c}) for c in self.class_ids()]
        if index is None:
            index = self.op_index()
        out = []
        for cid in index.get(p.op, ()):
            seen = set()
            for s in self._match(p, cid, {}):
                key = tuple(sorted((k, self.find(v)) for k, v in s.items()))
                if key not in seen:
                    seen.add(key)
                    out.append((cid, s))
        return out

    def instantiate(self, p: Pattern, subst: dict) -> EClassId:
        if isinstance(p, PVar):
            return self.find(subst[p.name])
        return self.add_node(ENode(p.op, tuple(self.instantiate(a, subst) for a in p.args), p.data))

    # debugging
    def dump(self) -> dict:
        """Deterministic snapshot of (U, M, H) with canonical ids."""
        def node_json(n: ENode):
            return {"op": n.op, "data": None if n.data is None else _data_str(n.data),
                    "children": [self.find(c) for c in n.children]}

        classes = []
        for cid in self.class_ids():
            nodes = sorted((node_json(n) for n in self.M[cid].nodes),
                           key=lambda d: (d["op"], str(d["data"]), d["children"]))
            classes.append({"id": cid, "members": sorted(self.M[cid].members), "nodes": nodes})
        hashcons = sorted(([node_json(n), self.find(c)] for n, c in self.H.items()),
                          key=lambda e: (e[0]["op"], str(e[0]["data"]), e[0]["children"], e[1]))
        return {"union_find": [self.find(i) for i in range(len(self.parent))],
                "classes": classes, "hashcons": hashcons}

    def dump_json(self) -> str:
        return json.dumps(self.dump(), indent=1, sort_keys=True)


def _data_str(d) -> str:
    if hasattr(d, "name") and hasattr(d, "value") and not hasattr(d, "side"):
        return d.name  # enum member
    return str(d)


def check_invariants(g: EGraph) -> None:
    """Raise AssertionError unless the graph is coherent and congruence-closed.

    Meant to be called right after ``rebuild``.
    """
    assert not g.pending, "pending repairs remain"
    n = len(g.parent)
    roots_of: dict[int, set[int]] = {}
    for i in range(n):
        roots_of.setdefault(id(g.M[i]), set()).add(g.find(i))
    assert all(len(r) == 1 for r in roots_of.values()), "ids sharing a class object have different roots"
    assert len(roots_of) == g.num_classes(), "two class objects share a root"
    seen: dict[ENode, EClassId] = {}
    for cid in g.class_ids():
        assert g.M[cid].id == cid or g.find(g.M[cid].id) == cid
        for node in g.M[cid].nodes:
            assert node == g.canonicalize(node), f"non-canonical node {node} in class {cid}"
            assert node not in seen, f"congruent nodes in classes {seen.get(node)} and {cid}"
            seen[node] = cid
            assert g.H.get(node) is not None and g.find(g.H[node]) == cid, f"hashcons disagrees on {node}"
    for node, c in g.H.items():
        assert node == g.canonicalize(node), f"non-canonical hashcons key {node}"
        assert node in g.M[g.find(c)].nodes, f"hashcons entry {node} missing from its class"


# -- saturation --------------------------------------------------------------

@dataclass(frozen=True)
class Limits:
    max_iterations: int = 30
    max_nodes: int = 50_000
    time_budget: float = 10.0


@dataclass
class SaturationReport:
    rounds: int = 0
    stop_reason: str = "saturated"  # saturated | max_iterations | max_nodes | time_budget
    nodes: int = 0
    classes: int = 0
    applied: dict[str, int] = field(default_factory=dict)
    history: list[tuple[int, int]] = field(default_factory=list)  # (nodes, classes) per round

    def as_dict(self) -> dict:
        return {"rounds": self.rounds, "stop_reason": self.stop_reason, "nodes": self.nodes,
                "classes": self.classes, "applied": dict(sorted(self.applied.items()))}


def saturate(g: EGraph, rules: list[RewriteRule], limits: Limits = Limits(),
             audit: bool = False) -> SaturationReport:
    """Match every rule against a frozen snapshot, apply all matches, rebuild; repeat.

    Stops at a fixpoint or when a limit fires. The node cap is checked after
    each application so its cut-off point is deterministic; the time budget
    is a safety net and makes the result timing dependent when it fires.
    """
    # saturation allocates millions of small acyclic objects; the cyclic
    # collector only rescans the live graphs, so pause it for the duration
    paused = gc.isenabled()
    gc.disable()
    try:
        return _saturate(g, rules, limits, audit)
    finally:
        if paused:
            gc.enable()


def _saturate(g: EGraph, rules: list[RewriteRule], limits: Limits, audit: bool) -> SaturationReport:
    report = SaturationReport()
    start = time.monotonic()
    g.rebuild()
    if not rules:
        report.nodes, report.classes = g.num_nodes(), g.num_classes()
        return report
    for _ in range(limits.max_iterations):
        if time.monotonic() - start > limits.time_budget:
            report.stop_reason = "time_budget"
            break
        index = g.op_index()
        matches = []
        for rule in rules:
            for cid, subst in g.ematch(rule.lhs, index):
                if rule.guard is None or rule.guard(g, cid, subst):
                    matches.append((rule, cid, subst))
        changed = False
        stop = None
        for rule, cid, subst in matches:
            new = g.instantiate(rule.rhs, subst)
            if g.find(new) != g.find(cid):
                g.merge(cid, new)
                changed = True
                report.applied[rule.name] = report.applied.get(rule.name, 0) + 1
            if len(g.H) > limits.max_nodes:
                stop = "max_nodes"
                break
        g.rebuild()
        report.rounds += 1
        report.history.append((g.num_nodes(), g.num_classes()))
        if audit:
            check_invariants(g)
        if stop:
            report.stop_reason = stop
            break
        if not changed:
            report.stop_reason = "saturated"
            break
    else:
        report.stop_reason = "max_iterations"
    report.nodes, report.classes = g.num_nodes(), g.num_classes()
    return report
