"""Conversion between the Imp / CoreRel ASTs and generic e-graph terms."""
from __future__ import annotations

from .corerel import IfR, Pair, RelSeq, WhileR
from .egraph import Term
from .imp import (
    SKIP,
    Add,
    And,
    Assign,
    BFalse,
    Block,
    BTrue,
    Eq,
    FALSE,
    If,
    Lit,
    Lt,
    Mul,
    Not,
    OriginTag,
    Seq,
    Skip,
    Sub,
    TRUE,
    Var,
    While,
)

# operator -> arity; data-carrying ops noted in comments
ARITY = {
    "num": 0,  # data: int
    "var": 0,  # data: Identifier
    "add": 2, "sub": 2, "mul": 2,
    "true": 0, "false": 0, "eq": 2, "lt": 2, "not": 1, "and": 2,
    "skip": 0, "seq": 2,
    "assign": 1,  # data: Identifier
    "while": 2,  # data: OriginTag
    "if": 3, "block": 1,
    "pair": 2, "relseq": 2, "ifR": 4,
    "whileR": 3,  # data: stutter schedule or None
}

_BIN = {Add: "add", Sub: "sub", Mul: "mul", Eq: "eq", Lt: "lt", And: "and"}
_BIN_INV = {v: k for k, v in _BIN.items()}

SKIP_T = Term("skip")
TRUE_T = Term("true")


def to_term(x) -> Term:
    t = type(x)
    if t in _BIN:
        return Term(_BIN[t], (to_term(x.lhs), to_term(x.rhs)))
    if t is Lit:
        return Term("num", (), x.value)
    if t is Var:
        return Term("var", (), x.ident)
    if t is BTrue:
        return TRUE_T
    if t is BFalse:
        return Term("false")
    if t is Not:
        return Term("not", (to_term(x.arg),))
    if t is Skip:
        return SKIP_T
    if t is Seq:
        return Term("seq", (to_term(x.first), to_term(x.second)))
    if t is Assign:
        return Term("assign", (to_term(x.expr),), x.target)
    if t is While:
        return Term("while", (to_term(x.cond), to_term(x.body)), x.origin)
    if t is If:
        return Term("if", (to_term(x.cond), to_term(x.then), to_term(x.orelse)))
    if t is Block:
        return Term("block", (to_term(x.body),))
    if t is Pair:
        return Term("pair", (to_term(x.left), to_term(x.right)))
    if t is RelSeq:
        return Term("relseq", (to_term(x.first), to_term(x.second)))
    if t is IfR:
        return Term("ifR", (to_term(x.cond1), to_term(x.cond2), to_term(x.then), to_term(x.orelse)))
    if t is WhileR:
        return Term("whileR", (to_term(x.cond1), to_term(x.cond2), to_term(x.body)), x.stutter)
    raise TypeError(f"no term encoding for {x!r}")


def from_term(t: Term):
    op, a = t.op, t.args
    if len(a) != ARITY.get(op, -1):
        raise ValueError(f"bad arity for {op}: {len(a)}")
    if op in _BIN_INV:
        return _BIN_INV[op](from_term(a[0]), from_term(a[1]))
    if op == "num":
        return Lit(t.data)
    if op == "var":
        return Var(t.data)
    if op == "true":
        return TRUE
    if op == "false":
        return FALSE
    if op == "not":
        return Not(from_term(a[0]))
    if op == "skip":
        return SKIP
    if op == "seq":
        return Seq(from_term(a[0]), from_term(a[1]))
    if op == "assign":
        return Assign(t.data, from_term(a[0]))
    if op == "while":
        return While(from_term(a[0]), from_term(a[1]), t.data if t.data is not None else OriginTag.PLAIN)
    if op == "if":
        return If(from_term(a[0]), from_term(a[1]), from_term(a[2]))
    if op == "block":
        return Block(from_term(a[0]))
    if op == "pair":
        return Pair(from_term(a[0]), from_term(a[1]))
    if op == "relseq":
        return RelSeq(from_term(a[0]), from_term(a[1]))
    if op == "ifR":
        return IfR(*(from_term(x) for x in a))
    if op == "whileR":
        return WhileR(from_term(a[0]), from_term(a[1]), from_term(a[2]), t.data)
    raise ValueError(f"unknown operator {op}")


def term_size(t: Term) -> int:
    return 1 + sum(term_size(a) for a in t.args)
