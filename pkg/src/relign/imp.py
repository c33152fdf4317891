"""The Imp language: syntax, concrete grammar, renaming and a fuel-bounded interpreter.

Integers are 64-bit signed; overflow and unbound reads raise instead of
wrapping or defaulting, so that two executions can be compared exactly.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Iterator, Union

INT_MIN = -(2**63)
INT_MAX = 2**63 - 1

RESERVED = frozenset({"skip", "if", "else", "while", "true", "false"})


class Side(Enum):
    LEFT = "1"
    RIGHT = "2"
    NEUTRAL = ""


class OriginTag(Enum):
    """Where a loop came from; drives which trace tags it emits."""

    RELATIONAL = "R"
    RUNOFF = "O"
    PLAIN = ""


@dataclass(frozen=True, slots=True)
class Identifier:
    name: str
    side: Side = Side.NEUTRAL

    def __post_init__(self):
        if not self.name:
            raise ValueError("identifier name must be non-empty")

    def __str__(self) -> str:
        return self.name if self.side is Side.NEUTRAL else f"{self.name}_{self.side.value}"

    def __lt__(self, other: Identifier) -> bool:
        return (self.name, self.side.value) < (other.name, other.side.value)


# -- integer expressions -----------------------------------------------------

@dataclass(frozen=True, slots=True)
class Lit:
    value: int


@dataclass(frozen=True, slots=True)
class Var:
    ident: Identifier


@dataclass(frozen=True, slots=True)
class Add:
    lhs: IntExpr
    rhs: IntExpr


@dataclass(frozen=True, slots=True)
class Sub:
    lhs: IntExpr
    rhs: IntExpr


@dataclass(frozen=True, slots=True)
class Mul:
    lhs: IntExpr
    rhs: IntExpr


IntExpr = Union[Lit, Var, Add, Sub, Mul]


# -- boolean expressions -----------------------------------------------------

@dataclass(frozen=True, slots=True)
class BTrue:
    pass


@dataclass(frozen=True, slots=True)
class BFalse:
    pass


@dataclass(frozen=True, slots=True)
class Eq:
    lhs: IntExpr
    rhs: IntExpr


@dataclass(frozen=True, slots=True)
class Lt:
    lhs: IntExpr
    rhs: IntExpr


@dataclass(frozen=True, slots=True)
class Not:
    arg: BoolExpr


@dataclass(frozen=True, slots=True)
class And:
    lhs: BoolExpr
    rhs: BoolExpr


BoolExpr = Union[BTrue, BFalse, Eq, Lt, Not, And]

TRUE = BTrue()
FALSE = BFalse()


# -- commands ----------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class Skip:
    pass


@dataclass(frozen=True, slots=True)
class Seq:
    first: Command
    second: Command


@dataclass(frozen=True, slots=True)
class Assign:
    target: Identifier
    expr: IntExpr


@dataclass(frozen=True, slots=True)
class While:
    cond: BoolExpr
    body: Command
    origin: OriginTag = OriginTag.PLAIN


@dataclass(frozen=True, slots=True)
class If:
    cond: BoolExpr
    then: Command
    orelse: Command


@dataclass(frozen=True, slots=True)
class Block:
    """Straight-line code kept opaque to realignment; runs as its body."""

    body: Command


@dataclass(frozen=True, slots=True)
class Log:
    """Instrumentation hook: appends ``tag`` to the running trace."""

    tag: object
    site: int


Command = Union[Skip, Seq, Assign, While, If, Block, Log]

SKIP = Skip()

State = dict  # Identifier -> int


def seq(*cmds: Command) -> Command:
    """Right-nested sequence; the empty sequence is skip."""
    if not cmds:
        return SKIP
    out = cmds[-1]
    for c in reversed(cmds[:-1]):
        out = Seq(c, out)
    return out


def seq_items(c: Command) -> list[Command]:
    """Flatten a sequence tree into its statements (skips kept)."""
    out: list[Command] = []
    stack = [c]
    while stack:
        x = stack.pop()
        if isinstance(x, Seq):
            stack.append(x.second)
            stack.append(x.first)
        else:
            out.append(x)
    return out


# -- errors ------------------------------------------------------------------

class ImpSyntaxError(ValueError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{line}:{column}: {message}")
        self.line = line
        self.column = column


class EvalError(RuntimeError):
    pass


class UnboundVariable(EvalError):
    pass


class ArithmeticOverflow(EvalError):
    pass


class OutOfFuel(Exception):
    """Evaluation exhausted its fuel; the program may diverge."""


class MixedSides(ValueError):
    pass


# -- traversal ---------------------------------------------------------------

def int_vars(a: IntExpr) -> Iterator[Identifier]:
    if isinstance(a, Var):
        yield a.ident
    elif isinstance(a, (Add, Sub, Mul)):
        yield from int_vars(a.lhs)
        yield from int_vars(a.rhs)


def bool_vars(b: BoolExpr) -> Iterator[Identifier]:
    if isinstance(b, (Eq, Lt)):
        yield from int_vars(b.lhs)
        yield from int_vars(b.rhs)
    elif isinstance(b, Not):
        yield from bool_vars(b.arg)
    elif isinstance(b, And):
        yield from bool_vars(b.lhs)
        yield from bool_vars(b.rhs)


def _cmd_vars(c: Command) -> Iterator[Identifier]:
    stack = [c]
    while stack:
        c = stack.pop()
        if isinstance(c, Seq):
            stack.append(c.second)
            stack.append(c.first)
        elif isinstance(c, Assign):
            yield c.target
            yield from int_vars(c.expr)
        elif isinstance(c, While):
            yield from bool_vars(c.cond)
            stack.append(c.body)
        elif isinstance(c, If):
            yield from bool_vars(c.cond)
            stack.append(c.orelse)
            stack.append(c.then)
        elif isinstance(c, Block):
            stack.append(c.body)


def variables(node: Command | BoolExpr | IntExpr) -> set[Identifier]:
    """Identifiers occurring syntactically in a command or expression."""
    if isinstance(node, (Lit, Var, Add, Sub, Mul)):
        return set(int_vars(node))
    if isinstance(node, (BTrue, BFalse, Eq, Lt, Not, And)):
        return set(bool_vars(node))
    return set(_cmd_vars(node))


def map_int(a: IntExpr, f) -> IntExpr:
    if isinstance(a, Var):
        return Var(f(a.ident))
    if isinstance(a, Lit):
        return a
    return type(a)(map_int(a.lhs, f), map_int(a.rhs, f))


def map_bool(b: BoolExpr, f) -> BoolExpr:
    if isinstance(b, (Eq, Lt)):
        return type(b)(map_int(b.lhs, f), map_int(b.rhs, f))
    if isinstance(b, Not):
        return Not(map_bool(b.arg, f))
    if isinstance(b, And):
        return And(map_bool(b.lhs, f), map_bool(b.rhs, f))
    return b


def map_cmd(c: Command, f) -> Command:
    if isinstance(c, Seq):
        items = [map_cmd(x, f) for x in seq_items_shallow(c)]
        return _rebuild_spine(c, items)
    if isinstance(c, Assign):
        return Assign(f(c.target), map_int(c.expr, f))
    if isinstance(c, While):
        return While(map_bool(c.cond, f), map_cmd(c.body, f), c.origin)
    if isinstance(c, If):
        return If(map_bool(c.cond, f), map_cmd(c.then, f), map_cmd(c.orelse, f))
    if isinstance(c, Block):
        return Block(map_cmd(c.body, f))
    return c


def seq_items_shallow(c: Seq) -> list[Command]:
    """Statements along the right spine of ``c`` (first components plus last tail)."""
    out = []
    while isinstance(c, Seq):
        out.append(c.first)
        c = c.second
    out.append(c)
    return out


def _rebuild_spine(c: Seq, items: list[Command]) -> Command:
    out = items[-1]
    for x in reversed(items[:-1]):
        out = Seq(x, out)
    return out


def rename(c, side: Side):
    """Tag every identifier of ``c`` with ``side``; idempotent.

    Works on commands and on boolean/integer expressions.
    """
    if side is Side.NEUTRAL:
        raise ValueError("rename target must be LEFT or RIGHT")
    for v in variables(c):
        if v.side is not Side.NEUTRAL and v.side is not side:
            raise MixedSides(f"{v} is already tagged {v.side.name}, cannot rename to {side.name}")

    def f(ident: Identifier) -> Identifier:
        return ident if ident.side is side else Identifier(ident.name, side)

    if isinstance(c, (Lit, Var, Add, Sub, Mul)):
        return map_int(c, f)
    if isinstance(c, (BTrue, BFalse, Eq, Lt, Not, And)):
        return map_bool(c, f)
    return map_cmd(c, f)


def loops(c: Command) -> Iterator[While]:
    """All while loops of ``c`` in preorder."""
    stack = [c]
    while stack:
        c = stack.pop()
        if isinstance(c, Seq):
            stack.append(c.second)
            stack.append(c.first)
        elif isinstance(c, While):
            yield c
            stack.append(c.body)
        elif isinstance(c, If):
            stack.append(c.orelse)
            stack.append(c.then)
        elif isinstance(c, Block):
            stack.append(c.body)


def cmd_size(c) -> int:
    """Number of AST nodes, expressions included."""
    if isinstance(c, (Lit, Var, BTrue, BFalse, Skip, Log)):
        return 1
    if isinstance(c, (Add, Sub, Mul, Eq, Lt, And)):
        return 1 + cmd_size(c.lhs) + cmd_size(c.rhs)
    if isinstance(c, Not):
        return 1 + cmd_size(c.arg)
    if isinstance(c, Seq):
        return sum(1 + cmd_size(x) for x in seq_items_shallow(c)) - 1
    if isinstance(c, Assign):
        return 2 + cmd_size(c.expr)
    if isinstance(c, While):
        return 1 + cmd_size(c.cond) + cmd_size(c.body)
    if isinstance(c, If):
        return 1 + cmd_size(c.cond) + cmd_size(c.then) + cmd_size(c.orelse)
    if isinstance(c, Block):
        return 1 + cmd_size(c.body)
    raise TypeError(f"not an Imp node: {c!r}")


# -- interpreter -------------------------------------------------------------

def _check(v: int) -> int:
    if v < INT_MIN or v > INT_MAX:
        raise ArithmeticOverflow(f"64-bit overflow: {v}")
    return v


def eval_int(s: State, a: IntExpr) -> int:
    if isinstance(a, Lit):
        return a.value
    if isinstance(a, Var):
        try:
            return s[a.ident]
        except KeyError:
            raise UnboundVariable(f"read of unbound variable {a.ident}") from None
    if isinstance(a, Add):
        return _check(eval_int(s, a.lhs) + eval_int(s, a.rhs))
    if isinstance(a, Sub):
        return _check(eval_int(s, a.lhs) - eval_int(s, a.rhs))
    if isinstance(a, Mul):
        return _check(eval_int(s, a.lhs) * eval_int(s, a.rhs))
    raise TypeError(f"not an integer expression: {a!r}")


def eval_bool(s: State, b: BoolExpr) -> bool:
    if isinstance(b, Lt):
        return eval_int(s, b.lhs) < eval_int(s, b.rhs)
    if isinstance(b, Eq):
        return eval_int(s, b.lhs) == eval_int(s, b.rhs)
    if isinstance(b, And):
        return eval_bool(s, b.lhs) and eval_bool(s, b.rhs)
    if isinstance(b, Not):
        return not eval_bool(s, b.arg)
    if isinstance(b, BTrue):
        return True
    if isinstance(b, BFalse):
        return False
    raise TypeError(f"not a boolean expression: {b!r}")


class Machine:
    """Mutable execution context shared by one top-level evaluation.

    ``trace`` collects Log tags when not None; with ``snapshots`` set, a copy
    of the state is recorded alongside every tag.
    """

    __slots__ = ("fuel", "trace", "snaps")

    def __init__(self, fuel: int, trace: list | None = None, snapshots: bool = False):
        if fuel < 1:
            raise ValueError("fuel must be positive")
        self.fuel = fuel
        self.trace = trace
        self.snaps: list | None = [] if snapshots else None

    def burn(self):
        self.fuel -= 1
        if self.fuel < 0:
            raise OutOfFuel()

    def run(self, s: State, c: Command) -> None:
        while True:
            self.burn()
            if isinstance(c, Seq):
                self.run(s, c.first)
                c = c.second
                continue
            if isinstance(c, Assign):
                s[c.target] = eval_int(s, c.expr)
            elif isinstance(c, While):
                cond, body = c.cond, c.body
                while eval_bool(s, cond):
                    self.burn()
                    self.run(s, body)
            elif isinstance(c, If):
                c = c.then if eval_bool(s, c.cond) else c.orelse
                continue
            elif isinstance(c, Block):
                c = c.body
                continue
            elif isinstance(c, Log):
                if self.trace is not None:
                    if self.snaps is not None:
                        self.snaps.append((len(self.trace), c.site, dict(s)))
                    self.trace.append(c.tag)
            elif not isinstance(c, Skip):
                raise TypeError(f"not a command: {c!r}")
            return


def eval_imp(s: State, c: Command, fuel: int) -> State:
    """Run ``c`` from ``s``; returns the final state or raises OutOfFuel / EvalError."""
    out = dict(s)
    Machine(fuel).run(out, c)
    return out


# -- concrete syntax ---------------------------------------------------------

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r]+) | (?P<nl>\n) | (?P<comment>//[^\n]*)
  | (?P<int>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>:=|==|!=|<=|>=|&&|\|\||[-+*<>!(){};])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True, slots=True)
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Tok]:
    toks: list[_Tok] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ImpSyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            toks.append(_Tok(kind, m.group(), line, m.start() - line_start + 1))
        pos = m.end()
    toks.append(_Tok("eof", "", line, pos - line_start + 1))
    return toks


class _Parser:
    def __init__(self, text: str, sided: bool):
        self.toks = _tokenize(text)
        self.i = 0
        self.sided = sided

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def error(self, msg: str, tok: _Tok | None = None):
        tok = tok or self.tok
        raise ImpSyntaxError(msg, tok.line, tok.col)

    def at(self, text: str) -> bool:
        t = self.tok
        return t.text == text and t.kind in ("op", "ident")

    def expect(self, text: str) -> _Tok:
        if not self.at(text):
            self.error(f"expected {text!r}, found {self.tok.text or 'end of input'!r}")
        t = self.tok
        self.i += 1
        return t

    def ident(self) -> Identifier:
        t = self.tok
        if t.kind != "ident":
            self.error(f"expected identifier, found {t.text or 'end of input'!r}")
        if t.text in RESERVED:
            self.error(f"reserved word {t.text!r} used as identifier")
        self.i += 1
        name = t.text
        if self.sided:
            m = re.fullmatch(r"(.+)_([12])", name)
            if m:
                return Identifier(m.group(1), Side.LEFT if m.group(2) == "1" else Side.RIGHT)
        return Identifier(name)

    # commands
    def program(self) -> Command:
        c = self.stmts()
        if self.tok.kind != "eof":
            self.error(f"unexpected {self.tok.text!r}")
        return c

    def stmts(self) -> Command:
        items: list[Command] = []
        while self.tok.kind != "eof" and not self.at("}"):
            if self.at(";"):
                self.i += 1
                continue
            stmt, simple = self.stmt()
            items.append(stmt)
            if simple and not (self.at(";") or self.at("}") or self.tok.kind == "eof"):
                self.error(f"expected ';', found {self.tok.text!r}")
        return seq(*items)

    def block(self) -> Command:
        self.expect("{")
        c = self.stmts()
        self.expect("}")
        return c

    def stmt(self) -> tuple[Command, bool]:
        t = self.tok
        if self.at("skip"):
            self.i += 1
            return SKIP, True
        if self.at("while"):
            self.i += 1
            self.expect("(")
            b = self.bexp()
            self.expect(")")
            return While(b, self.block()), False
        if self.at("if"):
            return self.if_stmt(), False
        if self.at("{"):
            return self.block(), False
        if t.kind == "ident":
            x = self.ident()
            self.expect(":=")
            return Assign(x, self.aexp()), True
        self.error(f"expected a statement, found {t.text or 'end of input'!r}")

    def if_stmt(self) -> Command:
        self.expect("if")
        self.expect("(")
        b = self.bexp()
        self.expect(")")
        then = self.block()
        orelse: Command = SKIP
        if self.at("else"):
            self.i += 1
            orelse = self.if_stmt() if self.at("if") else self.block()
        return If(b, then, orelse)

    # booleans
    def bexp(self) -> BoolExpr:
        b = self.conj()
        while self.at("||"):
            self.i += 1
            b = Not(And(Not(b), Not(self.conj())))
        return b

    def conj(self) -> BoolExpr:
        b = self.unary()
        while self.at("&&"):
            self.i += 1
            b = And(b, self.unary())
        return b

    def unary(self) -> BoolExpr:
        if self.at("!"):
            self.i += 1
            return Not(self.unary())
        if self.at("true"):
            self.i += 1
            return TRUE
        if self.at("false"):
            self.i += 1
            return FALSE
        if self.at("("):
            save = self.i
            try:
                self.i += 1
                b = self.bexp()
                self.expect(")")
                return b
            except ImpSyntaxError:
                self.i = save
        return self.comparison()

    def comparison(self) -> BoolExpr:
        a = self.aexp()
        op = self.tok.text
        if op not in ("==", "!=", "<", "<=", ">", ">="):
            self.error(f"expected a comparison operator, found {op or 'end of input'!r}")
        self.i += 1
        c = self.aexp()
        return {
            "==": lambda: Eq(a, c),
            "!=": lambda: Not(Eq(a, c)),
            "<": lambda: Lt(a, c),
            ">": lambda: Lt(c, a),
            "<=": lambda: Not(Lt(c, a)),
            ">=": lambda: Not(Lt(a, c)),
        }[op]()

    # integers
    def aexp(self) -> IntExpr:
        a = self.term()
        while self.at("+") or self.at("-"):
            op = self.tok.text
            self.i += 1
            rhs = self.term()
            a = Add(a, rhs) if op == "+" else Sub(a, rhs)
        return a

    def term(self) -> IntExpr:
        a = self.factor()
        while self.at("*"):
            self.i += 1
            a = Mul(a, self.factor())
        return a

    def factor(self) -> IntExpr:
        t = self.tok
        if t.kind == "int":
            self.i += 1
            return Lit(self._literal(int(t.text), t))
        if self.at("-") and self.toks[self.i + 1].kind == "int":
            self.i += 1
            t2 = self.tok
            self.i += 1
            return Lit(self._literal(-int(t2.text), t2))
        if self.at("("):
            self.i += 1
            a = self.aexp()
            self.expect(")")
            return a
        return Var(self.ident())

    def _literal(self, v: int, tok: _Tok) -> int:
        if v < INT_MIN or v > INT_MAX:
            self.error(f"integer literal {v} does not fit in 64 bits", tok)
        return v


def parse_imp(text: str, sided: bool = False) -> Command:
    """Parse a program. With ``sided``, names ending in _1/_2 get LEFT/RIGHT sides."""
    return _Parser(text, sided).program()


def parse_bool(text: str, sided: bool = False) -> BoolExpr:
    p = _Parser(text, sided)
    b = p.bexp()
    if p.tok.kind != "eof":
        p.error(f"unexpected {p.tok.text!r}")
    return b


def parse_int(text: str, sided: bool = False) -> IntExpr:
    p = _Parser(text, sided)
    a = p.aexp()
    if p.tok.kind != "eof":
        p.error(f"unexpected {p.tok.text!r}")
    return a


# -- printing ----------------------------------------------------------------

_PREC = {Add: 1, Sub: 1, Mul: 2}
_SYM = {Add: "+", Sub: "-", Mul: "*"}


def show_int(a: IntExpr, prec: int = 0) -> str:
    if isinstance(a, Lit):
        return str(a.value)
    if isinstance(a, Var):
        return str(a.ident)
    p = _PREC[type(a)]
    # left-associative: the right operand binds one level tighter
    s = f"{show_int(a.lhs, p)} {_SYM[type(a)]} {show_int(a.rhs, p + 1)}"
    return f"({s})" if p < prec else s


def show_bool(b: BoolExpr, prec: int = 0) -> str:
    if isinstance(b, BTrue):
        return "true"
    if isinstance(b, BFalse):
        return "false"
    if isinstance(b, (Eq, Lt)):
        s = f"{show_int(b.lhs)} {'==' if isinstance(b, Eq) else '<'} {show_int(b.rhs)}"
        return f"({s})" if prec >= 3 else s
    if isinstance(b, Not):
        return "!" + show_bool(b.arg, 3)
    if isinstance(b, And):
        s = f"{show_bool(b.lhs, 1)} && {show_bool(b.rhs, 2)}"
        return f"({s})" if prec >= 2 else s
    raise TypeError(f"not a boolean expression: {b!r}")


def show_cmd(c: Command, indent: int = 0, step: int = 2, origins: bool = False) -> str:
    """Pretty-print in the concrete grammar; ``parse_imp`` inverts this for
    programs without Block/Log nodes. ``origins`` marks runoff loops as ``whileO``."""
    return "\n".join(_lines(c, indent, step, origins))


def _lines(c: Command, ind: int, step: int, origins: bool = False) -> list[str]:
    pad = " " * ind
    if isinstance(c, Seq):
        out: list[str] = []
        for x in seq_items_shallow(c)[:-1]:
            if isinstance(x, Seq):
                out.append(pad + "{")
                out += _lines(x, ind + step, step, origins)
                out.append(pad + "}")
            else:
                out += _terminated(_lines(x, ind, step, origins), x)
        out += _lines(seq_items_shallow(c)[-1], ind, step, origins)
        return out
    if isinstance(c, Skip):
        return [pad + "skip"]
    if isinstance(c, Assign):
        return [f"{pad}{c.target} := {show_int(c.expr)}"]
    if isinstance(c, While):
        kw = "whileO" if origins and c.origin is OriginTag.RUNOFF else "while"
        return [f"{pad}{kw} ({show_bool(c.cond)}) {{", *_lines(c.body, ind + step, step, origins), pad + "}"]
    if isinstance(c, If):
        out = [f"{pad}if ({show_bool(c.cond)}) {{", *_lines(c.then, ind + step, step, origins)]
        if isinstance(c.orelse, Skip):
            return out + [pad + "}"]
        return out + [pad + "} else {", *_lines(c.orelse, ind + step, step, origins), pad + "}"]
    if isinstance(c, Block):
        return _lines(c.body, ind, step, origins)
    if isinstance(c, Log):
        tag = getattr(c.tag, "name", c.tag)
        return [f"{pad}log({tag}, {c.site})"]
    raise TypeError(f"not a command: {c!r}")


def _terminated(lines: list[str], c: Command) -> list[str]:
    if isinstance(c, (Skip, Assign, Log)) or (isinstance(c, Block) and not _ends_in_brace(c.body)):
        lines[-1] += ";"
    return lines


def _ends_in_brace(c: Command) -> bool:
    last = seq_items_shallow(c)[-1] if isinstance(c, Seq) else c
    if isinstance(last, Block):
        return _ends_in_brace(last.body)
    return isinstance(last, (While, If))


def show(node) -> str:
    if isinstance(node, (Lit, Var, Add, Sub, Mul)):
        return show_int(node)
    if isinstance(node, (BTrue, BFalse, Eq, Lt, Not, And)):
        return show_bool(node)
    return show_cmd(node)


def one_line(c: Command, origins: bool = False) -> str:
    """Compact single-line rendering used inside alignment terms."""
    return " ".join(line.strip() for line in show_cmd(c, origins=origins).splitlines())


def free_reads(c: Command) -> set[Identifier]:
    """Variables that may be read before being written (conservative)."""
    reads: set[Identifier] = set()
    _reads(c, set(), reads)
    return reads


def _reads(c: Command, written: set, reads: set) -> set:
    if isinstance(c, Seq):
        for x in seq_items_shallow(c):
            written = _reads(x, written, reads)
        return written
    if isinstance(c, Assign):
        reads.update(v for v in int_vars(c.expr) if v not in written)
        return written | {c.target}
    if isinstance(c, While):
        reads.update(v for v in bool_vars(c.cond) if v not in written)
        _reads(c.body, set(written), reads)
        return written
    if isinstance(c, If):
        reads.update(v for v in bool_vars(c.cond) if v not in written)
        w1 = _reads(c.then, set(written), reads)
        w2 = _reads(c.orelse, set(written), reads)
        return w1 & w2
    if isinstance(c, Block):
        return _reads(c.body, written, reads)
    return written


def sorted_vars(vs: Iterable[Identifier]) -> list[Identifier]:
    return sorted(vs)
