"""Mini-language front end: statement AST, parser, and canonical printer.

The language is a small imperative core: integer scalars, integer arrays,
assignment, ``read``/``print``, ``if``/``else``, ``while``, ``break``,
``exit``, and brace-delimited statement blocks.  ``#`` starts a line
comment.  Conditions are and/or combinations of comparisons with the usual
precedence (``and`` binds tighter); grouping parentheses are not part of
the condition grammar, so every condition the parser accepts can be
printed back without parentheses.

The printer is canonical: structurally identical trees always render to
byte-identical text, and ``parse(render(tree))`` reproduces the tree.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Union

from .errors import MiniLangSyntaxError

KEYWORDS = {"read", "print", "if", "else", "while", "break", "exit", "and", "or"}

CMP_OPS = ("<=", ">=", "==", "!=", "<", ">")
BIN_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


# ---------------------------------------------------------------------------
# AST nodes


@dataclass
class Lit:
    value: int


@dataclass
class Var:
    name: str


@dataclass
class Index:
    name: str
    index: "Expr"


@dataclass
class Neg:
    operand: "Expr"


@dataclass
class Bin:
    op: str
    left: "Expr"
    right: "Expr"


Expr = Union[Lit, Var, Index, Neg, Bin]


@dataclass
class Cmp:
    op: str
    left: Expr
    right: Expr


@dataclass
class Bool:
    op: str  # "and" or "or"
    args: list = field(default_factory=list)


Cond = Union[Cmp, Bool]


@dataclass
class Assign:
    target: Union[Var, Index]
    value: Expr


@dataclass
class Read:
    target: Union[Var, Index]


@dataclass
class Print:
    value: Expr


@dataclass
class If:
    cond: Cond
    then: list = field(default_factory=list)
    orelse: "list | None" = None


@dataclass
class While:
    cond: Cond
    body: list = field(default_factory=list)


@dataclass
class Break:
    pass


@dataclass
class Exit:
    pass


@dataclass
class Block:
    body: list = field(default_factory=list)


Stmt = Union[Assign, Read, Print, If, While, Break, Exit, Block]


def child_lists(stmt: Stmt) -> list:
    """Statement lists nested directly under one statement, in order."""
    if isinstance(stmt, If):
        return [stmt.then] if stmt.orelse is None else [stmt.then, stmt.orelse]
    if isinstance(stmt, While):
        return [stmt.body]
    if isinstance(stmt, Block):
        return [stmt.body]
    return []


def iter_statements(stmts: list) -> Iterator[Stmt]:
    """All statement nodes in pre-order (a node before its nested bodies)."""
    for s in stmts:
        yield s
        for lst in child_lists(s):
            yield from iter_statements(lst)


# ---------------------------------------------------------------------------
# Lexer


@dataclass(frozen=True)
class _Token:
    kind: str  # "int" | "ident" | "kw" | "punct" | "eof"
    text: str
    line: int
    col: int


_PUNCT2 = (":=", "<=", ">=", "==", "!=")
_PUNCT1 = set("+-*/<>;{}()[]")


def _tokenize(text: str) -> list[_Token]:
    toks: list[_Token] = []
    line, col = 1, 1
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if c == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        start_col = col
        two = text[i : i + 2]
        if two in _PUNCT2:
            toks.append(_Token("punct", two, line, start_col))
            i += 2
            col += 2
            continue
        if c.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            toks.append(_Token("int", text[i:j], line, start_col))
            col += j - i
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            kind = "kw" if word in KEYWORDS else "ident"
            toks.append(_Token(kind, word, line, start_col))
            col += j - i
            i = j
            continue
        if c in _PUNCT1:
            toks.append(_Token("punct", c, line, start_col))
            i += 1
            col += 1
            continue
        raise MiniLangSyntaxError(f"unexpected character {c!r}", line, start_col)
    toks.append(_Token("eof", "", line, col))
    return toks


# ---------------------------------------------------------------------------
# Parser


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.pos = 0

    def peek(self) -> _Token:
        return self.toks[self.pos]

    def next(self) -> _Token:
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def error(self, message: str, tok: _Token | None = None):
        tok = tok or self.peek()
        raise MiniLangSyntaxError(message, tok.line, tok.col)

    def expect(self, text: str) -> _Token:
        t = self.peek()
        if t.text != text:
            self.error(f"expected {text!r}, found {t.text!r}" if t.text else f"expected {text!r}")
        return self.next()

    def program(self) -> list:
        stmts = []
        while self.peek().kind != "eof":
            stmts.append(self.statement())
        if not stmts:
            self.error("empty program")
        return stmts

    def statement(self) -> Stmt:
        t = self.peek()
        if t.kind == "kw":
            if t.text == "read":
                self.next()
                target = self.lvalue()
                self.expect(";")
                return Read(target)
            if t.text == "print":
                self.next()
                value = self.expr()
                self.expect(";")
                return Print(value)
            if t.text == "if":
                self.next()
                cond = self.cond()
                then = self.block_body()
                orelse = None
                if self.peek().text == "else":
                    self.next()
                    orelse = self.block_body()
                return If(cond, then, orelse)
            if t.text == "while":
                self.next()
                cond = self.cond()
                return While(cond, self.block_body())
            if t.text == "break":
                self.next()
                self.expect(";")
                return Break()
            if t.text == "exit":
                self.next()
                self.expect(";")
                return Exit()
            self.error(f"unexpected keyword {t.text!r}")
        if t.text == "{":
            return Block(self.block_body())
        if t.kind == "ident":
            target = self.lvalue()
            self.expect(":=")
            value = self.expr()
            self.expect(";")
            return Assign(target, value)
        self.error("expected a statement")

    def block_body(self) -> list:
        self.expect("{")
        stmts = []
        while self.peek().text != "}":
            if self.peek().kind == "eof":
                self.error("unterminated block")
            stmts.append(self.statement())
        self.next()
        return stmts

    def lvalue(self) -> Union[Var, Index]:
        t = self.peek()
        if t.kind != "ident":
            self.error("expected a variable name")
        self.next()
        if self.peek().text == "[":
            self.next()
            idx = self.expr()
            self.expect("]")
            return Index(t.text, idx)
        return Var(t.text)

    # conditions: or-of-and-of-comparisons
    def cond(self) -> Cond:
        args = [self.and_cond()]
        while self.peek().text == "or":
            self.next()
            args.append(self.and_cond())
        return args[0] if len(args) == 1 else Bool("or", args)

    def and_cond(self) -> Cond:
        args = [self.comparison()]
        while self.peek().text == "and":
            self.next()
            args.append(self.comparison())
        return args[0] if len(args) == 1 else Bool("and", args)

    def comparison(self) -> Cmp:
        left = self.expr()
        t = self.peek()
        if t.text not in CMP_OPS:
            self.error("expected a comparison operator")
        self.next()
        return Cmp(t.text, left, self.expr())

    # expressions
    def expr(self) -> Expr:
        node = self.term()
        while self.peek().text in ("+", "-"):
            op = self.next().text
            node = Bin(op, node, self.term())
        return node

    def term(self) -> Expr:
        node = self.factor()
        while self.peek().text in ("*", "/"):
            op = self.next().text
            node = Bin(op, node, self.factor())
        return node

    def factor(self) -> Expr:
        t = self.peek()
        if t.text == "-":
            self.next()
            operand = self.factor()
            if isinstance(operand, Lit):
                return Lit(-operand.value)
            return Neg(operand)
        if t.kind == "int":
            self.next()
            return Lit(int(t.text))
        if t.kind == "ident":
            return self.lvalue()
        if t.text == "(":
            self.next()
            node = self.expr()
            self.expect(")")
            return node
        self.error("expected an expression")


def parse(text: str) -> list:
    """Parse source text into a statement list; raises MiniLangSyntaxError."""
    return _Parser(text).program()


# ---------------------------------------------------------------------------
# Canonical printer


def expr_to_str(e: Expr, parent_prec: int = 0, right_side: bool = False) -> str:
    if isinstance(e, Lit):
        return str(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Index):
        return f"{e.name}[{expr_to_str(e.index)}]"
    if isinstance(e, Neg):
        inner = expr_to_str(e.operand)
        # parenthesize compound operands, and anything printing with a
        # leading minus so "--" never appears
        if isinstance(e.operand, (Bin, Neg)) or inner.startswith("-"):
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(e, Bin):
        prec = BIN_PREC[e.op]
        s = (
            f"{expr_to_str(e.left, prec, False)} {e.op} "
            f"{expr_to_str(e.right, prec, True)}"
        )
        # parenthesize when binding looser than the parent, or equally tight
        # on the right of a left-associative operator
        if prec < parent_prec or (prec == parent_prec and right_side):
            return f"({s})"
        return s
    raise TypeError(f"not an expression node: {e!r}")


def cond_to_str(c: Cond, under_and: bool = False) -> str:
    if isinstance(c, Cmp):
        return f"{expr_to_str(c.left)} {c.op} {expr_to_str(c.right)}"
    if isinstance(c, Bool):
        if len(c.args) < 2:
            raise ValueError("boolean condition needs at least two operands")
        if c.op == "or" and under_and:
            raise ValueError("or-condition nested under and is not expressible")
        return f" {c.op} ".join(cond_to_str(a, under_and=c.op == "and") for a in c.args)
    raise TypeError(f"not a condition node: {c!r}")


def _lvalue_to_str(lv: Union[Var, Index]) -> str:
    return lv.name if isinstance(lv, Var) else f"{lv.name}[{expr_to_str(lv.index)}]"


def render(stmts: list) -> tuple[str, list[tuple[int, int]]]:
    """Canonical text plus one (start, end) line span per pre-order statement."""
    lines: list[str] = []
    spans: list[tuple[int, int] | None] = []

    def emit(body: list, depth: int):
        pad = "  " * depth
        for s in body:
            slot = len(spans)
            spans.append(None)
            start = len(lines) + 1
            if isinstance(s, Assign):
                lines.append(f"{pad}{_lvalue_to_str(s.target)} := {expr_to_str(s.value)};")
            elif isinstance(s, Read):
                lines.append(f"{pad}read {_lvalue_to_str(s.target)};")
            elif isinstance(s, Print):
                lines.append(f"{pad}print {expr_to_str(s.value)};")
            elif isinstance(s, Break):
                lines.append(f"{pad}break;")
            elif isinstance(s, Exit):
                lines.append(f"{pad}exit;")
            elif isinstance(s, If):
                lines.append(f"{pad}if {cond_to_str(s.cond)} {{")
                emit(s.then, depth + 1)
                if s.orelse is not None:
                    lines.append(f"{pad}}} else {{")
                    emit(s.orelse, depth + 1)
                lines.append(f"{pad}}}")
            elif isinstance(s, While):
                lines.append(f"{pad}while {cond_to_str(s.cond)} {{")
                emit(s.body, depth + 1)
                lines.append(f"{pad}}}")
            elif isinstance(s, Block):
                lines.append(f"{pad}{{")
                emit(s.body, depth + 1)
                lines.append(f"{pad}}}")
            else:
                raise TypeError(f"not a statement node: {s!r}")
            spans[slot] = (start, len(lines))

    emit(stmts, 0)
    return "\n".join(lines) + "\n", spans  # type: ignore[return-value]
