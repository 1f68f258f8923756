"""Boolean guard expressions over thing attributes.

    speed > 120
    not (temperature >= 0 and temperature <= 90) and not (temperature >= -10 and temperature <= -1)
    ignition == "ON" or valid == true
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

Scalar = Union[int, float, str, bool]


class ExprSyntaxError(ValueError):
    def __init__(self, message: str, offset: int) -> None:
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class GuardError(RuntimeError):
    """Raised when a guard cannot be evaluated against a thing."""


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>-?\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)
  | (?P<str>"(?:[^"\\]|\\.)*"|'(?:[^'\\]|\\.)*')
  | (?P<op><=|>=|==|!=|<|>)
  | (?P<paren>[()])
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
    """,
    re.VERBOSE,
)

_KEYWORDS = {"and", "or", "not", "true", "false"}


def _number(text: str) -> Union[int, float]:
    try:
        return int(text)
    except ValueError:
        return float(text)


def _format(value: Scalar) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    return repr(value)


@dataclass(frozen=True)
class Const:
    value: Scalar

    def eval(self, attrs: dict) -> Scalar:
        return self.value

    def attributes(self) -> set:
        return set()

    def __str__(self) -> str:
        return _format(self.value)


@dataclass(frozen=True)
class Attr:
    name: str

    def eval(self, attrs: dict) -> Scalar:
        try:
            return attrs[self.name]
        except KeyError:
            raise GuardError(f"attribute {self.name!r} is not set on the thing") from None

    def attributes(self) -> set:
        return {self.name}

    def __str__(self) -> str:
        return self.name


def _ordered(a: Scalar, b: Scalar) -> bool:
    num = (int, float)
    if isinstance(a, bool) or isinstance(b, bool):
        return False
    return (isinstance(a, num) and isinstance(b, num)) or (isinstance(a, str) and isinstance(b, str))


def _equal(a: Scalar, b: Scalar) -> bool:
    # 1 == 1.0 holds; true == 1 does not
    return (type(a) is type(b) or _ordered(a, b)) and a == b


_CMP = {
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
}


@dataclass(frozen=True)
class Compare:
    op: str
    left: object
    right: object

    def eval(self, attrs: dict) -> bool:
        a = self.left.eval(attrs)
        b = self.right.eval(attrs)
        if self.op == "==":
            return _equal(a, b)
        if self.op == "!=":
            return not _equal(a, b)
        if not _ordered(a, b):
            raise GuardError(f"cannot order {_format(a)} and {_format(b)} with {self.op}")
        return _CMP[self.op](a, b)

    def attributes(self) -> set:
        return self.left.attributes() | self.right.attributes()

    def __str__(self) -> str:
        return f"{self.left} {self.op} {self.right}"


def _truth(value: Scalar) -> bool:
    if not isinstance(value, bool):
        raise GuardError(f"{_format(value)} is not a boolean")
    return value


@dataclass(frozen=True)
class Not:
    operand: object

    def eval(self, attrs: dict) -> bool:
        return not _truth(self.operand.eval(attrs))

    def attributes(self) -> set:
        return self.operand.attributes()

    def __str__(self) -> str:
        return f"not {_wrap(self.operand, Not)}"


@dataclass(frozen=True)
class BoolOp:
    op: str
    operands: tuple

    def eval(self, attrs: dict) -> bool:
        if self.op == "and":
            return all(_truth(o.eval(attrs)) for o in self.operands)
        return any(_truth(o.eval(attrs)) for o in self.operands)

    def attributes(self) -> set:
        return set().union(*(o.attributes() for o in self.operands))

    def __str__(self) -> str:
        return f" {self.op} ".join(_wrap(o, self) for o in self.operands)


def _wrap(node: object, parent: object) -> str:
    if isinstance(node, BoolOp):
        if isinstance(parent, BoolOp) and parent.op == "or" and node.op == "and":
            return str(node)
        return f"({node})"
    return str(node)


class _Parser:
    def __init__(self, text: str) -> None:
        self.text = text
        self.tokens = []
        pos = 0
        while pos < len(text):
            m = _TOKEN_RE.match(text, pos)
            if m is None:
                raise ExprSyntaxError(f"unexpected character {text[pos]!r}", pos)
            if m.lastgroup != "ws":
                self.tokens.append((m.lastgroup, m.group(), pos))
            pos = m.end()
        self.tokens.append(("eof", "", len(text)))
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        if tok[0] != "eof":
            self.i += 1
        return tok

    def word(self, w: str) -> bool:
        kind, text, _ = self.peek()
        return kind == "name" and text.lower() == w

    def parse(self):
        node = self.or_expr()
        kind, text, pos = self.peek()
        if kind != "eof":
            raise ExprSyntaxError(f"unexpected {text!r}", pos)
        return node

    def or_expr(self):
        items = [self.and_expr()]
        while self.word("or"):
            self.take()
            items.append(self.and_expr())
        return items[0] if len(items) == 1 else BoolOp("or", tuple(items))

    def and_expr(self):
        items = [self.not_expr()]
        while self.word("and"):
            self.take()
            items.append(self.not_expr())
        return items[0] if len(items) == 1 else BoolOp("and", tuple(items))

    def not_expr(self):
        if self.word("not"):
            self.take()
            return Not(self.not_expr())
        return self.comparison()

    def comparison(self):
        left = self.atom()
        kind, text, _ = self.peek()
        if kind == "op":
            self.take()
            return Compare(text, left, self.atom())
        return left

    def atom(self):
        kind, text, pos = self.take()
        if kind == "num":
            return Const(_number(text))
        if kind == "str":
            body = text[1:-1]
            return Const(re.sub(r"\\(.)", r"\1", body))
        if kind == "paren" and text == "(":
            node = self.or_expr()
            k, t, p = self.take()
            if t != ")":
                raise ExprSyntaxError("expected ')'", p)
            return node
        if kind == "name":
            low = text.lower()
            if low == "true":
                return Const(True)
            if low == "false":
                return Const(False)
            if low in _KEYWORDS:
                raise ExprSyntaxError(f"unexpected keyword {text!r}", pos)
            return Attr(text)
        if kind == "eof":
            raise ExprSyntaxError("unexpected end of expression", pos)
        raise ExprSyntaxError(f"unexpected {text!r}", pos)


def parse_expr(text: str):
    return _Parser(text).parse()


def evaluate(node, attrs: dict) -> bool:
    return _truth(node.eval(attrs))
