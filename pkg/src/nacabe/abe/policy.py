"""Attributes, the policy language, and bag-of-bits integer comparisons.

Grammar (AND binds tighter than OR)::

    policy     := or
    or         := and ("OR" and)*
    and        := primary ("AND" primary)*
    primary    := STRING | comparison | "(" policy ")"
    comparison := (IDENT | STRING) OP (INT | DATE)
    OP         := ">" | "<" | ">=" | "<=" | "="

Dates (``YYYY-MM-DD``) become the UNIX timestamp of midnight UTC.
"""

from __future__ import annotations

import datetime as _dt
import enum
import re
from dataclasses import dataclass
from typing import Iterable, Union

from ..errors import PolicySyntaxError

PREFIX_MARKER = ":pfx:"
MAX_BIT_WIDTH = 32
TIMESTAMP_BITS = 32


class AttributeKind(enum.Enum):
    PLAIN = "plain"
    BIT_PREFIX = "bit_prefix"


@dataclass(frozen=True, order=True)
class Attribute:
    value: str

    def __post_init__(self):
        if not isinstance(self.value, str) or not self.value:
            raise ValueError("attribute must be a non-empty string")
        if PREFIX_MARKER in self.value:
            name, _, bits = self.value.partition(PREFIX_MARKER)
            if not name or not (1 <= len(bits) <= MAX_BIT_WIDTH) or set(bits) - {"0", "1"}:
                raise ValueError(f"malformed bit-prefix attribute {self.value!r}")

    @classmethod
    def bit_prefix(cls, name: str, bits: str) -> "Attribute":
        return cls(f"{name}{PREFIX_MARKER}{bits}")

    @property
    def kind(self) -> AttributeKind:
        return AttributeKind.BIT_PREFIX if PREFIX_MARKER in self.value else AttributeKind.PLAIN

    @property
    def prefix_parts(self) -> tuple[str, str]:
        name, _, bits = self.value.partition(PREFIX_MARKER)
        return name, bits

    def __str__(self) -> str:
        return self.value


class AttributeSet(frozenset):
    """A set of :class:`Attribute`; strings are coerced on construction."""

    def __new__(cls, attrs: Iterable[Attribute | str] = ()):
        return super().__new__(cls, (a if isinstance(a, Attribute) else Attribute(a) for a in attrs))

    def __or__(self, other):
        return AttributeSet(frozenset.__or__(self, other))

    def values(self) -> list[str]:
        return sorted(a.value for a in self)

    def canonical(self) -> str:
        """Deterministic text form; complete bit-prefix chains are folded
        into ``name=<value>/<width>`` so timestamps stay short."""
        plain = []
        chains: dict[str, set[str]] = {}
        for a in self:
            if a.kind is AttributeKind.BIT_PREFIX:
                name, bits = a.prefix_parts
                chains.setdefault(name, set()).add(bits)
            else:
                plain.append(_quote(a.value))
        for name, bitsets in chains.items():
            longest = max(bitsets, key=len)
            if bitsets == {longest[:i] for i in range(1, len(longest) + 1)}:
                plain.append(f"{_quote(name)}={int(longest, 2)}/{len(longest)}")
            else:
                plain.extend(_quote(Attribute.bit_prefix(name, b).value) for b in bitsets)
        return ",".join(sorted(plain))


def _quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


# -- policy AST ---------------------------------------------------------------

class CompareOp(enum.Enum):
    LT = "<"
    GT = ">"
    LE = "<="
    GE = ">="
    EQ = "="

    def holds(self, a: int, b: int) -> bool:
        return {
            CompareOp.LT: a < b,
            CompareOp.GT: a > b,
            CompareOp.LE: a <= b,
            CompareOp.GE: a >= b,
            CompareOp.EQ: a == b,
        }[self]


@dataclass(frozen=True)
class Leaf:
    attribute: Attribute

    @classmethod
    def of(cls, value: str) -> "Leaf":
        return cls(Attribute(value))


@dataclass(frozen=True)
class And:
    children: tuple


@dataclass(frozen=True)
class Or:
    children: tuple


@dataclass(frozen=True)
class Compare:
    attr_name: str
    op: CompareOp
    value: int


@dataclass(frozen=True)
class Constant:
    value: bool


ALWAYS_TRUE = Constant(True)
ALWAYS_FALSE = Constant(False)

PolicyExpr = Union[Leaf, And, Or, Compare, Constant]


def simplify(node: PolicyExpr) -> PolicyExpr:
    """Flatten nested gates of one kind, drop duplicate children, fold
    constants and collapse single-child gates."""
    if not isinstance(node, (And, Or)):
        return node
    gate = type(node)
    absorbing = ALWAYS_FALSE if gate is And else ALWAYS_TRUE
    neutral = ALWAYS_TRUE if gate is And else ALWAYS_FALSE
    children: list = []
    for child in node.children:
        child = simplify(child)
        parts = child.children if isinstance(child, gate) else (child,)
        for part in parts:
            if part == absorbing:
                return absorbing
            if part != neutral and part not in children:
                children.append(part)
    if not children:
        return neutral
    if len(children) == 1:
        return children[0]
    return gate(tuple(children))


def leaves(node: PolicyExpr) -> list[Leaf]:
    if isinstance(node, (And, Or)):
        return [leaf for c in node.children for leaf in leaves(c)]
    if isinstance(node, Leaf):
        return [node]
    return []


def is_normalized(node: PolicyExpr) -> bool:
    if isinstance(node, Compare):
        return False
    if isinstance(node, (And, Or)):
        return len(node.children) >= 2 and all(
            is_normalized(c) and not isinstance(c, Constant) for c in node.children
        )
    return True


# -- integer comparisons ---------------------------------------------------------

def _check_width(value: int, bit_width: int):
    if not 1 <= bit_width <= MAX_BIT_WIDTH:
        raise ValueError(f"bit width must be in [1, {MAX_BIT_WIDTH}]")
    if not 0 <= value < 1 << bit_width:
        raise ValueError(f"value {value} does not fit in {bit_width} bits")


def _bits(value: int, bit_width: int) -> str:
    return format(value, f"0{bit_width}b")


def expand_comparison(attr_name: str, op: CompareOp, value: int, bit_width: int = TIMESTAMP_BITS) -> PolicyExpr:
    """Rewrite ``attr_name op value`` as an OR over bit-prefix attributes.

    ``v > X`` holds iff at the first differing bit (MSB first) X has 0 and v
    has 1, so one leaf per zero bit of X suffices; ``<`` is the dual.
    """
    _check_width(value, bit_width)
    bits = _bits(value, bit_width)
    top = (1 << bit_width) - 1
    if op is CompareOp.EQ:
        return Leaf(Attribute.bit_prefix(attr_name, bits))
    if op is CompareOp.GE:
        return ALWAYS_TRUE if value == 0 else expand_comparison(attr_name, CompareOp.GT, value - 1, bit_width)
    if op is CompareOp.LE:
        return ALWAYS_TRUE if value == top else expand_comparison(attr_name, CompareOp.LT, value + 1, bit_width)
    flip_from, flip_to = ("0", "1") if op is CompareOp.GT else ("1", "0")
    terms = tuple(
        Leaf(Attribute.bit_prefix(attr_name, bits[:i] + flip_to))
        for i, b in enumerate(bits)
        if b == flip_from
    )
    return simplify(Or(terms))


def data_attributes_for(attr_name: str, value: int, bit_width: int = TIMESTAMP_BITS) -> AttributeSet:
    """One bit-prefix attribute per prefix length of ``value``'s bit string."""
    _check_width(value, bit_width)
    bits = _bits(value, bit_width)
    return AttributeSet(Attribute.bit_prefix(attr_name, bits[:i]) for i in range(1, bit_width + 1))


def normalize(policy: PolicyExpr, bit_width: int = TIMESTAMP_BITS) -> PolicyExpr:
    """Expand every comparison and simplify; the result holds only
    And/Or/Leaf nodes or is one of the two constants."""
    def expand(node):
        if isinstance(node, Compare):
            return expand_comparison(node.attr_name, node.op, node.value, bit_width)
        if isinstance(node, (And, Or)):
            return type(node)(tuple(expand(c) for c in node.children))
        return node

    return simplify(expand(policy))


# -- text form ------------------------------------------------------------------------

_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_.\-]*\Z")


def to_text(node: PolicyExpr) -> str:
    """Canonical single-spaced text; parses back to an equal AST."""
    if isinstance(node, Leaf):
        return _quote(node.attribute.value)
    if isinstance(node, Compare):
        name = node.attr_name if _IDENT_RE.match(node.attr_name) and node.attr_name.upper() not in _KEYWORDS \
            else _quote(node.attr_name)
        return f"{name} {node.op.value} {node.value}"
    if isinstance(node, Constant):
        return "TRUE" if node.value else "FALSE"
    joiner = " AND " if isinstance(node, And) else " OR "
    parts = [f"({to_text(c)})" if isinstance(c, (And, Or)) else to_text(c) for c in node.children]
    return joiner.join(parts)


_KEYWORDS = {"AND", "OR", "TRUE", "FALSE"}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<string>"(?:[^"\\]|\\.)*")
  | (?P<date>\d{4}-\d{2}-\d{2}(?![\w-]))
  | (?P<int>\d+(?![A-Za-z_]))
  | (?P<op>[<>=!]+)
  | (?P<lparen>\()
  | (?P<rparen>\))
  | (?P<ident>[A-Za-z_][A-Za-z0-9_.\-]*)
    """,
    re.VERBOSE,
)

_OPS = {op.value: op for op in CompareOp}


@dataclass
class _Token:
    kind: str
    text: str
    pos: int  # 1-based


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    i = 0
    while i < len(text):
        m = _TOKEN_RE.match(text, i)
        if m is None:
            if text[i] == '"':
                raise PolicySyntaxError("unterminated string", i + 1)
            raise PolicySyntaxError(f"unexpected character {text[i]!r}", i + 1)
        kind = m.lastgroup
        if kind != "ws":
            value = m.group()
            if kind == "ident" and value.upper() in _KEYWORDS:
                kind = value.upper()
            elif kind == "op" and value not in _OPS:
                raise PolicySyntaxError(f"unknown operator {value!r}", i + 1)
            tokens.append(_Token(kind, value, i + 1))
        i = m.end()
    tokens.append(_Token("eof", "", len(text) + 1))
    return tokens


def _unquote(s: str) -> str:
    return re.sub(r"\\(.)", r"\1", s[1:-1])


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    @property
    def tok(self) -> _Token:
        return self.tokens[self.i]

    def take(self) -> _Token:
        t = self.tokens[self.i]
        self.i += 1
        return t

    def fail(self, message: str):
        t = self.tok
        found = "end of input" if t.kind == "eof" else repr(t.text)
        raise PolicySyntaxError(f"{message}, found {found}", t.pos)

    def parse(self) -> PolicyExpr:
        node = self.parse_or()
        if self.tok.kind != "eof":
            self.fail("expected AND, OR or end of input")
        return node

    def parse_or(self):
        children = [self.parse_and()]
        while self.tok.kind == "OR":
            self.take()
            children.append(self.parse_and())
        return children[0] if len(children) == 1 else Or(tuple(children))

    def parse_and(self):
        children = [self.parse_primary()]
        while self.tok.kind == "AND":
            self.take()
            children.append(self.parse_primary())
        return children[0] if len(children) == 1 else And(tuple(children))

    def parse_primary(self):
        t = self.tok
        if t.kind == "lparen":
            self.take()
            node = self.parse_or()
            if self.tok.kind != "rparen":
                self.fail("expected ')'")
            self.take()
            return node
        if t.kind in ("TRUE", "FALSE"):
            self.take()
            return ALWAYS_TRUE if t.kind == "TRUE" else ALWAYS_FALSE
        if t.kind in ("string", "ident"):
            self.take()
            name = _unquote(t.text) if t.kind == "string" else t.text
            if not name:
                raise PolicySyntaxError("empty attribute", t.pos)
            if self.tok.kind == "op":
                return self.parse_comparison(name)
            try:
                return Leaf(Attribute(name))
            except ValueError as exc:
                raise PolicySyntaxError(str(exc), t.pos) from None
        self.fail("expected attribute, comparison or '('")

    def parse_comparison(self, name: str):
        op = _OPS[self.take().text]
        t = self.tok
        if t.kind == "int":
            value = int(t.text)
        elif t.kind == "date":
            try:
                day = _dt.date.fromisoformat(t.text)
            except ValueError:
                raise PolicySyntaxError(f"invalid date {t.text!r}", t.pos) from None
            value = int(_dt.datetime(day.year, day.month, day.day, tzinfo=_dt.timezone.utc).timestamp())
        else:
            self.fail("expected integer or date")
        if not 0 <= value < 1 << 32:
            raise PolicySyntaxError("integer out of 32-bit range", t.pos)
        self.take()
        return Compare(name, op, value)


def parse_policy(text: str) -> PolicyExpr:
    """Parse policy text into an AST (comparisons are kept, duplicates and
    single-child gates are folded)."""
    return simplify(_Parser(text).parse())
