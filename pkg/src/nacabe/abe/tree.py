"""Threshold-gate access trees compiled from normalized policies."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Union

from ..errors import PolicyRejected
from .policy import ALWAYS_FALSE, ALWAYS_TRUE, And, Attribute, Compare, Constant, Leaf, Or, PolicyExpr, normalize

# Stand-in attribute for the always-true policy. Every attribute set
# implicitly holds it: KP ciphertexts carry a component for it and CP keys a
# key value, so a tree made of this single leaf decrypts for anyone.
TRUE_ATTRIBUTE = Attribute("__true__")


@dataclass(frozen=True)
class TreeLeaf:
    attribute: Attribute


@dataclass(frozen=True)
class Gate:
    threshold: int
    children: tuple

    def __post_init__(self):
        if not 1 <= self.threshold <= len(self.children):
            raise ValueError(f"threshold {self.threshold} outside [1, {len(self.children)}]")


Node = Union[TreeLeaf, Gate]


def build_access_tree(policy: PolicyExpr, bit_width: int = 32) -> Node:
    """And(n) becomes an n-of-n gate, Or(n) a 1-of-n gate; children are
    numbered 1..n by position."""
    policy = normalize(policy, bit_width)
    if policy == ALWAYS_FALSE:
        raise PolicyRejected("policy is never satisfiable (ALWAYS_FALSE)")
    return _compile(policy)


def _compile(node: PolicyExpr) -> Node:
    if isinstance(node, Leaf):
        return TreeLeaf(node.attribute)
    if node == ALWAYS_TRUE:
        return TreeLeaf(TRUE_ATTRIBUTE)
    if isinstance(node, And):
        return Gate(len(node.children), tuple(_compile(c) for c in node.children))
    if isinstance(node, Or):
        return Gate(1, tuple(_compile(c) for c in node.children))
    if isinstance(node, (Compare, Constant)):
        raise PolicyRejected(f"cannot compile {node!r}")
    raise TypeError(f"not a policy node: {node!r}")


def iter_leaves(node: Node) -> Iterator[TreeLeaf]:
    if isinstance(node, TreeLeaf):
        yield node
    else:
        for c in node.children:
            yield from iter_leaves(c)


def leaf_count(node: Node) -> int:
    return sum(1 for _ in iter_leaves(node))


def _has(attrs: Iterable[Attribute], attribute: Attribute) -> bool:
    return attribute == TRUE_ATTRIBUTE or attribute in attrs


def satisfies(tree: Node, attrs: Iterable[Attribute]) -> bool:
    """Leaf: attribute present. Gate: at least ``threshold`` children true."""
    attrs = attrs if isinstance(attrs, (set, frozenset)) else frozenset(attrs)
    if isinstance(tree, TreeLeaf):
        return _has(attrs, tree.attribute)
    needed = tree.threshold
    for child in tree.children:
        if satisfies(child, attrs):
            needed -= 1
            if needed == 0:
                return True
    return False


def satisfying_children(gate: Gate, attrs) -> list[int] | None:
    """Lowest-index children (1-based) that satisfy ``gate``, or None."""
    chosen = []
    for i, child in enumerate(gate.children, start=1):
        if satisfies(child, attrs):
            chosen.append(i)
            if len(chosen) == gate.threshold:
                return chosen
    return None
