import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from nacabe.abe.policy import (ALWAYS_FALSE, ALWAYS_TRUE, And, Attribute, AttributeKind, AttributeSet, Compare,
                               CompareOp, Leaf, Or, data_attributes_for, expand_comparison, is_normalized, leaves,
                               normalize, parse_policy, to_text)
from nacabe.abe.tree import build_access_tree, satisfies
from nacabe.errors import PolicySyntaxError


# -- attributes ------------------------------------------------------------------------------

def test_attribute_kinds():
    assert Attribute("doctor").kind is AttributeKind.PLAIN
    assert Attribute("ts:pfx:101").kind is AttributeKind.BIT_PREFIX
    assert Attribute.bit_prefix("ts", "1").prefix_parts == ("ts", "1")


@pytest.mark.parametrize("bad", ["", "x:pfx:", "x:pfx:102", ":pfx:1", "x:pfx:" + "1" * 33])
def test_malformed_attributes(bad):
    with pytest.raises(ValueError):
        Attribute(bad)


def test_attribute_set_collapses_duplicates():
    s = AttributeSet(["a", "a", Attribute("b")])
    assert len(s) == 2 and s.values() == ["a", "b"]


def test_canonical_folds_complete_chains():
    s = data_attributes_for("timestamp", 5, 3) | AttributeSet(["home"])
    assert s.canonical() == '"home","timestamp"=5/3'
    # a chain with a gap stays as individual attributes
    assert AttributeSet(["x:pfx:11"]).canonical() == '"x:pfx:11"'
    assert AttributeSet(["b", "a"]).canonical() == AttributeSet(["a", "b"]).canonical() == '"a","b"'


# -- parsing ---------------------------------------------------------------------------------

def test_example_policy_structure():
    ast = parse_policy('"doctor" OR "trainer" OR ("researcher" AND "start_date" > 1672531200)')
    assert ast == Or((Leaf.of("doctor"), Leaf.of("trainer"),
                      And((Leaf.of("researcher"), Compare("start_date", CompareOp.GT, 1672531200)))))


def test_duplicate_leaves_collapse():
    assert parse_policy('"a" AND "a"') == Leaf.of("a")


def test_syntax_error_position():
    with pytest.raises(PolicySyntaxError) as exc:
        parse_policy('"a" OR')
    assert exc.value.position == 7


@pytest.mark.parametrize("text,position", [
    ('"a" AND ("b" OR "c"', 20),
    ('x >> 3', 3),
    ('"a" "b"', 5),
    ('"unterminated', 1),
])
def test_syntax_errors(text, position):
    with pytest.raises(PolicySyntaxError) as exc:
        parse_policy(text)
    assert exc.value.position == position


def test_unknown_operator_reported():
    with pytest.raises(PolicySyntaxError, match="unknown operator"):
        parse_policy("x != 3")


def test_integer_range():
    parse_policy(f"x < {2**32 - 1}")
    with pytest.raises(PolicySyntaxError, match="32-bit"):
        parse_policy(f"x < {2**32}")


def test_dates_become_midnight_utc():
    assert parse_policy("start_date > 2023-01-01") == Compare("start_date", CompareOp.GT, 1672531200)


def test_and_binds_tighter_than_or():
    assert parse_policy('"a" OR "b" AND "c"') == Or((Leaf.of("a"), And((Leaf.of("b"), Leaf.of("c")))))


@given(st.integers(min_value=0, max_value=2**32))
def test_text_round_trip_of_generated_policies(seed):
    from support import random_policy
    rng = random.Random(seed)
    ast = random_policy(rng, ["a", "b c", 'q"uote', "/org/x"], 3)
    if rng.random() < 0.5:
        ast = And((ast, Compare("ts", rng.choice(list(CompareOp)), rng.randrange(2**32))))
    ast = parse_policy(to_text(ast))
    assert parse_policy(to_text(ast)) == ast


# -- comparisons ------------------------------------------------------------------------------

def test_gt_example():
    # 5 = 101b: values 6 and 7 share prefix 11
    assert expand_comparison("x", CompareOp.GT, 5, 3) == Leaf(Attribute("x:pfx:11"))
    tree = build_access_tree(expand_comparison("x", CompareOp.GT, 5, 3), 3)
    assert [v for v in range(8) if satisfies(tree, data_attributes_for("x", v, 3))] == [6, 7]


def test_eq_is_full_prefix():
    assert expand_comparison("x", CompareOp.EQ, 5, 3) == Leaf(Attribute("x:pfx:101"))


def test_constant_edges():
    assert expand_comparison("x", CompareOp.GE, 0, 4) == ALWAYS_TRUE
    assert expand_comparison("x", CompareOp.LE, 15, 4) == ALWAYS_TRUE
    assert expand_comparison("x", CompareOp.GT, 15, 4) == ALWAYS_FALSE
    assert expand_comparison("x", CompareOp.LT, 0, 4) == ALWAYS_FALSE


def test_data_attributes_definition():
    assert data_attributes_for("x", 5, 3) == AttributeSet(["x:pfx:1", "x:pfx:10", "x:pfx:101"])


@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_data_attributes_width_32(v):
    assert len(data_attributes_for("ts", v)) == 32


@given(st.integers(min_value=0, max_value=2**32 - 2))
def test_gt_leaf_count_is_zero_bits(x):
    expected = format(x, "032b").count("0")
    assert len(leaves(expand_comparison("ts", CompareOp.GT, x))) == expected


@given(st.integers(min_value=1, max_value=2**32 - 1))
def test_lt_leaf_count_is_one_bits(x):
    assert len(leaves(expand_comparison("ts", CompareOp.LT, x))) == bin(x).count("1")


def test_exhaustive_semantics_width_6():
    w = 6
    attrs = [data_attributes_for("a", v, w) for v in range(2**w)]
    for op in CompareOp:
        for x in range(2**w):
            policy = expand_comparison("a", op, x, w)
            if policy == ALWAYS_FALSE:
                assert not any(op.holds(v, x) for v in range(2**w))
                continue
            tree = build_access_tree(policy, w)
            for v in range(2**w):
                assert satisfies(tree, attrs[v]) == op.holds(v, x), (op, v, x)


def test_value_must_fit_width():
    with pytest.raises(ValueError):
        expand_comparison("x", CompareOp.GT, 8, 3)
    with pytest.raises(ValueError):
        data_attributes_for("x", 8, 3)


# -- normalization ---------------------------------------------------------------------------

@settings(max_examples=200)
@given(st.integers(min_value=0, max_value=2**32))
def test_normalize_yields_and_or_leaf_only(seed):
    from support import random_policy
    rng = random.Random(seed)
    p = random_policy(rng, ["a", "b", "c"])
    p = And((p, Compare("t", rng.choice(list(CompareOp)), rng.randrange(1, 2**32 - 1))))
    n = normalize(p)
    assert is_normalized(n)
    if isinstance(n, (And, Or)):
        stack = [n]
        while stack:
            node = stack.pop()
            if isinstance(node, (And, Or)):
                assert len(node.children) >= 2
                stack.extend(node.children)


def test_constant_folding():
    assert normalize(And((Leaf.of("a"), ALWAYS_FALSE))) == ALWAYS_FALSE
    assert normalize(Or((Leaf.of("a"), ALWAYS_TRUE))) == ALWAYS_TRUE
    assert normalize(And((Leaf.of("a"), ALWAYS_TRUE))) == Leaf.of("a")
    assert normalize(Or((Leaf.of("a"), Or((Leaf.of("b"), Leaf.of("a")))))) == Or((Leaf.of("a"), Leaf.of("b")))


def test_no_not_operator():
    with pytest.raises(PolicySyntaxError):
        parse_policy('NOT "a"')
    for words in itertools.product(["AND", "OR"], repeat=2):
        parse_policy(f'"a" {words[0]} "b" {words[1]} "c"')
