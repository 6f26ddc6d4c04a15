import random
from dataclasses import replace

import pytest
from hypothesis import given, settings, strategies as st

from nacabe.abe import encoding
from nacabe.abe import field as gf
from nacabe.abe.policy import (ALWAYS_FALSE, ALWAYS_TRUE, And, Attribute, AttributeSet, Compare, CompareOp, Leaf,
                               Or, leaves, normalize, parse_policy)
from nacabe.abe.scheme import (MASTER_ATTRIBUTE, AbeType, cp_encrypt, cp_keygen, decrypt, key_leaf_count,
                               kp_encrypt, kp_keygen, setup, share_down)
from nacabe.abe.tree import TRUE_ATTRIBUTE, Gate, TreeLeaf, build_access_tree, leaf_count, satisfies
from nacabe.errors import (AuthenticationFailed, DecodeError, ParamsMismatch, PolicyNotSatisfied, PolicyRejected,
                           UnknownAttribute)

from support import all_subsets, eval_ast, random_policy

UNIVERSE = ["a", "b", "c", "d", "e", "f"]


def try_decrypt(params, key, ct) -> bool:
    try:
        decrypt(params, key, ct)
    except PolicyNotSatisfied:
        return False
    return True


# -- access trees ----------------------------------------------------------------------------

def test_and_is_n_of_n():
    tree = build_access_tree(And((Leaf.of("a"), Leaf.of("b"))))
    assert tree == Gate(2, (TreeLeaf(Attribute("a")), TreeLeaf(Attribute("b"))))


def test_or_with_nested_and():
    tree = build_access_tree(Or((Leaf.of("a"), And((Leaf.of("b"), Leaf.of("c"))))))
    assert tree.threshold == 1 and len(tree.children) == 2
    assert tree.children[1].threshold == 2


def test_single_leaf_tree():
    assert build_access_tree(Leaf.of("a")) == TreeLeaf(Attribute("a"))


def test_always_false_rejected():
    with pytest.raises(PolicyRejected):
        build_access_tree(ALWAYS_FALSE)
    with pytest.raises(PolicyRejected):
        build_access_tree(Compare("x", CompareOp.LT, 0))


def test_gate_threshold_bounds():
    with pytest.raises(ValueError):
        Gate(3, (TreeLeaf(Attribute("a")), TreeLeaf(Attribute("b"))))
    with pytest.raises(ValueError):
        Gate(0, (TreeLeaf(Attribute("a")),))


def test_example_satisfaction():
    tree = build_access_tree(parse_policy('"doctor" OR "trainer"'))
    assert satisfies(tree, AttributeSet(["trainer"]))
    assert not satisfies(tree, AttributeSet([]))


def test_tree_leaf_count_matches_policy():
    rng = random.Random(3)
    for _ in range(500):
        p = random_policy(rng, UNIVERSE)
        assert leaf_count(build_access_tree(p)) == len(leaves(normalize(p)))


def test_satisfies_matches_ast_evaluator():
    rng = random.Random(4)
    for _ in range(1000):
        p = random_policy(rng, UNIVERSE)
        attrs = AttributeSet(a for a in UNIVERSE if rng.random() < 0.5)
        assert satisfies(build_access_tree(p), attrs) == eval_ast(p, attrs)


def test_empty_attribute_set_never_satisfies():
    rng = random.Random(5)
    for _ in range(200):
        assert not satisfies(build_access_tree(random_policy(rng, UNIVERSE)), AttributeSet())


# -- setup and key generation --------------------------------------------------------------------

def test_setup_is_fresh():
    (p1, m1), (p2, m2) = setup("KP"), setup("KP")
    assert p1.params_id != p2.params_id
    assert len(p1.params_id) == 16
    assert m1.y != 0 and p1.master_public == m1.y


def test_attribute_mirrored_on_first_use():
    rng = random.Random(1)
    params, master = setup(AbeType.KP, rng)
    assert Attribute("a") not in params.attr_public
    kp_keygen(master, Leaf.of("a"), rng)
    assert params.attr_public[Attribute("a")] == master.attr_secret[Attribute("a")] != 0


def test_single_leaf_key_value():
    rng = random.Random(2)
    params, master = setup(AbeType.KP, rng)
    key = kp_keygen(master, Leaf.of("a"), rng)
    t = master.attr_secret[Attribute("a")]
    assert key.leaf_values == (gf.mul(master.y, gf.inv(t)),)


def test_and_shares_recombine_to_master():
    rng = random.Random(3)
    params, master = setup(AbeType.KP, rng)
    key = kp_keygen(master, And((Leaf.of("a"), Leaf.of("b"))), rng)
    qa = gf.mul(key.leaf_values[0], master.attr_secret[Attribute("a")])
    qb = gf.mul(key.leaf_values[1], master.attr_secret[Attribute("b")])
    assert gf.sub(gf.mul(2, qa), qb) == master.y


def test_share_correctness_at_every_gate():
    rng = random.Random(4)
    for _ in range(100):
        tree = build_access_tree(random_policy(rng, UNIVERSE, 4))
        trace = []
        secret = gf.random_element(rng)
        share_down(tree, secret, rng, trace)
        if trace:
            assert trace[0][1] == secret
        for gate, share, children in trace:
            idx = rng.sample(range(1, len(children) + 1), gate.threshold)
            assert gf.interpolate_at_zero({i: children[i - 1] for i in idx}) == share


def test_keygen_twice_differs_but_both_work():
    rng = random.Random(5)
    params, master = setup(AbeType.KP, rng)
    policy = parse_policy('("a" AND "b") OR "c"')
    k1, k2 = kp_keygen(master, policy, rng), kp_keygen(master, policy, rng)
    assert k1.leaf_values != k2.leaf_values
    ct = kp_encrypt(params, ["a", "b"], b"secret", rng)
    assert decrypt(params, k1, ct) == decrypt(params, k2, ct) == b"secret"


def test_cp_key_identity():
    rng = random.Random(6)
    params, master = setup(AbeType.CP, rng)
    key = cp_keygen(master, ["a"], rng)
    k_a = dict(key.attributes)[Attribute("a")]
    t_a = master.attr_secret[Attribute("a")]
    q = gf.random_element(rng)
    assert gf.mul(k_a, gf.mul(q, t_a)) == gf.mul(master.y, q)


def test_cp_empty_attributes_rejected():
    params, master = setup(AbeType.CP, random.Random(7))
    with pytest.raises(ValueError):
        cp_keygen(master, [])


def test_cp_keys_for_same_attributes_are_identical():
    # the emulation's documented collusion artifact
    rng = random.Random(8)
    params, master = setup(AbeType.CP, rng)
    assert cp_keygen(master, ["a", "b"], rng).attributes == cp_keygen(master, ["b", "a"], rng).attributes


def test_kp_encrypt_needs_attributes():
    params, _ = setup(AbeType.KP, random.Random(9))
    with pytest.raises(ValueError):
        kp_encrypt(params, [], b"x")


def test_unknown_attribute():
    rng = random.Random(10)
    params, master = setup(AbeType.KP, rng)
    with pytest.raises(UnknownAttribute):
        kp_encrypt(params, ["never-declared"], b"x", rng)
    cp_params, _ = setup(AbeType.CP, rng)
    with pytest.raises(UnknownAttribute):
        cp_encrypt(cp_params, Leaf.of("never-declared"), b"x", rng)


def test_master_exposed_under_reserved_attribute():
    params, master = setup(AbeType.KP, random.Random(11))
    assert params.attr_public[MASTER_ATTRIBUTE] == master.y


# -- encryption / decryption ------------------------------------------------------------------

@pytest.mark.parametrize("abe_type", ["KP", "CP"])
def test_round_trip_and_denial(abe_type):
    rng = random.Random(12)
    params, master = setup(abe_type, rng)
    master.ensure(AttributeSet(UNIVERSE), rng)
    policy = parse_policy('"a" AND ("b" OR "c")')
    good, bad = AttributeSet(["a", "c"]), AttributeSet(["b", "c"])
    if abe_type == "KP":
        key = kp_keygen(master, policy, rng)
        ok_ct, bad_ct = kp_encrypt(params, good, b"pt", rng), kp_encrypt(params, bad, b"pt", rng)
        assert decrypt(params, key, ok_ct) == b"pt"
        with pytest.raises(PolicyNotSatisfied):
            decrypt(params, key, bad_ct)
    else:
        ct = cp_encrypt(params, policy, b"pt", rng)
        assert decrypt(params, cp_keygen(master, good, rng), ct) == b"pt"
        with pytest.raises(PolicyNotSatisfied):
            decrypt(params, cp_keygen(master, bad, rng), ct)


@pytest.mark.parametrize("abe_type", ["KP", "CP"])
def test_decrypt_iff_satisfies_random(abe_type):
    rng = random.Random(13)
    params, master = setup(abe_type, rng)
    master.ensure(AttributeSet(UNIVERSE), rng)
    for _ in range(500):
        policy = random_policy(rng, UNIVERSE)
        attrs = AttributeSet(a for a in UNIVERSE if rng.random() < 0.5) or AttributeSet(["a"])
        if abe_type == "KP":
            key, ct = kp_keygen(master, policy, rng), kp_encrypt(params, attrs, b"m", rng)
        else:
            key, ct = cp_keygen(master, attrs, rng), cp_encrypt(params, policy, b"m", rng)
        assert try_decrypt(params, key, ct) == satisfies(build_access_tree(policy), attrs)


def test_cp_attribute_mixing_flaw():
    bg = "/org/mhealth/diabetes/id123/cgm/blood-glucose"
    hr = "/org/mhealth/diabetes/id123/watch/heart-rate"
    rng = random.Random(14)
    params, master = setup(AbeType.CP, rng)
    key = cp_keygen(master, [bg, "work", hr, "home"], rng)
    ct = cp_encrypt(params, And((Leaf.of(bg), Leaf.of("home"))), b"glucose", rng)
    assert decrypt(params, key, ct) == b"glucose"


def test_tampered_payload_fails_authentication():
    rng = random.Random(15)
    params, master = setup(AbeType.KP, rng)
    key = kp_keygen(master, Leaf.of("a"), rng)
    ct = kp_encrypt(params, ["a"], b"payload", rng)
    flipped = bytes([ct.payload[0] ^ 1]) + ct.payload[1:]
    with pytest.raises(AuthenticationFailed):
        decrypt(params, key, replace(ct, payload=flipped))


def test_params_mismatch():
    rng = random.Random(16)
    p1, m1 = setup(AbeType.KP, rng)
    p2, m2 = setup(AbeType.KP, rng)
    key = kp_keygen(m1, Leaf.of("a"), rng)
    m2.ensure([Attribute("a")], rng)
    with pytest.raises(ParamsMismatch):
        decrypt(p2, key, kp_encrypt(p2, ["a"], b"x", rng))
    cp, _ = setup(AbeType.CP, rng)
    with pytest.raises(ParamsMismatch):
        kp_encrypt(cp, ["a"], b"x", rng)


def test_or_child_choice_does_not_matter():
    rng = random.Random(17)
    params, master = setup(AbeType.KP, rng)
    key = kp_keygen(master, Or((Leaf.of("a"), Leaf.of("b"), And((Leaf.of("c"), Leaf.of("d"))))), rng)
    ct = kp_encrypt(params, ["a", "b", "c", "d"], b"same", rng)
    outs = {decrypt(params, key, ct, selector=lambda g, sat, pick=i: [sat[pick % len(sat)]] if g.threshold == 1
                    else sat[: g.threshold]) for i in range(3)}
    assert outs == {b"same"}


def test_fresh_randomness_per_encryption():
    rng = random.Random(18)
    params, master = setup(AbeType.KP, rng)
    master.ensure([Attribute("a")], rng)
    c1, c2 = kp_encrypt(params, ["a"], b"x", rng), kp_encrypt(params, ["a"], b"x", rng)
    assert c1.components != c2.components and c1.nonce != c2.nonce
    cp_params, cp_master = setup(AbeType.CP, rng)
    cp_master.ensure([Attribute("a"), Attribute("b")], rng)
    policy = And((Leaf.of("a"), Leaf.of("b")))
    d1, d2 = cp_encrypt(cp_params, policy, b"x", rng), cp_encrypt(cp_params, policy, b"x", rng)
    assert d1.leaf_values != d2.leaf_values and d1.nonce != d2.nonce


@pytest.mark.parametrize("abe_type", ["KP", "CP"])
def test_always_true_decrypts_for_everyone(abe_type):
    rng = random.Random(19)
    params, master = setup(abe_type, rng)
    master.ensure(AttributeSet(UNIVERSE), rng)
    assert build_access_tree(ALWAYS_TRUE) == TreeLeaf(TRUE_ATTRIBUTE)
    for attrs in all_subsets(UNIVERSE[:3])[1:]:
        if abe_type == "KP":
            key, ct = kp_keygen(master, ALWAYS_TRUE, rng), kp_encrypt(params, attrs, b"open", rng)
        else:
            key, ct = cp_keygen(master, attrs, rng), cp_encrypt(params, ALWAYS_TRUE, b"open", rng)
        assert decrypt(params, key, ct) == b"open"


# -- serialization ----------------------------------------------------------------------------

@settings(max_examples=200, deadline=None)
@given(st.integers(min_value=0, max_value=2**32), st.sampled_from(["KP", "CP"]))
def test_key_and_ciphertext_round_trip(seed, abe_type):
    rng = random.Random(seed)
    params, master = setup(abe_type, rng)
    master.ensure(AttributeSet(UNIVERSE), rng)
    policy = random_policy(rng, UNIVERSE)
    attrs = AttributeSet(rng.sample(UNIVERSE, rng.randint(1, len(UNIVERSE))))
    if abe_type == "KP":
        key, ct = kp_keygen(master, policy, rng), kp_encrypt(params, attrs, rng.randbytes(40), rng)
    else:
        key, ct = cp_keygen(master, attrs, rng), cp_encrypt(params, policy, rng.randbytes(40), rng)
    for value, ser, de in ((key, encoding.serialize_key, encoding.deserialize_key),
                           (ct, encoding.serialize_ciphertext, encoding.deserialize_ciphertext),
                           (params, encoding.serialize_params, encoding.deserialize_params)):
        wire = ser(value)
        assert de(wire) == value
        assert ser(de(wire)) == wire


def test_outer_types():
    rng = random.Random(20)
    params, master = setup(AbeType.KP, rng)
    key = kp_keygen(master, Leaf.of("a"), rng)
    assert encoding.serialize_key(key)[0] == 0x80
    assert encoding.serialize_ciphertext(kp_encrypt(params, ["a"], b"x", rng))[0] == 0x81
    assert encoding.serialize_params(params)[0] == 0x82


def test_malformed_input_rejected():
    rng = random.Random(21)
    params, master = setup(AbeType.KP, rng)
    wire = encoding.serialize_key(kp_keygen(master, And((Leaf.of("a"), Leaf.of("b"))), rng))
    for bad in (b"", wire[:-1], wire + b"\x00", b"\x81" + wire[1:], wire[:5]):
        with pytest.raises(DecodeError):
            encoding.deserialize_key(bad)


def test_kp_key_size_is_affine_in_leaf_count():
    rng = random.Random(22)
    params, master = setup(AbeType.KP, rng)
    sizes = {}
    for k in range(1, 65):
        # equal-length attribute names keep the per-leaf cost constant
        policy = Or(tuple(Leaf.of(f"attr{i:03d}") for i in range(k))) if k > 1 else Leaf.of("attr000")
        key = kp_keygen(master, policy, rng)
        assert key_leaf_count(key) == k
        sizes[k] = len(encoding.serialize_key(key))
    per_leaf = sizes[2] - sizes[1]
    assert per_leaf > 0
    # var-number length prefixes grow at 253 bytes, so allow a few bytes of drift
    for k, size in sizes.items():
        assert abs(size - sizes[1] - (k - 1) * per_leaf) <= 8, k


def test_comparison_key_leaf_count_is_sum_of_expansions():
    rng = random.Random(23)
    params, master = setup(AbeType.KP, rng)
    for c in range(1, 6):
        values = [rng.randrange(1, 2**32 - 1) for _ in range(c)]
        policy = And(tuple(Compare("ts", CompareOp.GT, v) for v in values)) if c > 1 else Compare(
            "ts", CompareOp.GT, values[0])
        zero_bits = sum(format(v, "032b").count("0") for v in values)
        assert key_leaf_count(kp_keygen(master, policy, rng)) == zero_bits


def test_ensure_accepts_strings_and_is_order_independent():
    import random as _r
    from nacabe.abe.scheme import setup as _setup
    _, m1 = _setup("KP", _r.Random(4))
    _, m2 = _setup("KP", _r.Random(4))
    assert m1.ensure(["b", "a", "c"], _r.Random(5))
    assert m2.ensure(AttributeSet(["c", "a", "b"]), _r.Random(5))
    assert m1.attr_secret == m2.attr_secret
    assert m1.params.knows(AttributeSet(["a", "b", "c"]))
