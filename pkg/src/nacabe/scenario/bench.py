"""Benchmarks: key/ciphertext size against comparison count, and the
effect of content-key caching on ABE work."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

from ..abe import encoding
from ..abe.policy import (And, AttributeSet, Compare, CompareOp, PolicyExpr, data_attributes_for, leaves,
                          normalize)
from ..abe.scheme import AbeType, cp_encrypt, keygen, kp_encrypt, setup
from ..abe.tree import build_access_tree, iter_leaves, leaf_count
from ..nac import AttributeAuthority, Encryptor, hybrid
from ..nac.segments import DEFAULT_MSS, segment_count
from ..ndn import Identity, Name, Network

TIMESTAMP = "timestamp"
_RANGE_OPS = (CompareOp.LT, CompareOp.GT, CompareOp.LE, CompareOp.GE)


@dataclass(frozen=True)
class KeySizeRow:
    comparisons: int
    leaves: float
    dkey_bytes: float
    ck_bytes: float
    dkey_segments: float
    samples: tuple = ()           # per trial: (leaves, dkey_bytes, ck_bytes, dkey_segments)


@dataclass(frozen=True)
class KeySizeTable:
    abe_type: AbeType
    rows: list
    slope: float
    intercept: float
    r_squared: float

    @property
    def measured(self) -> list[float]:
        """The column that grows with the policy: DKEY for KP, CK for CP."""
        return [r.dkey_bytes if self.abe_type is AbeType.KP else r.ck_bytes for r in self.rows]


def linear_fit(xs: list[float], ys: list[float]) -> tuple[float, float, float]:
    """Least-squares ``y = a*x + b``; returns (a, b, R^2)."""
    n = len(xs)
    mx, my = sum(xs) / n, sum(ys) / n
    sxx = sum((x - mx) ** 2 for x in xs)
    sxy = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
    a = sxy / sxx
    b = my - a * mx
    ss_res = sum((y - (a * x + b)) ** 2 for x, y in zip(xs, ys))
    ss_tot = sum((y - my) ** 2 for y in ys)
    return a, b, 1.0 - ss_res / ss_tot if ss_tot else 1.0


def comparison_policy(c: int, rng: random.Random) -> PolicyExpr:
    """AND of ``c`` range comparisons on fresh random 32-bit timestamps."""
    terms = []
    for _ in range(c):
        op = rng.choice(_RANGE_OPS)
        # keep the comparison non-trivial at both ends of the range
        value = rng.randrange(1, (1 << 32) - 1)
        terms.append(Compare(TIMESTAMP, op, value))
    return terms[0] if c == 1 else And(tuple(terms))


def bench_keysize(abe_type: AbeType | str = AbeType.KP, max_comparisons: int = 5, trials: int = 20,
                  mss: int = DEFAULT_MSS, seed: int = 0) -> KeySizeTable:
    """Average serialized sizes over ``trials`` random policies per count.

    KP: the hybrid-wrapped DKEY carrying the policy (as published); the CK
    ciphertext is under one timestamp's data attributes. CP: the CK
    ciphertext carrying the policy; the DKEY holds one timestamp's
    attributes.
    """
    abe_type = AbeType(abe_type)
    rng = random.Random(seed)
    consumer = Identity("/bench/consumer", rng=rng)
    rows = []
    for c in range(1, max_comparisons + 1):
        samples = []
        for _ in range(trials):
            params, master = setup(abe_type, rng)
            policy = comparison_policy(c, rng)
            attrs = data_attributes_for(TIMESTAMP, rng.randrange(1 << 32))
            master.ensure(attrs | _leaf_attributes(policy), rng)
            if abe_type is AbeType.KP:
                key = keygen(master, policy, rng)
                ct = kp_encrypt(params, attrs, rng.randbytes(32), rng)
            else:
                key = keygen(master, attrs, rng)
                ct = cp_encrypt(params, policy, rng.randbytes(32), rng)
            dkey = len(hybrid.seal(consumer.encryption_public, encoding.serialize_key(key), rng))
            samples.append((leaf_count(build_access_tree(policy)), dkey,
                            len(encoding.serialize_ciphertext(ct)), segment_count(dkey, mss)))
        means = [sum(col) / trials for col in zip(*samples)]
        rows.append(KeySizeRow(c, *means, samples=tuple(samples)))
    table = KeySizeTable(abe_type, rows, 0.0, 0.0, 0.0)
    slope, intercept, r2 = linear_fit([float(r.comparisons) for r in rows], table.measured)
    return KeySizeTable(abe_type, rows, slope, intercept, r2)


def _leaf_attributes(policy: PolicyExpr) -> AttributeSet:
    return AttributeSet(leaf.attribute for leaf in iter_leaves(build_access_tree(policy)))


def expansion_size(policy: PolicyExpr) -> int:
    """Leaves the normalized policy has (0 for a constant)."""
    return len(leaves(normalize(policy)))


@dataclass(frozen=True)
class CkCacheRow:
    label: str
    max_items: int | None
    max_age_ms: int | None
    items: int
    cks_generated: int
    abe_encryptions: int
    total_virtual_ms: int


def run_production(n_items: int, max_items: int | None, max_age_ms: int | None,
                   tags: list[AttributeSet], interval_ms: int = 10, seed: int = 0) -> CkCacheRow:
    """Produce ``n_items`` items (tag i cycles through ``tags``) on a small
    network with a live authority, ``interval_ms`` of virtual time apart."""
    if n_items < 1:
        raise ValueError("n_items must be at least 1")
    rng = random.Random(seed)
    net = Network(rng=rng)
    net.add_node("aa")
    net.add_node("producer")
    net.connect("aa", "producer", 5)
    anchor = Identity("/bench", rng=rng)
    aa = AttributeAuthority(net.nodes["aa"].add_app_face(rng), Identity("/bench/aa", anchor, rng), AbeType.KP,
                            rng=rng)
    aa.declare_attributes(set().union(*tags))
    enc = Encryptor(net.nodes["producer"].add_app_face(rng), Identity("/bench/producer", anchor, rng),
                    aa.prefix, AbeType.KP, data_prefixes=["/bench/data"], max_items=max_items,
                    max_age_ms=max_age_ms, rng=rng)
    start = net.scheduler.now
    for i in range(n_items):
        if i:
            net.scheduler.run(until_ms=net.scheduler.now + interval_ms)
            net.scheduler.advance_to(start + i * interval_ms)
        enc.produce(Name(["bench", "data", str(i)]), b"reading %d" % i, tags[i % len(tags)])
    label = "baseline" if max_items == 1 else "cached"
    return CkCacheRow(label, max_items, max_age_ms, n_items, enc.ck_count, enc.abe_encryptions,
                      net.scheduler.now - start)


def bench_ckcache(n_items: int, max_items: int | None = 100, max_age_ms: int | None = 3_600_000,
                  tag_schedule: str = "single", interval_ms: int = 10, seed: int = 0) -> list[CkCacheRow]:
    """CK caching against the one-CK-per-item baseline (``max_items=1``)."""
    tags = [AttributeSet(["bench-a", "home"])]
    if tag_schedule == "alternate":
        tags.append(AttributeSet(["bench-b", "work"]))
    elif tag_schedule != "single":
        raise ValueError("tag_schedule must be 'single' or 'alternate'")
    return [
        run_production(n_items, max_items, max_age_ms, tags, interval_ms, seed),
        run_production(n_items, 1, max_age_ms, tags, interval_ms, seed),
    ]


def expected_ck_count(n_items: int, max_items: int | None, n_tags: int = 1) -> int:
    """Counting law for item-bounded caching with no expiry: each tag's
    items are split into runs of ``max_items``."""
    per_tag = [n_items // n_tags + (1 if i < n_items % n_tags else 0) for i in range(n_tags)]
    if max_items is None:
        return sum(1 for k in per_tag if k)
    return sum(math.ceil(k / max_items) for k in per_tag)
