"""Shared builders for tests: a small mHealth network with every role wired up."""

from __future__ import annotations

import itertools
import random

from nacabe.abe.policy import And, AttributeSet, Leaf, Or
from nacabe.abe.scheme import AbeType
from nacabe.nac import AttributeAuthority, Decryptor, Encryptor
from nacabe.ndn import Identity, Name, Network
from nacabe.trust import Validator, face_fetcher, mhealth_schema

BG = "/org/mhealth/alice/cgm/blood-glucose"
HR = "/org/mhealth/alice/watch/heart-rate"
AA_PREFIX = Name.from_uri("/org/mhealth/aa")
DATA_PREFIX = "/org/mhealth/alice"


class World:
    """aa, producer and consumers hang off one hub; ``loss`` applies to the
    consumer links."""

    def __init__(self, abe_type="KP", seed=1, loss=0.0, mss=1500, max_items=100, max_age_ms=3_600_000,
                 consumers=("doctor",), delay_ms=10):
        self.rng = random.Random(seed)
        self.abe_type = AbeType(abe_type)
        self.net = Network(rng=self.rng)
        for n in ("aa", "producer", "hub", *consumers):
            self.net.add_node(n)
        self.net.connect("aa", "hub", delay_ms)
        self.net.connect("producer", "hub", delay_ms)
        for c in consumers:
            self.net.connect(c, "hub", delay_ms, loss)
        self.anchor = Identity("/org/mhealth", rng=self.rng)
        self.schema = mhealth_schema(self.anchor.certificate)
        self.aa_identity = Identity("/org/mhealth/aa", self.anchor, self.rng)
        self.producer_identity = Identity("/org/mhealth/producer/alice", self.anchor, self.rng)
        self.aa = AttributeAuthority(self.face("aa"), self.aa_identity, self.abe_type, mss=mss, rng=self.rng)
        self.producer_validator = self.validator("producer")
        self.encryptor = Encryptor(self.face("producer"), self.producer_identity, AA_PREFIX, self.abe_type,
                                   data_prefixes=[DATA_PREFIX], validator=self.producer_validator,
                                   max_items=max_items, max_age_ms=max_age_ms, mss=mss, rng=self.rng)
        self.identities = {}
        self.decryptors = {}
        for c in consumers:
            self.identities[c] = Identity(f"/org/mhealth/{c}/user", self.anchor, self.rng)
            self.decryptors[c] = Decryptor(self.face(c), self.identities[c], AA_PREFIX, self.abe_type,
                                           validator=self.validator(c), mss=mss, rng=self.rng)

    def face(self, node):
        return self.net.nodes[node].add_app_face(self.rng)

    def validator(self, node, schema=None):
        return Validator(schema or self.schema, face_fetcher(self.face(node)))

    @property
    def decryptor(self) -> Decryptor:
        return next(iter(self.decryptors.values()))

    def grant(self, consumer, grant):
        return self.aa.grant(self.identities[consumer].certificate, grant)

    def advance(self, ms):
        self.net.scheduler.run(until_ms=self.net.scheduler.now + ms)


# -- policy enumeration used by the oracle-equivalence checks -----------------------------

def enumerate_policies(universe, max_leaves):
    """Every And/Or tree shape with 1..max_leaves leaves labelled from ``universe``."""
    def trees(n):
        if n == 1:
            for a in universe:
                yield Leaf.of(a)
            return
        # binary split keeps the enumeration finite; nesting covers wider gates
        for left in range(1, n):
            for lt in trees(left):
                for rt in trees(n - left):
                    yield And((lt, rt))
                    yield Or((lt, rt))

    for n in range(1, max_leaves + 1):
        yield from trees(n)


def all_subsets(universe):
    return [AttributeSet(c) for r in range(len(universe) + 1) for c in itertools.combinations(universe, r)]


def eval_ast(node, attrs) -> bool:
    """Independent evaluator over the raw AST (no tree compilation)."""
    if isinstance(node, Leaf):
        return node.attribute in attrs
    if isinstance(node, And):
        return all(eval_ast(c, attrs) for c in node.children)
    if isinstance(node, Or):
        return any(eval_ast(c, attrs) for c in node.children)
    raise TypeError(node)


def random_policy(rng, universe, max_depth=3, max_width=4):
    if max_depth == 0 or rng.random() < 0.3:
        return Leaf.of(rng.choice(universe))
    gate = rng.choice((And, Or))
    return gate(tuple(random_policy(rng, universe, max_depth - 1, max_width)
                      for _ in range(rng.randint(2, max_width))))


# -- acceptance reporting ---------------------------------------------------------------------

ACCEPTANCE: dict[int, str] = {}
