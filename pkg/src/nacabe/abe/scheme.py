"""Reference ABE backend: an arithmetic emulation of KP-ABE and CP-ABE.

The access-tree constructions follow the usual GPSW (key policy) and
BSW-style (ciphertext policy) shapes, but every group exponent is computed
in the clear over GF(2**61 - 1):

* KP: key leaves ``d_x = q_x(0) / t_x``, ciphertext ``c_x = t_x * s``;
  ``d_x * c_x = q_x(0) * s`` interpolates up the key's tree to ``y * s``.
* CP: key values ``k_x = y / t_x``, ciphertext leaves ``c_x = q_x(0) * t_x``;
  ``k_x * c_x = y * q_x(0)`` interpolates up the ciphertext's tree to ``y * s``.

The payload is sealed with AES-256-GCM under ``KDF(y * s)``. Decryptability
is exactly policy satisfaction, but the published parameters expose ``y``
and every ``t_x``: this backend offers no confidentiality against anyone who
holds the public parameters, and keys for the same attributes collude
trivially. It exists so the protocol layer can run end to end; a pairing
based backend can replace it behind the same functions.
"""

from __future__ import annotations

import enum
import hashlib
import random
from dataclasses import dataclass, field
from typing import Callable, Iterable

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives.ciphers.aead import AESGCM

from ..errors import AuthenticationFailed, ParamsMismatch, PolicyNotSatisfied, UnknownAttribute
from . import field as gf
from .policy import Attribute, AttributeSet, PolicyExpr
from .tree import TRUE_ATTRIBUTE, Gate, Node, TreeLeaf, build_access_tree, iter_leaves, leaf_count

MASTER_ATTRIBUTE = Attribute("__master__")
PARAMS_ID_SIZE = 16
NONCE_SIZE = 12
KDF_LABEL = b"NACABE-ABE-KDF\x00\x01"  # 16 bytes

Selector = Callable[[Gate, list[int]], list[int]]


class AbeType(enum.Enum):
    CP = "CP"
    KP = "KP"


@dataclass
class PublicParams:
    abe_type: AbeType
    params_id: bytes
    attr_public: dict[Attribute, int] = field(default_factory=dict)
    version: int = 1

    @property
    def master_public(self) -> int:
        return self.attr_public[MASTER_ATTRIBUTE]

    def lookup(self, attribute: Attribute) -> int:
        try:
            return self.attr_public[attribute]
        except KeyError:
            raise UnknownAttribute(attribute.value) from None

    def knows(self, attrs: Iterable[Attribute]) -> bool:
        return all(a in self.attr_public for a in attrs)


@dataclass
class MasterKey:
    y: int
    params_id: bytes
    attr_secret: dict[Attribute, int] = field(default_factory=dict)
    params: PublicParams | None = field(default=None, repr=False, compare=False)

    def ensure(self, attrs: Iterable[Attribute | str], rng: random.Random) -> bool:
        """Assign ``t_x`` to unseen attributes (mirrored into the public
        params). Returns True if the attribute universe grew."""
        grew = False
        # sorted so the draws do not depend on set iteration order
        for a in sorted(AttributeSet(attrs)):
            if a not in self.attr_secret:
                t = gf.random_nonzero(rng)
                self.attr_secret[a] = t
                if self.params is not None:
                    self.params.attr_public[a] = t
                grew = True
        return grew


@dataclass(frozen=True)
class AbeKey:
    abe_type: AbeType
    params_id: bytes
    tree: Node | None = None               # KP
    leaf_values: tuple = ()                # KP, pre-order leaf order
    attributes: tuple = ()                 # CP: sorted ((Attribute, k_x), ...)

    @property
    def attribute_set(self) -> AttributeSet:
        return AttributeSet(a for a, _ in self.attributes)


@dataclass(frozen=True)
class AbeCiphertext:
    abe_type: AbeType
    params_id: bytes
    nonce: bytes
    payload: bytes                         # AES-GCM ciphertext || tag
    components: tuple = ()                 # KP: sorted ((Attribute, c_x), ...)
    tree: Node | None = None               # CP
    leaf_values: tuple = ()                # CP, pre-order leaf order

    @property
    def attribute_set(self) -> AttributeSet:
        return AttributeSet(a for a, _ in self.components)


def setup(abe_type: AbeType | str, rng: random.Random | None = None) -> tuple[PublicParams, MasterKey]:
    rng = rng or random.SystemRandom()
    abe_type = AbeType(abe_type)
    params_id = rng.randbytes(PARAMS_ID_SIZE)
    y = gf.random_nonzero(rng)
    params = PublicParams(abe_type, params_id)
    master = MasterKey(y, params_id, params=params)
    params.attr_public[MASTER_ATTRIBUTE] = y
    master.ensure([TRUE_ATTRIBUTE], rng)
    return params, master


def share_down(tree: Node, secret: int, rng: random.Random,
               trace: list | None = None) -> list[int]:
    """Split ``secret`` over ``tree``: each gate gets a random polynomial of
    degree threshold-1 through its own share, child i receives q(i).

    Returns leaf shares in pre-order. When ``trace`` is a list, one
    ``(gate, share, child_shares)`` tuple is appended per gate.
    """
    out: list[int] = []

    def visit(node: Node, share: int):
        if isinstance(node, TreeLeaf):
            out.append(share)
            return
        poly = gf.random_poly(share, node.threshold - 1, rng)
        child_shares = [gf.poly_eval(poly, i) for i in range(1, len(node.children) + 1)]
        if trace is not None:
            trace.append((node, share, child_shares))
        for child, s in zip(node.children, child_shares):
            visit(child, s)

    visit(tree, secret)
    return out


def _lowest(_gate: Gate, satisfied: list[int]) -> list[int]:
    return satisfied[: _gate.threshold]


def _recombine(tree: Node, leaf_products: list[int | None], selector: Selector) -> int | None:
    """Interpolate per-leaf products up the tree; None where unsatisfied."""
    position = 0

    def visit(node: Node) -> int | None:
        nonlocal position
        if isinstance(node, TreeLeaf):
            value = leaf_products[position]
            position += 1
            return value
        values = [visit(child) for child in node.children]
        satisfied = [i for i, v in enumerate(values, start=1) if v is not None]
        if len(satisfied) < node.threshold:
            return None
        chosen = selector(node, satisfied)
        acc = 0
        for i in chosen:
            acc = gf.add(acc, gf.mul(gf.lagrange_at_zero(i, chosen), values[i - 1]))
        return acc

    return visit(tree)


def _kdf(params_id: bytes, element: int) -> bytes:
    return hashlib.sha256(KDF_LABEL + params_id + gf.to_bytes(element)).digest()


def _seal(params: PublicParams, s: int, plaintext: bytes, rng: random.Random) -> tuple[bytes, bytes]:
    key = _kdf(params.params_id, gf.mul(params.master_public, s))
    nonce = rng.randbytes(NONCE_SIZE)
    return nonce, AESGCM(key).encrypt(nonce, plaintext, params.params_id)


def _as_attribute_set(attrs) -> AttributeSet:
    return attrs if isinstance(attrs, AttributeSet) else AttributeSet(attrs)


# -- KP ------------------------------------------------------------------------------

def kp_keygen(master: MasterKey, policy: PolicyExpr, rng: random.Random | None = None) -> AbeKey:
    rng = rng or random.SystemRandom()
    tree = build_access_tree(policy)
    master.ensure((leaf.attribute for leaf in iter_leaves(tree)), rng)
    shares = share_down(tree, master.y, rng)
    values = tuple(
        gf.mul(q, gf.inv(master.attr_secret[leaf.attribute]))
        for q, leaf in zip(shares, iter_leaves(tree))
    )
    return AbeKey(AbeType.KP, master.params_id, tree=tree, leaf_values=values)


def kp_encrypt(params: PublicParams, attrs: Iterable[Attribute | str], plaintext: bytes,
               rng: random.Random | None = None) -> AbeCiphertext:
    rng = rng or random.SystemRandom()
    attrs = _as_attribute_set(attrs)
    if not attrs:
        raise ValueError("KP encryption needs at least one attribute")
    if params.abe_type is not AbeType.KP:
        raise ParamsMismatch("params are not KP")
    s = gf.random_nonzero(rng)
    components = tuple(
        (a, gf.mul(params.lookup(a), s)) for a in sorted(attrs | {TRUE_ATTRIBUTE})
    )
    nonce, payload = _seal(params, s, plaintext, rng)
    return AbeCiphertext(AbeType.KP, params.params_id, nonce, payload, components=components)


# -- CP ------------------------------------------------------------------------------

def cp_keygen(master: MasterKey, attrs: Iterable[Attribute | str], rng: random.Random | None = None) -> AbeKey:
    rng = rng or random.SystemRandom()
    attrs = _as_attribute_set(attrs)
    if not attrs:
        raise ValueError("CP key generation needs at least one attribute")
    attrs = attrs | {TRUE_ATTRIBUTE}
    master.ensure(attrs, rng)
    values = tuple((a, gf.mul(master.y, gf.inv(master.attr_secret[a]))) for a in sorted(attrs))
    return AbeKey(AbeType.CP, master.params_id, attributes=values)


def cp_encrypt(params: PublicParams, policy: PolicyExpr, plaintext: bytes,
               rng: random.Random | None = None) -> AbeCiphertext:
    rng = rng or random.SystemRandom()
    if params.abe_type is not AbeType.CP:
        raise ParamsMismatch("params are not CP")
    tree = build_access_tree(policy)
    t_values = [params.lookup(leaf.attribute) for leaf in iter_leaves(tree)]
    s = gf.random_nonzero(rng)
    shares = share_down(tree, s, rng)
    values = tuple(gf.mul(q, t) for q, t in zip(shares, t_values))
    nonce, payload = _seal(params, s, plaintext, rng)
    return AbeCiphertext(AbeType.CP, params.params_id, nonce, payload, tree=tree, leaf_values=values)


# -- decryption -------------------------------------------------------------------------

def decrypt(params: PublicParams, key: AbeKey, ct: AbeCiphertext, selector: Selector | None = None) -> bytes:
    """Recover the plaintext of ``ct`` with ``key``.

    ``selector`` picks which satisfied children of a gate to interpolate
    over; the default takes the lowest-indexed ones.
    """
    if not (key.params_id == ct.params_id == params.params_id):
        raise ParamsMismatch()
    if key.abe_type is not ct.abe_type:
        raise ParamsMismatch("ABE type mismatch between key and ciphertext")
    selector = selector or _lowest
    if key.abe_type is AbeType.KP:
        tree, leaf_values = key.tree, key.leaf_values
        other = dict(ct.components)
    else:
        tree, leaf_values = ct.tree, ct.leaf_values
        other = dict(key.attributes)
    products: list[int | None] = []
    for leaf, value in zip(iter_leaves(tree), leaf_values):
        peer = other.get(leaf.attribute)
        products.append(None if peer is None else gf.mul(value, peer))
    ys = _recombine(tree, products, selector)
    if ys is None:
        raise PolicyNotSatisfied()
    try:
        return AESGCM(_kdf(params.params_id, ys)).decrypt(ct.nonce, ct.payload, params.params_id)
    except InvalidTag:
        raise AuthenticationFailed() from None


def encrypt(params: PublicParams, tag, plaintext: bytes, rng: random.Random | None = None) -> AbeCiphertext:
    """Dispatch on the params type: ``tag`` is an attribute set (KP) or a policy (CP)."""
    if params.abe_type is AbeType.KP:
        return kp_encrypt(params, tag, plaintext, rng)
    return cp_encrypt(params, tag, plaintext, rng)


def keygen(master: MasterKey, grant, rng: random.Random | None = None) -> AbeKey:
    """Dispatch on the master's params type: ``grant`` is a policy (KP) or attributes (CP)."""
    if master.params is not None and master.params.abe_type is AbeType.CP:
        return cp_keygen(master, grant, rng)
    return kp_keygen(master, grant, rng)


def key_leaf_count(key: AbeKey) -> int:
    return leaf_count(key.tree) if key.tree is not None else len(key.attributes)
