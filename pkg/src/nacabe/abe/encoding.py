"""TLV serialization of ABE keys, ciphertexts and public parameters.

Trees travel as a flat pre-order list of GATE and LEAF records. The root is
always a gate record (a bare leaf is written as a 1-of-1 gate), which keeps
the size of a key or ciphertext affine in its leaf count.
"""

from __future__ import annotations

from ..errors import DecodeError
from ..ndn import tlv
from . import field as gf
from .policy import Attribute
from .scheme import AbeCiphertext, AbeKey, AbeType, PublicParams
from .tree import Gate, Node, TreeLeaf

ABE_KEY = 0x80
ABE_CIPHERTEXT = 0x81
PUBLIC_PARAMS = 0x82

ABE_TYPE = 0x83
PARAMS_ID = 0x84
VERSION = 0x85
ATTRIBUTE = 0x86
ELEMENT = 0x87
GATE = 0x88
LEAF = 0x89
NONCE = 0x8A
PAYLOAD = 0x8B
COMPONENT = 0x8C

_TYPE_CODES = {AbeType.CP: 0, AbeType.KP: 1}
_TYPES = {v: k for k, v in _TYPE_CODES.items()}


def _abe_type(value: bytes) -> AbeType:
    try:
        return _TYPES[tlv.decode_nonneg_int(value)]
    except KeyError:
        raise DecodeError("unknown ABE type") from None


def _component(attribute: Attribute, element: int) -> bytes:
    return tlv.tlv(COMPONENT, tlv.tlv(ATTRIBUTE, attribute.value.encode()) + tlv.tlv(ELEMENT, gf.to_bytes(element)))


def _attr_element(value: bytes) -> tuple[Attribute, int]:
    parts = list(tlv.iter_tlvs(value))
    if [t for t, _ in parts] != [ATTRIBUTE, ELEMENT]:
        raise DecodeError("malformed attribute/element pair")
    try:
        return Attribute(parts[0][1].decode()), gf.from_bytes(parts[1][1])
    except (UnicodeDecodeError, ValueError) as exc:
        raise DecodeError(str(exc)) from None


def _encode_tree(tree: Node, values) -> bytes:
    if isinstance(tree, TreeLeaf):
        tree = Gate(1, (tree,))
    out = []
    it = iter(values)

    def visit(node: Node):
        if isinstance(node, TreeLeaf):
            body = tlv.tlv(ATTRIBUTE, node.attribute.value.encode()) + tlv.tlv(ELEMENT, gf.to_bytes(next(it)))
            out.append(tlv.tlv(LEAF, body))
        else:
            out.append(tlv.tlv(GATE, tlv.encode_var_number(node.threshold)
                               + tlv.encode_var_number(len(node.children))))
            for c in node.children:
                visit(c)

    visit(tree)
    return b"".join(out)


def _decode_tree(records: list[tuple[int, bytes]]) -> tuple[Node, tuple]:
    values: list[int] = []
    pos = 0

    def visit() -> Node:
        nonlocal pos
        if pos >= len(records):
            raise DecodeError("truncated tree")
        type_, value = records[pos]
        pos += 1
        if type_ == LEAF:
            attribute, element = _attr_element(value)
            values.append(element)
            return TreeLeaf(attribute)
        if type_ == GATE:
            threshold, off = tlv.read_var_number(value, 0)
            n, off = tlv.read_var_number(value, off)
            if off != len(value) or n == 0:
                raise DecodeError("malformed gate record")
            children = tuple(visit() for _ in range(n))
            try:
                return Gate(threshold, children)
            except ValueError as exc:
                raise DecodeError(str(exc)) from None
        raise DecodeError(f"unexpected record {type_:#x} in tree")

    root = visit()
    if pos != len(records):
        raise DecodeError("trailing tree records")
    if isinstance(root, Gate) and root.threshold == 1 and len(root.children) == 1 \
            and isinstance(root.children[0], TreeLeaf):
        root = root.children[0]
    return root, tuple(values)


def _header(abe_type: AbeType, params_id: bytes) -> bytes:
    return tlv.tlv(ABE_TYPE, tlv.encode_nonneg_int(_TYPE_CODES[abe_type])) + tlv.tlv(PARAMS_ID, params_id)


def _split(buf: bytes, outer: int) -> tuple[AbeType, bytes, list[tuple[int, bytes]]]:
    _, value = tlv.read_single(buf, outer)
    records = list(tlv.iter_tlvs(value))
    if len(records) < 2 or records[0][0] != ABE_TYPE or records[1][0] != PARAMS_ID:
        raise DecodeError("missing ABE header")
    return _abe_type(records[0][1]), records[1][1], records[2:]


def serialize_key(key: AbeKey) -> bytes:
    body = _header(key.abe_type, key.params_id)
    if key.abe_type is AbeType.KP:
        body += _encode_tree(key.tree, key.leaf_values)
    else:
        body += b"".join(_component(a, v) for a, v in key.attributes)
    return tlv.tlv(ABE_KEY, body)


def deserialize_key(buf: bytes) -> AbeKey:
    abe_type, params_id, records = _split(buf, ABE_KEY)
    if abe_type is AbeType.KP:
        tree, values = _decode_tree(records)
        return AbeKey(abe_type, params_id, tree=tree, leaf_values=values)
    if any(t != COMPONENT for t, _ in records):
        raise DecodeError("unexpected record in CP key")
    return AbeKey(abe_type, params_id, attributes=tuple(_attr_element(v) for _, v in records))


def serialize_ciphertext(ct: AbeCiphertext) -> bytes:
    body = _header(ct.abe_type, ct.params_id)
    body += tlv.tlv(NONCE, ct.nonce) + tlv.tlv(PAYLOAD, ct.payload)
    if ct.abe_type is AbeType.KP:
        body += b"".join(_component(a, v) for a, v in ct.components)
    else:
        body += _encode_tree(ct.tree, ct.leaf_values)
    return tlv.tlv(ABE_CIPHERTEXT, body)


def deserialize_ciphertext(buf: bytes) -> AbeCiphertext:
    abe_type, params_id, records = _split(buf, ABE_CIPHERTEXT)
    if len(records) < 2 or records[0][0] != NONCE or records[1][0] != PAYLOAD:
        raise DecodeError("missing ciphertext nonce/payload")
    nonce, payload, rest = records[0][1], records[1][1], records[2:]
    if abe_type is AbeType.KP:
        if any(t != COMPONENT for t, _ in rest):
            raise DecodeError("unexpected record in KP ciphertext")
        return AbeCiphertext(abe_type, params_id, nonce, payload,
                             components=tuple(_attr_element(v) for _, v in rest))
    tree, values = _decode_tree(rest)
    return AbeCiphertext(abe_type, params_id, nonce, payload, tree=tree, leaf_values=values)


def serialize_params(params: PublicParams) -> bytes:
    body = _header(params.abe_type, params.params_id) + tlv.tlv(VERSION, tlv.encode_nonneg_int(params.version))
    body += b"".join(_component(a, params.attr_public[a]) for a in sorted(params.attr_public))
    return tlv.tlv(PUBLIC_PARAMS, body)


def deserialize_params(buf: bytes) -> PublicParams:
    abe_type, params_id, records = _split(buf, PUBLIC_PARAMS)
    if not records or records[0][0] != VERSION:
        raise DecodeError("missing params version")
    version = tlv.decode_nonneg_int(records[0][1])
    if any(t != COMPONENT for t, _ in records[1:]):
        raise DecodeError("unexpected record in params")
    return PublicParams(abe_type, params_id, dict(_attr_element(v) for _, v in records[1:]), version)
