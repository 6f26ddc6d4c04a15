"""Interest and Data packets and their bit-exact TLV codec."""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

from ..errors import DecodeError, EncodeError
from . import tlv
from .name import Component, Name

MAX_CONTENT_SIZE = 64 * 1024
DEFAULT_LIFETIME_MS = 4000

SIGNATURE_ED25519 = 5


class ContentType(enum.IntEnum):
    BLOB = 0
    KEY = 2
    NACK = 3


@dataclass(frozen=True)
class Interest:
    name: Name
    can_be_prefix: bool = False
    must_be_fresh: bool = False
    nonce: bytes = b"\x00\x00\x00\x00"
    lifetime_ms: int = DEFAULT_LIFETIME_MS

    def matches(self, data: "Data") -> bool:
        """Name match only; freshness is the content store's concern."""
        if self.can_be_prefix:
            return self.name.is_prefix_of(data.name)
        return self.name == data.name


@dataclass(frozen=True)
class Data:
    name: Name
    content: bytes = b""
    content_type: ContentType = ContentType.BLOB
    freshness_period_ms: int = 0
    final_block_id: Component | None = None
    key_locator: Name | None = None
    signature_nonce: bytes | None = None
    signature: bytes = b""

    def with_signature(self, key_locator: Name, signature: bytes, nonce: bytes | None) -> "Data":
        return replace(self, key_locator=key_locator, signature=signature, signature_nonce=nonce)

    def signed_portion(self) -> bytes:
        """The byte span covered by the signature: Name, MetaInfo, Content and
        SignatureInfo exactly as they appear on the wire."""
        return (
            self.name.encode()
            + _encode_meta_info(self)
            + tlv.tlv(tlv.CONTENT, self.content)
            + _encode_signature_info(self)
        )


def _encode_meta_info(data: Data) -> bytes:
    inner = b""
    if data.content_type != ContentType.BLOB:
        inner += tlv.tlv(tlv.CONTENT_TYPE, tlv.encode_nonneg_int(int(data.content_type)))
    if data.freshness_period_ms:
        inner += tlv.tlv(tlv.FRESHNESS_PERIOD, tlv.encode_nonneg_int(data.freshness_period_ms))
    if data.final_block_id is not None:
        inner += tlv.tlv(tlv.FINAL_BLOCK_ID, data.final_block_id.encode())
    return tlv.tlv(tlv.META_INFO, inner)


def _encode_signature_info(data: Data) -> bytes:
    inner = tlv.tlv(tlv.SIGNATURE_TYPE, tlv.encode_nonneg_int(SIGNATURE_ED25519))
    if data.key_locator is not None:
        inner += tlv.tlv(tlv.KEY_LOCATOR, data.key_locator.encode())
    if data.signature_nonce is not None:
        inner += tlv.tlv(tlv.SIGNATURE_NONCE, data.signature_nonce)
    return tlv.tlv(tlv.SIGNATURE_INFO, inner)


def _check_name(name: Name):
    if len(name) == 0:
        raise EncodeError("empty name is not a valid packet name")


def encode_packet(packet: Interest | Data) -> bytes:
    if isinstance(packet, Interest):
        _check_name(packet.name)
        if len(packet.nonce) != 4:
            raise EncodeError("nonce must be 4 bytes")
        if packet.lifetime_ms <= 0:
            raise EncodeError("lifetime must be positive")
        inner = packet.name.encode()
        if packet.can_be_prefix:
            inner += tlv.tlv(tlv.CAN_BE_PREFIX)
        if packet.must_be_fresh:
            inner += tlv.tlv(tlv.MUST_BE_FRESH)
        inner += tlv.tlv(tlv.NONCE, packet.nonce)
        inner += tlv.tlv(tlv.INTEREST_LIFETIME, tlv.encode_nonneg_int(packet.lifetime_ms))
        return tlv.tlv(tlv.INTEREST, inner)
    if isinstance(packet, Data):
        _check_name(packet.name)
        if len(packet.content) > MAX_CONTENT_SIZE:
            raise EncodeError(f"content exceeds hard cap ({len(packet.content)} > {MAX_CONTENT_SIZE} bytes)")
        inner = packet.signed_portion() + tlv.tlv(tlv.SIGNATURE_VALUE, packet.signature)
        return tlv.tlv(tlv.DATA, inner)
    raise TypeError(f"not a packet: {type(packet).__name__}")


def _skip_or_fail(type_: int):
    if tlv.is_critical(type_):
        raise DecodeError(f"unknown critical TLV type {type_:#x}")


def _decode_interest(value: bytes) -> Interest:
    elements = list(tlv.iter_tlvs(value))
    if not elements or elements[0][0] != tlv.NAME:
        raise DecodeError("Interest must start with a Name")
    name = Name.decode_value(elements[0][1])
    fields: dict = {}
    for type_, v in elements[1:]:
        if type_ == tlv.CAN_BE_PREFIX:
            fields["can_be_prefix"] = True
        elif type_ == tlv.MUST_BE_FRESH:
            fields["must_be_fresh"] = True
        elif type_ == tlv.NONCE:
            if len(v) != 4:
                raise DecodeError("nonce must be 4 bytes")
            fields["nonce"] = v
        elif type_ == tlv.INTEREST_LIFETIME:
            fields["lifetime_ms"] = tlv.decode_nonneg_int(v)
        else:
            _skip_or_fail(type_)
    return Interest(name, **fields)


def _decode_meta_info(value: bytes, fields: dict):
    for type_, v in tlv.iter_tlvs(value):
        if type_ == tlv.CONTENT_TYPE:
            try:
                fields["content_type"] = ContentType(tlv.decode_nonneg_int(v))
            except ValueError:
                raise DecodeError("unknown content type") from None
        elif type_ == tlv.FRESHNESS_PERIOD:
            fields["freshness_period_ms"] = tlv.decode_nonneg_int(v)
        elif type_ == tlv.FINAL_BLOCK_ID:
            comps = Name.decode_value(v).components
            if len(comps) != 1:
                raise DecodeError("FinalBlockId must hold exactly one component")
            fields["final_block_id"] = comps[0]
        else:
            _skip_or_fail(type_)


def _decode_signature_info(value: bytes, fields: dict):
    for type_, v in tlv.iter_tlvs(value):
        if type_ == tlv.SIGNATURE_TYPE:
            if tlv.decode_nonneg_int(v) != SIGNATURE_ED25519:
                raise DecodeError("unsupported signature type")
        elif type_ == tlv.KEY_LOCATOR:
            _, name_value = tlv.read_single(v, tlv.NAME)
            fields["key_locator"] = Name.decode_value(name_value)
        elif type_ == tlv.SIGNATURE_NONCE:
            fields["signature_nonce"] = v
        else:
            _skip_or_fail(type_)


def _decode_data(value: bytes) -> Data:
    elements = list(tlv.iter_tlvs(value))
    if not elements or elements[0][0] != tlv.NAME:
        raise DecodeError("Data must start with a Name")
    name = Name.decode_value(elements[0][1])
    fields: dict = {}
    for type_, v in elements[1:]:
        if type_ == tlv.META_INFO:
            _decode_meta_info(v, fields)
        elif type_ == tlv.CONTENT:
            fields["content"] = v
        elif type_ == tlv.SIGNATURE_INFO:
            _decode_signature_info(v, fields)
        elif type_ == tlv.SIGNATURE_VALUE:
            fields["signature"] = v
        else:
            _skip_or_fail(type_)
    return Data(name, **fields)


def decode_packet(buf: bytes) -> Interest | Data:
    type_, value = tlv.read_single(bytes(buf))
    if type_ == tlv.INTEREST:
        return _decode_interest(value)
    if type_ == tlv.DATA:
        return _decode_data(value)
    raise DecodeError(f"unknown critical TLV type {type_:#x}")
