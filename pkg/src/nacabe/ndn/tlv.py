"""NDN TLV primitives: variable-length numbers, non-negative integers, and a
small reader used by every codec in the package."""

from __future__ import annotations

from typing import Iterator

from ..errors import DecodeError

# Packet-level types
INTEREST = 0x05
DATA = 0x06
NAME = 0x07
GENERIC_COMPONENT = 0x08
NONCE = 0x0A
INTEREST_LIFETIME = 0x0C
MUST_BE_FRESH = 0x12
META_INFO = 0x14
CONTENT = 0x15
SIGNATURE_INFO = 0x16
SIGNATURE_VALUE = 0x17
CONTENT_TYPE = 0x18
FRESHNESS_PERIOD = 0x19
FINAL_BLOCK_ID = 0x1A
SIGNATURE_TYPE = 0x1B
KEY_LOCATOR = 0x1C
CAN_BE_PREFIX = 0x21
SIGNATURE_NONCE = 0x26

# Typed name components (only meaningful inside a Name TLV)
SEGMENT_COMPONENT = 0x21
VERSION_COMPONENT = 0x24

MAX_VAR_NUMBER = (1 << 64) - 1


def encode_var_number(value: int) -> bytes:
    if value < 0 or value > MAX_VAR_NUMBER:
        raise ValueError(f"var-number out of range: {value}")
    if value < 253:
        return bytes([value])
    if value <= 0xFFFF:
        return b"\xfd" + value.to_bytes(2, "big")
    if value <= 0xFFFFFFFF:
        return b"\xfe" + value.to_bytes(4, "big")
    return b"\xff" + value.to_bytes(8, "big")


def read_var_number(buf: bytes | memoryview, offset: int) -> tuple[int, int]:
    """Return ``(value, new_offset)``."""
    if offset >= len(buf):
        raise DecodeError("truncated")
    first = buf[offset]
    if first < 253:
        return first, offset + 1
    width = {253: 2, 254: 4, 255: 8}[first]
    end = offset + 1 + width
    if end > len(buf):
        raise DecodeError("truncated")
    return int.from_bytes(buf[offset + 1 : end], "big"), end


def encode_nonneg_int(value: int) -> bytes:
    if value < 0:
        raise ValueError("non-negative integer required")
    for width in (1, 2, 4, 8):
        if value < 1 << (8 * width):
            return value.to_bytes(width, "big")
    raise ValueError(f"integer too large: {value}")


def decode_nonneg_int(value: bytes) -> int:
    if len(value) not in (1, 2, 4, 8):
        raise DecodeError(f"bad non-negative integer length {len(value)}")
    return int.from_bytes(value, "big")


def tlv(type_: int, value: bytes = b"") -> bytes:
    return encode_var_number(type_) + encode_var_number(len(value)) + value


def is_critical(type_: int) -> bool:
    return type_ <= 31 or type_ % 2 == 1


def iter_tlvs(buf: bytes | memoryview) -> Iterator[tuple[int, bytes]]:
    """Yield ``(type, value)`` for a concatenation of TLV elements.

    The whole buffer must be consumed; leftovers raise ``DecodeError``.
    """
    offset = 0
    n = len(buf)
    while offset < n:
        type_, offset = read_var_number(buf, offset)
        length, offset = read_var_number(buf, offset)
        if offset + length > n:
            raise DecodeError("truncated" if length <= MAX_VAR_NUMBER else "length overflow")
        yield type_, bytes(buf[offset : offset + length])
        offset += length


def read_single(buf: bytes, expected_type: int | None = None) -> tuple[int, bytes]:
    """Decode exactly one TLV element spanning all of ``buf``."""
    if not buf:
        raise DecodeError("truncated")
    type_, offset = read_var_number(buf, 0)
    length, offset = read_var_number(buf, offset)
    if offset + length > len(buf):
        raise DecodeError("truncated")
    if offset + length < len(buf):
        raise DecodeError("trailing bytes")
    if expected_type is not None and type_ != expected_type:
        raise DecodeError(f"expected TLV type {expected_type:#x}, got {type_:#x}")
    return type_, bytes(buf[offset:])
