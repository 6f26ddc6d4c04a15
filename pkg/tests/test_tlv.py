import struct

import pytest
from hypothesis import given, strategies as st

from nacabe.errors import DecodeError
from nacabe.ndn import tlv


def reference_var_number(n: int) -> bytes:
    # written from the 1/3/5/9 octet rule with struct, independent of the codec
    if n < 253:
        return struct.pack(">B", n)
    if n <= 0xFFFF:
        return struct.pack(">BH", 0xFD, n)
    if n <= 0xFFFFFFFF:
        return struct.pack(">BI", 0xFE, n)
    return struct.pack(">BQ", 0xFF, n)


def test_one_octet_below_253():
    assert tlv.encode_var_number(42) == b"\x2a"
    assert tlv.encode_var_number(252) == b"\xfc"


def test_three_octet_form_starts_at_253():
    assert tlv.encode_var_number(253) == bytes([0xFD, 0x00, 0xFD])


@pytest.mark.parametrize("value,expected", [
    (65535, "fdffff"),
    (65536, "fe00010000"),
    (2**32 - 1, "feffffffff"),
    (2**32, "ff0000000100000000"),
])
def test_width_boundaries(value, expected):
    assert tlv.encode_var_number(value).hex() == expected


def test_exhaustive_round_trip_small_range():
    for n in range(70001):
        enc = tlv.encode_var_number(n)
        assert enc == reference_var_number(n)
        assert tlv.read_var_number(enc, 0) == (n, len(enc))


@given(st.integers(min_value=0, max_value=2**64 - 1))
def test_var_number_matches_reference(n):
    enc = tlv.encode_var_number(n)
    assert enc == reference_var_number(n)
    assert tlv.read_var_number(enc + b"junk", 0) == (n, len(enc))


def test_var_number_range_checked():
    with pytest.raises(ValueError):
        tlv.encode_var_number(-1)
    with pytest.raises(ValueError):
        tlv.encode_var_number(2**64)


def test_truncated_var_number():
    with pytest.raises(DecodeError, match="truncated"):
        tlv.read_var_number(b"\xfd\x01", 0)
    with pytest.raises(DecodeError, match="truncated"):
        tlv.read_var_number(b"", 0)


@given(st.integers(min_value=0, max_value=2**64 - 1))
def test_nonneg_int_round_trip(n):
    enc = tlv.encode_nonneg_int(n)
    assert len(enc) in (1, 2, 4, 8)
    assert tlv.decode_nonneg_int(enc) == n


def test_nonneg_int_rejects_odd_widths():
    with pytest.raises(DecodeError):
        tlv.decode_nonneg_int(b"\x00\x00\x01")


def test_read_single_checks_extent():
    element = tlv.tlv(0x15, b"abc")
    assert tlv.read_single(element, 0x15) == (0x15, b"abc")
    with pytest.raises(DecodeError, match="trailing"):
        tlv.read_single(element + b"\x00")
    with pytest.raises(DecodeError, match="truncated"):
        tlv.read_single(element[:-1])
    with pytest.raises(DecodeError, match="expected TLV type"):
        tlv.read_single(element, 0x16)


def test_iter_tlvs_rejects_overlong_length():
    with pytest.raises(DecodeError):
        list(tlv.iter_tlvs(b"\x15\x05ab"))


def test_critical_types():
    assert tlv.is_critical(0x15)
    assert tlv.is_critical(0x81)
    assert not tlv.is_critical(0x80)
