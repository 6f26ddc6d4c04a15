"""Names of the packets NAC-ABE publishes, and the grammar they must follow.

* public params: ``/<aa-prefix>/PUBPARAMS/<abe-type>/v=<n>[/seg=<i>]``
* decryption key: ``/<aa-prefix>/DKEY/<consumer-key-name>/v=<n>/seg=<i>``
* content key: ``/<producer-prefix>/CK/v=<n>/ENC-BY/<attributes-or-policy>/seg=<i>``
"""

from __future__ import annotations

from dataclasses import dataclass

from ..abe.policy import AttributeSet, PolicyExpr, to_text
from ..abe.scheme import AbeType
from ..errors import DecodeError
from ..ndn import tlv
from ..ndn.name import Component, Name

PUBPARAMS = "PUBPARAMS"
DKEY = "DKEY"
CK = "CK"
ENC_BY = "ENC-BY"
KEY = "KEY"

ENCRYPTED_PAYLOAD = 0x84

_MARKERS = {PUBPARAMS.encode(), DKEY.encode(), CK.encode()}
_ABE_TYPES = {t.value.encode() for t in AbeType}


def pubparams_prefix(aa_prefix: Name, abe_type: AbeType) -> Name:
    return aa_prefix + [PUBPARAMS, abe_type.value]


def pubparams_name(aa_prefix: Name, abe_type: AbeType, version: int) -> Name:
    return pubparams_prefix(aa_prefix, abe_type).append_version(version)


def dkey_prefix(aa_prefix: Name, consumer_key_name: Name) -> Name:
    return (aa_prefix + [DKEY]) + consumer_key_name


def dkey_name(aa_prefix: Name, consumer_key_name: Name, version: int) -> Name:
    return dkey_prefix(aa_prefix, consumer_key_name).append_version(version)


def canonical_tag(tag: AttributeSet | PolicyExpr) -> str:
    """Cache key and ENC-BY component text for an attribute set or policy."""
    if isinstance(tag, (set, frozenset)):
        return AttributeSet(tag).canonical()
    return to_text(tag)


def ck_name(producer_prefix: Name, version: int, tag: AttributeSet | PolicyExpr) -> Name:
    return (producer_prefix + [CK]).append_version(version) + [ENC_BY, canonical_tag(tag)]


@dataclass(frozen=True)
class NamingCheck:
    ok: bool
    index: int | None = None
    reason: str = ""

    def __bool__(self) -> bool:
        return self.ok


_OK = NamingCheck(True)


def _generic(c: Component) -> bool:
    return c.type == tlv.GENERIC_COMPONENT


def _violation(index: int, reason: str) -> NamingCheck:
    return NamingCheck(False, index, reason)


def check_naming(name: Name) -> NamingCheck:
    """Check a packet name against the NAC-ABE grammar.

    Names without a PUBPARAMS/DKEY/CK marker are application data and pass.
    On failure ``index`` is the (0-based) offending component.
    """
    comps = name.components
    marker = next((i for i, c in enumerate(comps) if i > 0 and _generic(c) and c.value in _MARKERS), None)
    if marker is None:
        return _OK
    kind = comps[marker].value.decode()
    n = len(comps)

    if kind == PUBPARAMS:
        i = marker + 1
        if i >= n or not (_generic(comps[i]) and comps[i].value in _ABE_TYPES):
            return _violation(i, "expected <abe-type> (KP or CP)")
        if i + 1 >= n or not comps[i + 1].is_version:
            return _violation(i + 1, "expected version component")
        end = i + 2
        if end < n and comps[end].is_segment:
            end += 1
        if end < n:
            return _violation(end, "unexpected trailing component")
        return _OK

    if kind == DKEY:
        j = next((k for k in range(marker + 1, n) if comps[k].is_version), None)
        if j is None:
            bad = next((k for k in range(marker + 1, n) if not _generic(comps[k])), n)
            return _violation(bad, "expected version component after consumer key name")
        key = comps[marker + 1 : j]
        if len(key) < 3 or key[-2].value != KEY.encode() or not all(_generic(c) for c in key):
            return _violation(marker + 1, "expected consumer key name <identity>/KEY/<key-id>")
        if j + 1 >= n or not comps[j + 1].is_segment:
            return _violation(j + 1, "expected segment component")
        if j + 2 < n:
            return _violation(j + 2, "unexpected trailing component")
        return _OK

    i = marker + 1
    if i >= n or not comps[i].is_version:
        return _violation(i, "expected version component")
    if i + 1 >= n or comps[i + 1] != Component(ENC_BY.encode()):
        return _violation(i + 1, "expected ENC-BY")
    if i + 2 >= n or not _generic(comps[i + 2]) or not comps[i + 2].value:
        return _violation(i + 2, "expected encryption attributes or policy")
    if i + 3 >= n or not comps[i + 3].is_segment:
        return _violation(i + 3, "expected segment component")
    if i + 4 < n:
        return _violation(i + 4, "unexpected trailing component")
    return _OK


def embed_ck_name(ck: Name, ciphertext: bytes) -> bytes:
    """Application Data content: the CK name TLV followed by the sealed payload."""
    return ck.encode() + tlv.tlv(ENCRYPTED_PAYLOAD, ciphertext)


def extract_ck_name(content: bytes) -> tuple[Name, bytes]:
    try:
        elements = list(tlv.iter_tlvs(content))
    except DecodeError:
        raise DecodeError("content does not carry an embedded CK name") from None
    if len(elements) != 2 or elements[0][0] != tlv.NAME or elements[1][0] != ENCRYPTED_PAYLOAD:
        raise DecodeError("content does not carry an embedded CK name")
    return Name.decode_value(elements[0][1]), elements[1][1]
