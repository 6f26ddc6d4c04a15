"""Ed25519 packet signing, certificates and signing identities."""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, replace

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey, Ed25519PublicKey
from cryptography.hazmat.primitives.asymmetric.x25519 import X25519PrivateKey
from cryptography.hazmat.primitives.serialization import Encoding, PublicFormat

from ..errors import DecodeError
from . import tlv
from .name import Name
from .packet import ContentType, Data

SIGNATURE_NONCE_SIZE = 8

# Certificate content fields
CERT_SIGNING_KEY = 0xA0
CERT_ENCRYPTION_KEY = 0xA1
CERT_NOT_BEFORE = 0xA2
CERT_NOT_AFTER = 0xA3

CERT_FRESHNESS_MS = 3_600_000
FOREVER_MS = (1 << 63) - 1

_RAW = dict(encoding=Encoding.Raw, format=PublicFormat.Raw)


def _digest(data: Data) -> bytes:
    return hashlib.sha256(data.signed_portion()).digest()


def sign_data(data: Data, signer_key: Ed25519PrivateKey, signer_cert_name: Name,
              rng: random.Random | None = None) -> Data:
    """Return ``data`` signed by ``signer_key``; the KeyLocator names the certificate.

    A fresh signature nonce makes two signatures over the same packet differ.
    """
    rng = rng or random.SystemRandom()
    unsigned = data.with_signature(signer_cert_name, b"", rng.randbytes(SIGNATURE_NONCE_SIZE))
    return replace(unsigned, signature=signer_key.sign(_digest(unsigned)))


def verify_data(data: Data, public_key: bytes | Ed25519PublicKey) -> bool:
    if isinstance(public_key, (bytes, bytearray)):
        try:
            public_key = Ed25519PublicKey.from_public_bytes(bytes(public_key))
        except ValueError:
            return False
    try:
        public_key.verify(data.signature, _digest(data))
    except InvalidSignature:
        return False
    return True


@dataclass(frozen=True)
class Certificate:
    """A Data packet of type KEY carrying an identity's public keys.

    Name layout: ``<identity>/KEY/<key-id>/<issuer>/v=<version>``.
    """

    data: Data
    signing_key: bytes
    encryption_key: bytes
    not_before: int
    not_after: int

    @property
    def name(self) -> Name:
        return self.data.name

    @property
    def key_name(self) -> Name:
        return self.data.name[:-2]

    @property
    def identity(self) -> Name:
        return self.data.name[:-4]

    @property
    def is_self_signed(self) -> bool:
        loc = self.data.key_locator
        return loc is not None and (loc == self.key_name or loc == self.name)

    @classmethod
    def from_data(cls, data: Data) -> "Certificate":
        if len(data.name) < 5 or data.name[-4].value != b"KEY" or not data.name[-1].is_version:
            raise DecodeError(f"not a certificate name: {data.name}")
        fields = {}
        for type_, value in tlv.iter_tlvs(data.content):
            fields[type_] = value
        try:
            return cls(
                data,
                fields[CERT_SIGNING_KEY],
                fields[CERT_ENCRYPTION_KEY],
                tlv.decode_nonneg_int(fields[CERT_NOT_BEFORE]),
                tlv.decode_nonneg_int(fields[CERT_NOT_AFTER]),
            )
        except KeyError as exc:
            raise DecodeError(f"certificate missing field {exc.args[0]:#x}") from None

    def valid_at(self, now_ms: int) -> bool:
        return self.not_before <= now_ms <= self.not_after


def certificate_content(signing_key: bytes, encryption_key: bytes, not_before: int, not_after: int) -> bytes:
    return (
        tlv.tlv(CERT_SIGNING_KEY, signing_key)
        + tlv.tlv(CERT_ENCRYPTION_KEY, encryption_key)
        + tlv.tlv(CERT_NOT_BEFORE, tlv.encode_nonneg_int(not_before))
        + tlv.tlv(CERT_NOT_AFTER, tlv.encode_nonneg_int(not_after))
    )


class Identity:
    """A named entity holding an Ed25519 signing key and an X25519 key for
    receiving hybrid-encrypted material.

    Without an ``issuer`` the certificate is self-signed (trust anchor case).
    """

    def __init__(self, name: Name | str, issuer: "Identity | None" = None,
                 rng: random.Random | None = None, not_before: int = 0, not_after: int = FOREVER_MS):
        self.rng = rng or random.SystemRandom()
        self.name = Name.coerce(name)
        self.signing_private = Ed25519PrivateKey.from_private_bytes(self.rng.randbytes(32))
        self.encryption_private = X25519PrivateKey.from_private_bytes(self.rng.randbytes(32))
        self.key_id = self.rng.randbytes(8).hex()
        self.key_name = self.name + ["KEY", self.key_id]
        issuer_component = "self" if issuer is None else issuer.key_id
        cert_name = (self.key_name + [issuer_component]).append_version(1)
        unsigned = Data(
            cert_name,
            content=certificate_content(self.signing_public, self.encryption_public, not_before, not_after),
            content_type=ContentType.KEY,
            freshness_period_ms=CERT_FRESHNESS_MS,
        )
        if issuer is None:
            signed = sign_data(unsigned, self.signing_private, self.key_name, self.rng)
        else:
            signed = issuer.sign(unsigned)
        self.certificate = Certificate.from_data(signed)

    @property
    def signing_public(self) -> bytes:
        return self.signing_private.public_key().public_bytes(**_RAW)

    @property
    def encryption_public(self) -> bytes:
        return self.encryption_private.public_key().public_bytes(**_RAW)

    @property
    def cert_name(self) -> Name:
        return self.certificate.name

    def sign(self, data: Data) -> Data:
        return sign_data(data, self.signing_private, self.cert_name, self.rng)

    def __repr__(self) -> str:
        return f"Identity({self.name})"
