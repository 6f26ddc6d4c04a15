"""Hybrid wrapping of a decryption key for one consumer.

A fresh 32-byte symmetric key seals the serialized ABE key with AES-256-GCM.
The symmetric key itself is sealed to the consumer's X25519 public key: an
ephemeral key agreement, HKDF-SHA256 down to a wrapping key, AES-256-GCM.

Content layout::

    TLV(0x90, ephemeral-public || wrap-nonce || wrapped-key)
    TLV(0x91, payload-nonce)
    TLV(0x92, sealed key bytes)
"""

from __future__ import annotations

import random

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives import hashes
from cryptography.hazmat.primitives.asymmetric.x25519 import X25519PrivateKey, X25519PublicKey
from cryptography.hazmat.primitives.ciphers.aead import AESGCM
from cryptography.hazmat.primitives.kdf.hkdf import HKDF
from cryptography.hazmat.primitives.serialization import Encoding, PublicFormat

from ..errors import AuthenticationFailed, DecodeError
from ..ndn import tlv

WRAPPED_KEY = 0x90
AEAD_NONCE = 0x91
ENCRYPTED_KEY = 0x92

SYMMETRIC_KEY_SIZE = 32
NONCE_SIZE = 12
_PUBLIC_SIZE = 32
_HKDF_INFO = b"nacabe dkey wrap"


def _wrapping_key(shared: bytes, ephemeral_public: bytes, recipient_public: bytes) -> bytes:
    return HKDF(
        algorithm=hashes.SHA256(),
        length=SYMMETRIC_KEY_SIZE,
        salt=ephemeral_public + recipient_public,
        info=_HKDF_INFO,
    ).derive(shared)


def seal(recipient_public: bytes, plaintext: bytes, rng: random.Random | None = None) -> bytes:
    rng = rng or random.SystemRandom()
    ephemeral = X25519PrivateKey.from_private_bytes(rng.randbytes(32))
    ephemeral_public = ephemeral.public_key().public_bytes(Encoding.Raw, PublicFormat.Raw)
    shared = ephemeral.exchange(X25519PublicKey.from_public_bytes(recipient_public))
    wrap_nonce = rng.randbytes(NONCE_SIZE)
    symmetric = rng.randbytes(SYMMETRIC_KEY_SIZE)
    wrapped = AESGCM(_wrapping_key(shared, ephemeral_public, recipient_public)).encrypt(wrap_nonce, symmetric, None)
    nonce = rng.randbytes(NONCE_SIZE)
    sealed = AESGCM(symmetric).encrypt(nonce, plaintext, None)
    return (
        tlv.tlv(WRAPPED_KEY, ephemeral_public + wrap_nonce + wrapped)
        + tlv.tlv(AEAD_NONCE, nonce)
        + tlv.tlv(ENCRYPTED_KEY, sealed)
    )


def open_sealed(recipient: X25519PrivateKey, content: bytes) -> bytes:
    """Inverse of :func:`seal`; AuthenticationFailed for the wrong recipient."""
    parts = list(tlv.iter_tlvs(content))
    if [t for t, _ in parts] != [WRAPPED_KEY, AEAD_NONCE, ENCRYPTED_KEY]:
        raise DecodeError("not a wrapped decryption key")
    wrapped_field, nonce, sealed = (v for _, v in parts)
    if len(wrapped_field) <= _PUBLIC_SIZE + NONCE_SIZE or len(nonce) != NONCE_SIZE:
        raise DecodeError("malformed wrapped key")
    ephemeral_public = wrapped_field[:_PUBLIC_SIZE]
    wrap_nonce = wrapped_field[_PUBLIC_SIZE:_PUBLIC_SIZE + NONCE_SIZE]
    wrapped = wrapped_field[_PUBLIC_SIZE + NONCE_SIZE:]
    recipient_public = recipient.public_key().public_bytes(Encoding.Raw, PublicFormat.Raw)
    try:
        shared = recipient.exchange(X25519PublicKey.from_public_bytes(ephemeral_public))
        wrap_key = _wrapping_key(shared, ephemeral_public, recipient_public)
        symmetric = AESGCM(wrap_key).decrypt(wrap_nonce, wrapped, None)
        return AESGCM(symmetric).decrypt(nonce, sealed, None)
    except (InvalidTag, ValueError):
        raise AuthenticationFailed("cannot unwrap decryption key") from None
