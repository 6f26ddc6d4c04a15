"""Consumer side: fetches data, its content key and the consumer's own
decryption key, validating every packet on the way."""

from __future__ import annotations

import logging
import random
from typing import Callable

from cryptography.exceptions import InvalidTag

from ..abe import encoding
from ..abe.scheme import AbeKey, AbeType, PublicParams, decrypt
from ..errors import AuthenticationFailed, FetchTimeout, PolicyNotSatisfied, ValidationFailed
from ..ndn.forwarder import AppFace
from ..ndn.name import Name
from ..ndn.packet import Data, Interest
from ..ndn.security import Identity
from . import hybrid
from .encryptor import open_payload
from .naming import dkey_prefix, extract_ck_name, pubparams_prefix
from .role import Role
from .segments import DEFAULT_MSS, fetch_latest, fetch_segments

log = logging.getLogger(__name__)

DATA_RETRIES = 3


class Decryptor(Role):
    """Decrypted keys live only in this object's memory.

    ``refresh_on_deny`` re-discovers the DKEY once when decryption is
    denied, in case the authority has re-granted since the last fetch.
    """

    def __init__(self, face: AppFace, identity: Identity, aa_prefix: Name | str,
                 abe_type: AbeType | str = AbeType.KP, validator: Callable[[Data], object] | None = None,
                 prefix: Name | str | None = None, mss: int = DEFAULT_MSS, rng: random.Random | None = None,
                 refresh_on_deny: bool = True):
        super().__init__(face, identity, prefix, mss, rng)
        self.aa_prefix = Name.coerce(aa_prefix)
        self.abe_type = AbeType(abe_type)
        self.validator = validator
        self.refresh_on_deny = refresh_on_deny
        self.params: PublicParams | None = None
        self.dkey: AbeKey | None = None
        self.dkey_version: int | None = None
        self.dkey_versions: dict[int, AbeKey] = {}
        self.cks: dict[Name, bytes] = {}

    def _check(self, data: Data):
        if self.validator is not None:
            result = self.validator(data)
            if not result:
                raise ValidationFailed(result)

    def forget(self):
        """Drop every cached key (as after a restart)."""
        self.params = None
        self.dkey = None
        self.dkey_version = None
        self.dkey_versions.clear()
        self.cks.clear()

    # -- key material ---------------------------------------------------------------------
    def fetch_params(self) -> PublicParams:
        result = fetch_latest(self.face, pubparams_prefix(self.aa_prefix, self.abe_type),
                              self.validator, sink=self.fetch_stats)
        self.params = encoding.deserialize_params(result.content)
        return self.params

    def fetch_dkey(self) -> AbeKey:
        result = fetch_latest(self.face, dkey_prefix(self.aa_prefix, self.identity.key_name),
                              self.validator, sink=self.fetch_stats)
        version = result.name.version()
        key = encoding.deserialize_key(hybrid.open_sealed(self.identity.encryption_private, result.content))
        self.dkey_versions[version] = key
        self.dkey, self.dkey_version = key, version
        log.info("consumer %s holds DKEY v=%d", self.identity.name, version)
        return key

    def fetch_ck(self, ck_name: Name) -> bytes:
        if ck_name in self.cks:
            return self.cks[ck_name]
        fetched = fetch_segments(self.face, ck_name, self.validator, sink=self.fetch_stats)
        ct = encoding.deserialize_ciphertext(fetched.content)
        if self.params is None:
            self.fetch_params()
        if self.dkey is None:
            self.fetch_dkey()
        try:
            ck = decrypt(self.params, self.dkey, ct)
        except PolicyNotSatisfied:
            if not self.refresh_on_deny:
                raise
            before = self.dkey_version
            self.fetch_dkey()
            if self.dkey_version == before:
                raise
            ck = decrypt(self.params, self.dkey, ct)
        self.cks[ck_name] = ck
        return ck

    # -- consumption ----------------------------------------------------------------------
    def fetch_data(self, data_name: Name | str) -> Data:
        data = self.face.get(Interest(Name.coerce(data_name)), retries=DATA_RETRIES)
        if data is None:
            raise FetchTimeout(data_name)
        self._check(data)
        return data

    def consume(self, data_name: Name | str) -> bytes:
        data = self.fetch_data(data_name)
        ck_name, sealed = extract_ck_name(data.content)
        ck = self.fetch_ck(ck_name)
        try:
            return open_payload(ck, data.name, sealed)
        except InvalidTag:
            raise AuthenticationFailed() from None
