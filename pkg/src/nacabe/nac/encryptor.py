"""Producer side: encrypts application data under cached content keys."""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass
from typing import Callable

from cryptography.hazmat.primitives.ciphers.aead import AESGCM

from ..abe import encoding
from ..abe.policy import AttributeSet, PolicyExpr
from ..abe.scheme import AbeType, PublicParams, encrypt
from ..errors import UnknownAttribute
from ..ndn.forwarder import AppFace
from ..ndn.name import Name
from ..ndn.packet import Data
from ..ndn.security import Identity
from .authority import coerce_tag
from .naming import canonical_tag, ck_name, embed_ck_name, pubparams_prefix
from .role import Role
from .segments import DEFAULT_MSS, Repo, fetch_latest, publish_segments

log = logging.getLogger(__name__)

CK_SIZE = 32
NONCE_SIZE = 12
DEFAULT_MAX_ITEMS = 100
DEFAULT_MAX_AGE_MS = 3_600_000


@dataclass
class CkCacheEntry:
    cache_key: str
    ck: bytes
    ck_name: Name
    created_at: int
    ck_version: int
    items_encrypted: int = 0


def seal_payload(ck: bytes, data_name: Name, payload: bytes, nonce: bytes) -> bytes:
    """``nonce || AES-256-GCM(ck, payload)``, bound to the Data name."""
    return nonce + AESGCM(ck).encrypt(nonce, payload, data_name.encode())


def open_payload(ck: bytes, data_name: Name, sealed: bytes) -> bytes:
    return AESGCM(ck).decrypt(sealed[:NONCE_SIZE], sealed[NONCE_SIZE:], data_name.encode())


class Encryptor(Role):
    """Encrypts each item with a content key (CK); a CK is reused for the
    same attribute set or policy until ``max_items`` items or ``max_age_ms``
    of virtual time, then replaced. ``None`` disables either limit."""

    def __init__(self, face: AppFace, identity: Identity, aa_prefix: Name | str,
                 abe_type: AbeType | str = AbeType.KP, prefix: Name | str | None = None,
                 data_prefixes: list[Name | str] = (), validator: Callable[[Data], object] | None = None,
                 max_items: int | None = DEFAULT_MAX_ITEMS, max_age_ms: int | None = DEFAULT_MAX_AGE_MS,
                 mss: int = DEFAULT_MSS, rng: random.Random | None = None):
        super().__init__(face, identity, prefix, mss, rng)
        if max_items is not None and max_items < 1:
            raise ValueError("max_items must be at least 1")
        self.aa_prefix = Name.coerce(aa_prefix)
        self.abe_type = AbeType(abe_type)
        self.validator = validator
        self.max_items = max_items
        self.max_age_ms = max_age_ms
        self.params: PublicParams | None = None
        self.ck_cache: dict[str, CkCacheEntry] = {}
        self.ck_version = 0
        self.ck_names: list[Name] = []
        self.abe_encryptions = 0
        self.produced = 0
        self.data_repos = [self.repo] + [Repo(face, Name.coerce(p)) for p in data_prefixes]

    # -- public parameters ------------------------------------------------------------
    def fetch_params(self) -> PublicParams:
        result = fetch_latest(self.face, pubparams_prefix(self.aa_prefix, self.abe_type),
                              self.validator, sink=self.fetch_stats)
        self.params = encoding.deserialize_params(result.content)
        log.info("producer %s has params v=%d", self.prefix, self.params.version)
        return self.params

    # -- content keys ---------------------------------------------------------------------
    def ck_lookup(self, tag) -> tuple[CkCacheEntry, bool]:
        """The live CK for ``tag``, minting a new one if there is none or
        the cached one hit its item or age limit."""
        key = canonical_tag(tag)
        entry = self.ck_cache.get(key)
        if entry is not None and self._usable(entry):
            entry.items_encrypted += 1
            return entry, False
        self.ck_version += 1
        entry = CkCacheEntry(key, self.rng.randbytes(CK_SIZE), ck_name(self.prefix, self.ck_version, tag),
                             self.now, self.ck_version, items_encrypted=1)
        self.ck_cache[key] = entry
        return entry, True

    def _usable(self, entry: CkCacheEntry) -> bool:
        if self.max_items is not None and entry.items_encrypted >= self.max_items:
            return False
        if self.max_age_ms is not None and self.now - entry.created_at >= self.max_age_ms:
            return False
        return True

    def _publish_ck(self, entry: CkCacheEntry, tag):
        if self.params is None:
            self.fetch_params()
        try:
            ct = encrypt(self.params, tag, entry.ck, self.rng)
        except UnknownAttribute:
            log.info("unknown attribute under params v=%d, refetching", self.params.version)
            self.fetch_params()
            ct = encrypt(self.params, tag, entry.ck, self.rng)
        self.abe_encryptions += 1
        obj = publish_segments(self.identity, entry.ck_name, encoding.serialize_ciphertext(ct), self.mss)
        self.repo.insert(obj.segments)
        self.ck_names.append(entry.ck_name)

    # -- production -------------------------------------------------------------------------
    def produce(self, data_name: Name | str, payload: bytes, tag: AttributeSet | PolicyExpr | str) -> Data:
        data_name = Name.coerce(data_name)
        repo = next((r for r in self.data_repos if r.prefix.is_prefix_of(data_name)), None)
        if repo is None:
            raise ValueError(f"{data_name} is not under any prefix this producer serves")
        tag = coerce_tag(self.abe_type is AbeType.CP, tag)
        entry, fresh = self.ck_lookup(tag)
        if fresh:
            try:
                self._publish_ck(entry, tag)
            except Exception:
                del self.ck_cache[entry.cache_key]
                raise
        sealed = seal_payload(entry.ck, data_name, payload, self.rng.randbytes(NONCE_SIZE))
        data = self.identity.sign(Data(data_name, content=embed_ck_name(entry.ck_name, sealed)))
        repo.insert([data])
        self.produced += 1
        return data

    @property
    def ck_count(self) -> int:
        return len(self.ck_names)
