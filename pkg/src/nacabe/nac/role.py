"""State shared by the three protocol roles."""

from __future__ import annotations

import random
from collections import Counter

from ..ndn.forwarder import AppFace
from ..ndn.name import Name
from ..ndn.security import Identity
from .segments import DEFAULT_MSS, Repo


class Role:
    """An application bound to one face: it serves what it publishes
    (and its own certificate) from an in-memory repo."""

    def __init__(self, face: AppFace, identity: Identity, prefix: Name | str | None = None,
                 mss: int = DEFAULT_MSS, rng: random.Random | None = None):
        self.face = face
        self.identity = identity
        self.prefix = Name.coerce(prefix) if prefix is not None else identity.name
        self.mss = mss
        self.rng = rng or random.SystemRandom()
        self.repo = Repo(face, self.prefix)
        self.fetch_stats: Counter = Counter()
        cert = identity.certificate.data
        if self.prefix.is_prefix_of(cert.name):
            self.repo.insert([cert])
        else:
            self.cert_repo = Repo(face, identity.key_name)
            self.cert_repo.insert([cert])

    @property
    def now(self) -> int:
        return self.face.scheduler.now
