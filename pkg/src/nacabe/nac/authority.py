"""Attribute Authority: owns the ABE master key, publishes the public
parameters and one decryption key (DKEY) per granted consumer."""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass
from typing import Callable, Iterable

from ..abe import encoding
from ..abe.policy import And, Attribute, AttributeSet, Compare, Constant, Leaf, Or, PolicyExpr, parse_policy
from ..abe.scheme import AbeType, keygen, setup
from ..abe.tree import iter_leaves, build_access_tree
from ..errors import GrantError
from ..ndn.forwarder import AppFace
from ..ndn.name import Name
from ..ndn.packet import Data
from ..ndn.security import Certificate, Identity
from . import hybrid
from .naming import dkey_name, pubparams_name
from .role import Role
from .segments import DEFAULT_MSS, SegmentedObject, publish_segments

log = logging.getLogger(__name__)

PARAMS_FRESHNESS_MS = 1_000
DKEY_FRESHNESS_MS = 1_000

_POLICY_TYPES = (Leaf, And, Or, Compare, Constant)


@dataclass
class GrantRecord:
    grant: object                 # PolicyExpr (KP) or AttributeSet (CP)
    dkey_version: int
    dkey: SegmentedObject

    @property
    def size(self) -> int:
        return self.dkey.size

    @property
    def segments(self) -> int:
        return len(self.dkey)


def coerce_tag(want_policy: bool, value) -> PolicyExpr | AttributeSet:
    """A policy (AST or text) or a non-empty attribute set, as requested."""
    if want_policy:
        if isinstance(value, str):
            return parse_policy(value)
        if isinstance(value, _POLICY_TYPES):
            return value
        raise GrantError("expected a policy, got an attribute set")
    if isinstance(value, (str, *_POLICY_TYPES)):
        raise GrantError("expected an attribute set, got a policy")
    try:
        attrs = AttributeSet(value)
    except (TypeError, ValueError) as exc:
        raise GrantError(f"bad attribute set: {exc}") from None
    if not attrs:
        raise GrantError("empty attribute set")
    return attrs


def coerce_grant(abe_type: AbeType, grant) -> PolicyExpr | AttributeSet:
    """KP authorities grant policies, CP authorities attribute sets."""
    return coerce_tag(abe_type is AbeType.KP, grant)


class AttributeAuthority(Role):
    def __init__(self, face: AppFace, identity: Identity, abe_type: AbeType | str = AbeType.KP,
                 prefix: Name | str | None = None, mss: int = DEFAULT_MSS, rng: random.Random | None = None,
                 certificate_check: Callable[[Certificate], bool] | None = None):
        super().__init__(face, identity, prefix, mss, rng)
        self.abe_type = AbeType(abe_type)
        self.params, self.master = setup(self.abe_type, self.rng)
        self.params_version = 0
        self.published_params: list[SegmentedObject] = []
        self.grants: dict[Name, GrantRecord] = {}
        self.certificate_check = certificate_check
        self.publish_params()

    # -- public parameters ------------------------------------------------------------
    def publish_params(self) -> Name:
        self.params_version += 1
        self.params.version = self.params_version
        name = pubparams_name(self.prefix, self.abe_type, self.params_version)
        obj = publish_segments(self.identity, name, encoding.serialize_params(self.params), self.mss,
                               PARAMS_FRESHNESS_MS)
        self.repo.insert(obj.segments)
        self.published_params.append(obj)
        log.info("published %s (%d attributes)", name, len(self.params.attr_public))
        return name

    def declare_attributes(self, attrs: Iterable[Attribute | str]) -> bool:
        """Add attributes to the universe; republishes the parameters under
        a new version if anything was new."""
        grew = self.master.ensure(AttributeSet(attrs), self.rng)
        if grew:
            self.publish_params()
        return grew

    # -- decryption keys ---------------------------------------------------------------
    def grant(self, consumer: Certificate | Data, grant) -> Name:
        """Generate the consumer's ABE key, wrap it to the consumer's public
        key and publish it; returns the DKEY object name (through version)."""
        cert = self._certificate(consumer)
        grant = coerce_grant(self.abe_type, grant)
        if self.abe_type is AbeType.KP:
            needed = [leaf.attribute for leaf in iter_leaves(build_access_tree(grant))]
        else:
            needed = list(grant)
        if self.master.ensure(needed, self.rng):
            self.publish_params()
        key = keygen(self.master, grant, self.rng)
        sealed = hybrid.seal(cert.encryption_key, encoding.serialize_key(key), self.rng)
        previous = self.grants.get(cert.key_name)
        version = previous.dkey_version + 1 if previous else 1
        name = dkey_name(self.prefix, cert.key_name, version)
        obj = publish_segments(self.identity, name, sealed, self.mss, DKEY_FRESHNESS_MS)
        self.repo.insert(obj.segments)
        self.grants[cert.key_name] = GrantRecord(grant, version, obj)
        log.info("granted %s: %d bytes in %d segments", name, obj.size, len(obj))
        return name

    def _certificate(self, consumer) -> Certificate:
        try:
            cert = consumer if isinstance(consumer, Certificate) else Certificate.from_data(consumer)
        except Exception as exc:
            raise GrantError(f"not a consumer certificate: {exc}") from None
        if self.certificate_check is not None and not self.certificate_check(cert):
            raise GrantError(f"unknown consumer certificate {cert.name}")
        return cert

    @property
    def dkey_count(self) -> int:
        """DKEY objects published, counting every version."""
        return sum(g.dkey_version for g in self.grants.values())
