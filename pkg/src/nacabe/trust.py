"""Trust-schema validation of Data packets.

A schema is a trust anchor plus an ordered list of rules, one per line::

    anchor: <base64 of the anchor certificate packet>
    rule <id>: <data pattern> => <signer pattern | anchor>

Pattern components are literals, ``<>`` (any one component), ``<>*`` (any
run, possibly empty), ``<name>`` / ``<name>*`` (captures). A capture name
used twice in a data pattern must match the same components; in a signer
pattern it refers back to what the data pattern captured.
"""

from __future__ import annotations

import base64
import binascii
import enum
import re
from dataclasses import dataclass, field
from typing import Callable

from .errors import DecodeError, SchemaError
from .ndn.name import Component, Name
from .ndn.packet import Data, Interest, decode_packet, encode_packet
from .ndn.security import Certificate, verify_data

MAX_CHAIN_DEPTH = 8
ANCHOR = "anchor"

Fetch = Callable[[Name], "Data | None"]


class Outcome(enum.Enum):
    VALID = "VALID"
    INVALID_SIGNATURE = "INVALID_SIGNATURE"
    NO_MATCHING_RULE = "NO_MATCHING_RULE"
    CHAIN_FETCH_FAILED = "CHAIN_FETCH_FAILED"
    ANCHOR_MISMATCH = "ANCHOR_MISMATCH"
    NAMING_VIOLATION = "NAMING_VIOLATION"


@dataclass(frozen=True)
class ValidationResult:
    outcome: Outcome
    chain: tuple = ()
    name: Name | None = None
    detail: str = ""

    @property
    def ok(self) -> bool:
        return self.outcome is Outcome.VALID

    def __bool__(self) -> bool:
        return self.ok


# -- patterns -----------------------------------------------------------------------

_ELEM = re.compile(r"<([A-Za-z_][A-Za-z0-9_-]*)?>(\*)?\Z")


@dataclass(frozen=True)
class _Elem:
    literal: Component | None = None
    capture: str | None = None
    multi: bool = False


@dataclass(frozen=True)
class Pattern:
    text: str
    elems: tuple

    @classmethod
    def parse(cls, text: str) -> "Pattern":
        text = text.strip()
        if not text.startswith("/"):
            raise ValueError(f"pattern must start with '/': {text!r}")
        elems = []
        for part in (p for p in text.split("/") if p):
            m = _ELEM.match(part)
            if m:
                elems.append(_Elem(capture=m.group(1), multi=bool(m.group(2))))
            else:
                elems.append(_Elem(literal=Component.from_text(part)))
        return cls(text, tuple(elems))

    @property
    def captures(self) -> set[str]:
        return {e.capture for e in self.elems if e.capture}

    def match(self, name: Name, bound: dict | None = None) -> dict | None:
        """Bindings (capture -> tuple of components) if ``name`` matches."""
        comps = name.components
        elems = self.elems

        def go(i: int, j: int, env: dict) -> dict | None:
            if i == len(elems):
                return env if j == len(comps) else None
            e = elems[i]
            if e.literal is not None:
                if j < len(comps) and comps[j] == e.literal:
                    return go(i + 1, j + 1, env)
                return None
            if e.capture is not None and e.capture in env:
                want = env[e.capture]
                if tuple(comps[j : j + len(want)]) == want:
                    return go(i + 1, j + len(want), env)
                return None
            lengths = range(0, len(comps) - j + 1) if e.multi else (1,)
            for n in lengths:
                if j + n > len(comps):
                    break
                new_env = env if e.capture is None else {**env, e.capture: tuple(comps[j : j + n])}
                result = go(i + 1, j + n, new_env)
                if result is not None:
                    return result
            return None

        return go(0, 0, dict(bound or {}))


@dataclass(frozen=True)
class SchemaRule:
    id: str
    data_pattern: Pattern
    signer_pattern: Pattern | None  # None: must be signed by the anchor

    @property
    def signed_by_anchor(self) -> bool:
        return self.signer_pattern is None


@dataclass
class TrustSchema:
    rules: list[SchemaRule]
    anchor: Certificate
    check_naming: bool = field(default=True)

    def __post_init__(self):
        if not self.rules:
            raise SchemaError("trust schema needs at least one rule")
        if not self.anchor.is_self_signed or not verify_data(self.anchor.data, self.anchor.signing_key):
            raise SchemaError("trust anchor must be a valid self-signed certificate")

    def find_rule(self, name: Name) -> tuple[SchemaRule, dict] | None:
        for rule in self.rules:
            env = rule.data_pattern.match(name)
            if env is not None:
                return rule, env
        return None

    def without_rule(self, rule_id: str) -> "TrustSchema":
        return TrustSchema([r for r in self.rules if r.id != rule_id], self.anchor, self.check_naming)

    def to_text(self) -> str:
        lines = [f"anchor: {base64.b64encode(encode_packet(self.anchor.data)).decode()}"]
        for r in self.rules:
            signer = ANCHOR if r.signer_pattern is None else r.signer_pattern.text
            lines.append(f"rule {r.id}: {r.data_pattern.text} => {signer}")
        return "\n".join(lines) + "\n"


_RULE_LINE = re.compile(r"rule\s+([A-Za-z0-9_.-]+)\s*:\s*(\S+)\s*=>\s*(\S+)\s*\Z")


def load_schema(text: str) -> TrustSchema:
    anchor: Certificate | None = None
    rules: list[SchemaRule] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("anchor:"):
            blob = line[len("anchor:"):].strip()
            try:
                packet = decode_packet(base64.b64decode(blob, validate=True))
                if not isinstance(packet, Data):
                    raise DecodeError("anchor is not a Data packet")
                anchor = Certificate.from_data(packet)
            except (binascii.Error, DecodeError) as exc:
                raise SchemaError(f"bad anchor certificate: {exc}", lineno) from None
            continue
        m = _RULE_LINE.match(line)
        if not m:
            raise SchemaError(f"cannot parse {line!r}", lineno)
        rule_id, data_text, signer_text = m.groups()
        try:
            data_pattern = Pattern.parse(data_text)
            signer = None if signer_text == ANCHOR else Pattern.parse(signer_text)
        except ValueError as exc:
            raise SchemaError(str(exc), lineno) from None
        if signer is not None:
            undefined = signer.captures - data_pattern.captures
            if undefined:
                raise SchemaError(f"signer pattern references undefined capture(s) {sorted(undefined)}", lineno)
        if any(r.id == rule_id for r in rules):
            raise SchemaError(f"duplicate rule id {rule_id!r}", lineno)
        rules.append(SchemaRule(rule_id, data_pattern, signer))
    if anchor is None:
        raise SchemaError("missing anchor")
    return TrustSchema(rules, anchor)


# -- validation ----------------------------------------------------------------------

def check_naming_convention(data: Data):
    """NAC-ABE grammar check for PUBPARAMS, DKEY and CK packets."""
    from .nac.naming import check_naming

    return check_naming(data.name)


def _is_anchor(schema: TrustSchema, cert: Certificate) -> bool:
    anchor = schema.anchor
    return cert.key_name == anchor.key_name and cert.signing_key == anchor.signing_key


def validate(data: Data, fetch: Fetch, schema: TrustSchema) -> ValidationResult:
    """Walk the signing chain of ``data`` up to the schema's trust anchor.

    At each step the first rule whose data pattern matches the packet name
    decides which key may have signed it; the signer's certificate is
    fetched, the signature verified, and the certificate validated in turn.
    """
    chain: list[Name] = []
    current = data
    top_name = data.name

    def fail(outcome: Outcome, detail: str) -> ValidationResult:
        return ValidationResult(outcome, tuple(chain), top_name, detail)

    if schema.check_naming:
        naming = check_naming_convention(data)
        if not naming:
            return fail(Outcome.NAMING_VIOLATION, f"component {naming.index}: {naming.reason}")

    for _ in range(MAX_CHAIN_DEPTH):
        found = schema.find_rule(current.name)
        if found is None:
            return fail(Outcome.NO_MATCHING_RULE, f"no rule for {current.name}")
        rule, env = found
        signer_name = current.key_locator
        if signer_name is None:
            return fail(Outcome.NO_MATCHING_RULE, f"{current.name} carries no KeyLocator")

        if rule.signed_by_anchor:
            anchor = schema.anchor
            if signer_name not in (anchor.name, anchor.key_name):
                return fail(Outcome.ANCHOR_MISMATCH,
                            f"rule {rule.id} requires the anchor, {current.name} names {signer_name}")
            if not verify_data(current, anchor.signing_key):
                return fail(Outcome.INVALID_SIGNATURE, f"bad signature on {current.name}")
            chain.append(anchor.name)
            return ValidationResult(Outcome.VALID, tuple(chain), top_name)

        if rule.signer_pattern.match(signer_name, env) is None:
            return fail(Outcome.NO_MATCHING_RULE,
                        f"rule {rule.id}: signer {signer_name} not allowed for {current.name}")
        packet = fetch(signer_name)
        if packet is None:
            return fail(Outcome.CHAIN_FETCH_FAILED, f"could not fetch {signer_name}")
        try:
            cert = Certificate.from_data(packet)
        except DecodeError as exc:
            return fail(Outcome.CHAIN_FETCH_FAILED, f"{signer_name} is not a certificate: {exc}")
        if not verify_data(current, cert.signing_key):
            return fail(Outcome.INVALID_SIGNATURE, f"bad signature on {current.name}")
        chain.append(cert.name)
        if cert.is_self_signed:
            if _is_anchor(schema, cert):
                return ValidationResult(Outcome.VALID, tuple(chain), top_name)
            return fail(Outcome.ANCHOR_MISMATCH, f"self-signed {cert.name} is not the trust anchor")
        current = cert.data
    return fail(Outcome.CHAIN_FETCH_FAILED, f"chain longer than {MAX_CHAIN_DEPTH}")


MHEALTH_RULES = """\
rule pubparams: /<aa>*/PUBPARAMS/<>*              => /<aa>*/KEY/<>*
rule dkey:      /<aa>*/DKEY/<>*                   => /<aa>*/KEY/<>*
rule entity:    /org/mhealth/<role>/<>*/KEY/<>*   => anchor
rule app-data:  /org/mhealth/<>*                  => /org/mhealth/producer/<>/KEY/<>*
"""


def mhealth_schema(anchor: Certificate, rules: str = MHEALTH_RULES) -> TrustSchema:
    """The reference mHealth hierarchy: the anchor certifies every entity,
    the authority signs its params and DKEYs, producers sign data and CKs."""
    return load_schema(f"anchor: {base64.b64encode(encode_packet(anchor.data)).decode()}\n" + rules)


class Validator:
    """Binds a schema to a certificate fetcher; call it on a Data packet."""

    def __init__(self, schema: TrustSchema, fetch: Fetch):
        self.schema = schema
        self.fetch = fetch
        self.results: list[ValidationResult] = []

    def __call__(self, data: Data) -> ValidationResult:
        result = validate(data, self.fetch, self.schema)
        self.results.append(result)
        return result


def face_fetcher(face, retries: int = 3) -> Fetch:
    """Certificate fetch through ``face``'s forwarder (and its content store)."""
    def fetch(name: Name) -> Data | None:
        return face.get(Interest(name), retries=retries)

    return fetch
