"""Runs a scenario: network, identities, roles, then every grant,
production and consumption in order, collecting a report."""

from __future__ import annotations

import json
import logging
import random
import time
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from ..abe.policy import AttributeSet, data_attributes_for, parse_policy
from ..abe.tree import build_access_tree, iter_leaves
from ..errors import NacAbeError, PolicyNotSatisfied
from ..nac import AttributeAuthority, Decryptor, Encryptor
from ..nac.encryptor import DEFAULT_MAX_AGE_MS, DEFAULT_MAX_ITEMS
from ..ndn import Identity, Name, Network
from ..trust import MHEALTH_RULES, Outcome, Validator, face_fetcher, mhealth_schema
from .config import TIMESTAMP_ATTRIBUTE, ScenarioConfig, load_config

log = logging.getLogger(__name__)

SUCCESS = "SUCCESS"
DENIED = "DENIED"
ERROR = "ERROR"


@dataclass
class ConsumptionResult:
    index: int
    consumer: str
    data_name: str
    expected: str
    outcome: str
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.outcome == self.expected

    def record(self) -> dict:
        return {"type": "consumption", "index": self.index, "consumer": self.consumer,
                "dataName": self.data_name, "expected": self.expected, "outcome": self.outcome,
                "passed": self.passed, "detail": self.detail}


@dataclass
class RunReport:
    scenario: str
    seed: int
    abe_type: str
    consumptions: list = field(default_factory=list)
    grants: list = field(default_factory=list)
    counters: dict = field(default_factory=dict)
    validation: dict = field(default_factory=dict)
    ck_count: int = 0
    dkey_count: int = 0
    params_versions: int = 0
    virtual_ms: int = 0
    wall_ms: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.consumptions)

    @property
    def failures(self) -> list:
        return [c for c in self.consumptions if not c.passed]

    def records(self) -> list[dict]:
        """Report lines; everything here is a function of config and seed."""
        out = [{"type": "scenario", "name": self.scenario, "seed": self.seed, "abeType": self.abe_type}]
        out += self.grants
        out += [c.record() for c in self.consumptions]
        out.append({
            "type": "summary",
            "passed": self.passed,
            "consumptions": len(self.consumptions),
            "failures": [c.index for c in self.failures],
            "ckCount": self.ck_count,
            "dkeyCount": self.dkey_count,
            "paramsVersions": self.params_versions,
            "counters": self.counters,
            "validation": self.validation,
            "virtualMs": self.virtual_ms,
        })
        return out

    def to_jsonl(self) -> str:
        return "".join(json.dumps(r, sort_keys=True) + "\n" for r in self.records())

    def summary(self) -> str:
        lines = [f"scenario {self.scenario} ({self.abe_type}, seed {self.seed})"]
        for c in self.consumptions:
            mark = "ok  " if c.passed else "FAIL"
            lines.append(f"  {mark} #{c.index} {c.consumer} {c.data_name}: {c.outcome} (expected {c.expected})"
                         + (f" [{c.detail}]" if c.detail and not c.passed else ""))
        for g in self.grants:
            lines.append(f"  DKEY {g['name']}: {g['bytes']} bytes, {g['segments']} segment(s)")
        lines.append(f"  CKs published: {self.ck_count}, DKEYs published: {self.dkey_count}, "
                     f"params versions: {self.params_versions}")
        c = self.counters
        lines.append(f"  interests {c.get('interests', 0)}, data {c.get('data', 0)}, cache hits "
                     f"{c.get('cacheHits', 0)}, retransmits {c.get('retransmits', 0)}")
        lines.append(f"  virtual time {self.virtual_ms} ms, wall time {self.wall_ms:.0f} ms")
        lines.append("PASS" if self.passed else f"FAIL: {len(self.failures)} consumption(s) did not match")
        return "\n".join(lines)


class Scenario:
    """A configured, instantiated scenario; ``run`` executes it once."""

    def __init__(self, config: ScenarioConfig, seed: int | None = None):
        self.config = config
        self.seed = config.seed if seed is None else seed
        self.rng = random.Random(self.seed)
        raw = config.raw
        self.net = Network(rng=self.rng)
        for node_id in config.nodes:
            self.net.add_node(node_id)
        for link in raw["links"]:
            self.net.connect(link["a"], link["b"], link.get("delayMs", 10), link.get("lossProbability", 0.0))

        self.anchor = Identity(raw["anchor"], rng=self.rng)
        rules = "\n".join(raw["trustRules"]) + "\n" if "trustRules" in raw else MHEALTH_RULES
        self.schema = mhealth_schema(self.anchor.certificate, rules)
        self.identities = {
            node_id: Identity(n["identity"], issuer=self.anchor, rng=self.rng)
            for node_id, n in config.nodes.items() if "identity" in n
        }
        self.validators: dict[str, Validator] = {}
        self.app_faces = []

        aa_id = next(k for k, n in config.nodes.items() if n["role"] == "aa")
        self.aa_node = aa_id
        self.aa = AttributeAuthority(self._face(aa_id), self.identities[aa_id], config.abe_type,
                                     prefix=config.nodes[aa_id].get("prefix"), mss=config.mss, rng=self.rng)
        cache = raw.get("cachePolicy", {})
        self.encryptors = {
            k: Encryptor(self._face(k), self.identities[k], self.aa.prefix, config.abe_type,
                         prefix=n.get("prefix"), data_prefixes=n.get("dataPrefixes", []),
                         validator=self._validator(k),
                         max_items=cache.get("maxItems", DEFAULT_MAX_ITEMS),
                         max_age_ms=cache.get("maxAgeMs", DEFAULT_MAX_AGE_MS),
                         mss=config.mss, rng=self.rng)
            for k, n in config.nodes.items() if n["role"] == "producer"
        }
        self.decryptors = {
            k: Decryptor(self._face(k), self.identities[k], self.aa.prefix, config.abe_type,
                         validator=self._validator(k), prefix=n.get("prefix"), mss=config.mss, rng=self.rng)
            for k, n in config.nodes.items() if n["role"] == "consumer"
        }
        self.payloads: dict[Name, bytes] = {}

    def _face(self, node_id: str):
        face = self.net.nodes[node_id].add_app_face(self.rng)
        self.app_faces.append(face)
        return face

    def _validator(self, node_id: str) -> Validator:
        v = self.validators[node_id] = Validator(self.schema, face_fetcher(self._face(node_id)))
        return v

    # -- steps ---------------------------------------------------------------------------------
    def _tag(self, production: dict):
        if "policy" in production:
            return parse_policy(production["policy"])
        attrs = AttributeSet(production["attributes"])
        if "timestamp" in production:
            attrs = attrs | data_attributes_for(TIMESTAMP_ATTRIBUTE, production["timestamp"])
        return attrs

    def declare_production_attributes(self):
        """The authority learns every attribute producers will use, so the
        parameters producers fetch already cover them."""
        needed = set()
        for p in self.config.raw["productions"]:
            tag = self._tag(p)
            if isinstance(tag, AttributeSet):
                needed |= tag
            else:
                needed |= {leaf.attribute for leaf in iter_leaves(build_access_tree(tag))}
        self.aa.declare_attributes(sorted(needed))

    def grant_all(self):
        for g in self.config.raw["grants"]:
            consumer = self.identities[g["consumer"]]
            self.aa.grant(consumer.certificate, g.get("policy", g.get("attributes")))

    def _advance(self, at_ms: int | None):
        if at_ms is not None and at_ms > self.net.scheduler.now:
            self.net.scheduler.run(until_ms=at_ms)
            self.net.scheduler.advance_to(at_ms)

    def produce_all(self):
        for p in self.config.raw["productions"]:
            self._advance(p.get("atMs"))
            payload = p["payload"]
            payload = self.rng.randbytes(payload["randomBytes"]) if isinstance(payload, dict) else payload.encode()
            name = Name.from_uri(p["dataName"])
            self.encryptors[p["producer"]].produce(name, payload, self._tag(p))
            self.payloads[name] = payload

    def consume(self, index: int, c: dict) -> ConsumptionResult:
        self._advance(c.get("atMs"))
        name = Name.from_uri(c["dataName"])
        try:
            plaintext = self.decryptors[c["consumer"]].consume(name)
        except PolicyNotSatisfied as exc:
            outcome, detail = DENIED, str(exc)
        except NacAbeError as exc:
            outcome, detail = ERROR, f"{type(exc).__name__}: {exc}"
        else:
            if plaintext == self.payloads[name]:
                outcome, detail = SUCCESS, ""
            else:
                outcome, detail = ERROR, "decrypted payload differs from the produced one"
        result = ConsumptionResult(index, c["consumer"], str(name), c["expected"], outcome, detail)
        log.info("consumption #%d %s -> %s", index, name, outcome)
        return result

    def run(self) -> RunReport:
        started = time.perf_counter()
        self.declare_production_attributes()
        self.grant_all()
        self.produce_all()
        results = [self.consume(i, c) for i, c in enumerate(self.config.raw["consumptions"])]
        self.net.scheduler.run()
        return self._report(results, (time.perf_counter() - started) * 1000)

    def _report(self, results, wall_ms: float) -> RunReport:
        stats = self.net.stats()
        roles = [*self.encryptors.values(), *self.decryptors.values(), self.aa]
        fetch = Counter()
        for r in roles:
            fetch.update(r.fetch_stats)
        retransmits = fetch["retransmissions"] + sum(f.retransmissions for f in self.app_faces)
        counters = {
            "interests": stats["interests_in"],
            "data": stats["data_in"],
            "cacheHits": stats["cache_hits"],
            "retransmits": retransmits,
            "timeouts": fetch["timeouts"],
            "mdEvents": fetch["md_events"],
            "linkDrops": stats["link_lost"],
        }
        outcomes = Counter(r.outcome.value for v in self.validators.values() for r in v.results)
        grants = [
            {"type": "grant", "consumer": str(key_name), "name": str(g.dkey.base_name),
             "version": g.dkey_version, "bytes": g.size, "segments": g.segments}
            for key_name, g in sorted(self.aa.grants.items(), key=lambda kv: str(kv[0]))
        ]
        return RunReport(
            scenario=self.config.name, seed=self.seed, abe_type=self.config.abe_type,
            consumptions=results, grants=grants, counters=counters,
            validation={o.value: outcomes.get(o.value, 0) for o in Outcome},
            ck_count=sum(e.ck_count for e in self.encryptors.values()),
            dkey_count=self.aa.dkey_count, params_versions=self.aa.params_version,
            virtual_ms=self.net.scheduler.now, wall_ms=wall_ms,
        )


def run_scenario(config: ScenarioConfig | str | Path, seed: int | None = None,
                 report_path: str | Path | None = None) -> RunReport:
    if not isinstance(config, ScenarioConfig):
        config = load_config(config)
    report = Scenario(config, seed).run()
    if report_path is not None:
        Path(report_path).write_text(report.to_jsonl())
    return report
