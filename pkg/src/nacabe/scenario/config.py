"""Scenario configuration: JSON checked against a published schema, then
against cross-references the schema cannot express."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema

from ..abe.policy import parse_policy
from ..errors import NacAbeError, PolicySyntaxError
from ..ndn.name import Name

TIMESTAMP_ATTRIBUTE = "timestamp"


class ConfigError(NacAbeError, ValueError):
    pass


def config_schema() -> dict:
    return json.loads(resources.files(__package__).joinpath("config.schema.json").read_text())


def bundled_scenarios() -> dict[str, Path]:
    root = resources.files(__package__).joinpath("scenarios")
    return {Path(p.name).stem: Path(str(p)) for p in root.iterdir() if p.name.endswith(".json")}


@dataclass
class ScenarioConfig:
    raw: dict
    source: str = "<memory>"
    seed: int = 0
    nodes: dict = field(default_factory=dict)

    @property
    def name(self) -> str:
        return self.raw["name"]

    @property
    def abe_type(self) -> str:
        return self.raw["abeType"]

    @property
    def mss(self) -> int:
        return self.raw.get("mss", 1500)

    def node_ids(self, role: str) -> list[str]:
        return [n["id"] for n in self.raw["nodes"] if n["role"] == role]


def _fail(message: str):
    raise ConfigError(message)


def parse_config(raw: dict, source: str = "<memory>") -> ScenarioConfig:
    try:
        jsonschema.validate(raw, config_schema())
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        _fail(f"{source}: {where}: {exc.message}")

    nodes = {}
    for n in raw["nodes"]:
        if n["id"] in nodes:
            _fail(f"duplicate node id {n['id']!r}")
        if n["role"] != "router" and "identity" not in n:
            _fail(f"node {n['id']!r} ({n['role']}) needs an identity")
        nodes[n["id"]] = n
    anchor = Name.from_uri(raw["anchor"])
    for n in nodes.values():
        if "identity" in n and not anchor.is_prefix_of(Name.from_uri(n["identity"])):
            _fail(f"identity {n['identity']} of node {n['id']!r} is outside the anchor namespace {anchor}")
    if len(_ids(nodes, "aa")) != 1:
        _fail("exactly one node must have role 'aa'")

    for link in raw["links"]:
        for end in (link["a"], link["b"]):
            if end not in nodes:
                _fail(f"link references undeclared node {end!r}")

    kp = raw["abeType"] == "KP"

    def role_of(node_id: str, role: str, what: str):
        if nodes.get(node_id, {}).get("role") != role:
            _fail(f"{what} references {node_id!r}, which is not a declared {role}")

    def check_policy(text: str, what: str):
        try:
            parse_policy(text)
        except PolicySyntaxError as exc:
            _fail(f"{what}: {exc}")

    for i, g in enumerate(raw["grants"]):
        role_of(g["consumer"], "consumer", f"grant {i}")
        if kp and "policy" not in g or not kp and "attributes" not in g:
            _fail(f"grant {i}: a {raw['abeType']} authority grants {'a policy' if kp else 'attributes'}")
        if "policy" in g and "attributes" in g:
            _fail(f"grant {i}: give either a policy or attributes")
        if "policy" in g:
            check_policy(g["policy"], f"grant {i}")

    produced = set()
    for i, p in enumerate(raw["productions"]):
        role_of(p["producer"], "producer", f"production {i}")
        if kp and "attributes" not in p or not kp and "policy" not in p:
            _fail(f"production {i}: {raw['abeType']} data is tagged with {'attributes' if kp else 'a policy'}")
        if "policy" in p and "attributes" in p:
            _fail(f"production {i}: give either a policy or attributes")
        if "policy" in p:
            check_policy(p["policy"], f"production {i}")
        if "timestamp" in p and not kp:
            _fail(f"production {i}: timestamps become data attributes, which only KP uses")
        name = Name.from_uri(p["dataName"])
        prefixes = [Name.from_uri(x) for x in nodes[p["producer"]].get("dataPrefixes", [])]
        if not any(x.is_prefix_of(name) for x in prefixes):
            _fail(f"production {i}: {name} is not under a dataPrefix of {p['producer']!r}")
        produced.add(name)

    for i, c in enumerate(raw["consumptions"]):
        role_of(c["consumer"], "consumer", f"consumption {i}")
        if Name.from_uri(c["dataName"]) not in produced:
            _fail(f"consumption {i}: {c['dataName']} is never produced")
    return ScenarioConfig(raw, source, raw.get("seed", 0), nodes)


def _ids(nodes: dict, role: str) -> list[str]:
    return [k for k, n in nodes.items() if n["role"] == role]


def load_config(path: str | Path) -> ScenarioConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    return parse_config(raw, str(path))
