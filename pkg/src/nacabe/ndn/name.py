"""Hierarchical NDN names."""

from __future__ import annotations

from dataclasses import dataclass
from functools import total_ordering
from typing import Iterable, Union
from urllib.parse import quote, unquote_to_bytes

from ..errors import DecodeError, EncodeError
from . import tlv

MAX_COMPONENT_LENGTH = 255

_SAFE = "-._~"


@total_ordering
@dataclass(frozen=True)
class Component:
    value: bytes
    type: int = tlv.GENERIC_COMPONENT

    def __post_init__(self):
        if len(self.value) > MAX_COMPONENT_LENGTH:
            raise EncodeError(f"component too long ({len(self.value)} > {MAX_COMPONENT_LENGTH} bytes)")

    @classmethod
    def version(cls, n: int) -> "Component":
        return cls(tlv.encode_nonneg_int(n), tlv.VERSION_COMPONENT)

    @classmethod
    def segment(cls, n: int) -> "Component":
        return cls(tlv.encode_nonneg_int(n), tlv.SEGMENT_COMPONENT)

    @classmethod
    def from_text(cls, text: str) -> "Component":
        if text.startswith("v=") and text[2:].isdigit():
            return cls.version(int(text[2:]))
        if text.startswith("seg=") and text[4:].isdigit():
            return cls.segment(int(text[4:]))
        return cls(unquote_to_bytes(text))

    @property
    def is_version(self) -> bool:
        return self.type == tlv.VERSION_COMPONENT

    @property
    def is_segment(self) -> bool:
        return self.type == tlv.SEGMENT_COMPONENT

    def to_number(self) -> int:
        return int.from_bytes(self.value, "big")

    def to_str(self) -> str:
        """Decode a generic component as UTF-8 text."""
        return self.value.decode("utf-8")

    def to_uri(self) -> str:
        if self.is_version:
            return f"v={self.to_number()}"
        if self.is_segment:
            return f"seg={self.to_number()}"
        if self.type != tlv.GENERIC_COMPONENT:
            return f"{self.type}={quote(self.value, safe=_SAFE)}"
        return quote(self.value, safe=_SAFE)

    def encode(self) -> bytes:
        return tlv.tlv(self.type, self.value)

    def __lt__(self, other: "Component") -> bool:
        return (self.type, self.value) < (other.type, other.value)

    def __str__(self) -> str:
        return self.to_uri()


ComponentLike = Union[Component, str, bytes]


def _component(c: ComponentLike) -> Component:
    if isinstance(c, Component):
        return c
    if isinstance(c, str):
        return Component(c.encode("utf-8"))
    if isinstance(c, (bytes, bytearray)):
        return Component(bytes(c))
    raise TypeError(f"cannot make a name component from {type(c).__name__}")


@total_ordering
class Name:
    """Immutable sequence of name components.

    Plain ``str`` arguments are taken verbatim as one component each; use
    :meth:`from_uri` to parse a ``/a/b/v=1`` style string.
    """

    __slots__ = ("_components", "_hash")

    def __init__(self, components: Iterable[ComponentLike] = ()):
        self._components: tuple[Component, ...] = tuple(_component(c) for c in components)
        self._hash = None

    @classmethod
    def from_uri(cls, uri: str) -> "Name":
        uri = uri.strip()
        if uri.startswith("ndn:"):
            uri = uri[4:]
        parts = [p for p in uri.split("/") if p]
        return cls(Component.from_text(p) for p in parts)

    @classmethod
    def coerce(cls, value: "Name | str") -> "Name":
        return value if isinstance(value, Name) else cls.from_uri(value)

    @property
    def components(self) -> tuple[Component, ...]:
        return self._components

    def __len__(self) -> int:
        return len(self._components)

    def __iter__(self):
        return iter(self._components)

    def __getitem__(self, item):
        if isinstance(item, slice):
            return Name(self._components[item])
        return self._components[item]

    def __add__(self, other: "Name | Iterable[ComponentLike]") -> "Name":
        other_components = other.components if isinstance(other, Name) else tuple(_component(c) for c in other)
        return Name(self._components + other_components)

    def append(self, component: ComponentLike) -> "Name":
        return Name(self._components + (_component(component),))

    def append_version(self, n: int) -> "Name":
        return self.append(Component.version(n))

    def append_segment(self, n: int) -> "Name":
        return self.append(Component.segment(n))

    def is_prefix_of(self, other: "Name") -> bool:
        n = len(self._components)
        return n <= len(other) and other.components[:n] == self._components

    def __eq__(self, other) -> bool:
        return isinstance(other, Name) and self._components == other._components

    def __lt__(self, other: "Name") -> bool:
        return self._components < other._components

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(self._components)
        return self._hash

    def to_uri(self) -> str:
        if not self._components:
            return "/"
        return "".join("/" + c.to_uri() for c in self._components)

    __str__ = to_uri

    def __repr__(self) -> str:
        return f"Name({self.to_uri()!r})"

    def encode(self) -> bytes:
        return tlv.tlv(tlv.NAME, b"".join(c.encode() for c in self._components))

    @classmethod
    def decode_value(cls, value: bytes) -> "Name":
        comps = []
        for type_, v in tlv.iter_tlvs(value):
            if type_ == 0 or type_ > 0xFFFF:
                raise DecodeError(f"bad name component type {type_}")
            if len(v) > MAX_COMPONENT_LENGTH:
                raise DecodeError("component too long")
            comps.append(Component(v, type_))
        return cls(comps)

    @classmethod
    def decode(cls, buf: bytes) -> "Name":
        _, value = tlv.read_single(buf, tlv.NAME)
        return cls.decode_value(value)

    def version(self) -> int | None:
        """Number of the last version component, if any."""
        for c in reversed(self._components):
            if c.is_version:
                return c.to_number()
        return None

    def segment(self) -> int | None:
        if self._components and self._components[-1].is_segment:
            return self._components[-1].to_number()
        return None
