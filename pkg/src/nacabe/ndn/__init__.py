"""Minimal NDN substrate: names, packets, signing and a simulated forwarder."""

from .forwarder import AppFace, ContentStore, Forwarder, Link, Network, Scheduler
from .name import Component, Name
from .packet import ContentType, Data, Interest, decode_packet, encode_packet
from .security import Certificate, Identity, sign_data, verify_data

__all__ = [
    "AppFace",
    "Certificate",
    "Component",
    "ContentStore",
    "ContentType",
    "Data",
    "Forwarder",
    "Identity",
    "Interest",
    "Link",
    "Name",
    "Network",
    "Scheduler",
    "decode_packet",
    "encode_packet",
    "sign_data",
    "verify_data",
]
