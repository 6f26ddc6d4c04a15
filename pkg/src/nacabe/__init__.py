"""Attribute-based access control for Named Data Networking (NAC-ABE)
with KP-ABE and CP-ABE workflows over a simulated forwarder."""

__version__ = "0.1.0"
