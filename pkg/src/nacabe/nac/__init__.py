"""NAC-ABE protocol roles: attribute authority, encryptor and decryptor."""

from .authority import AttributeAuthority, GrantRecord
from .decryptor import Decryptor
from .encryptor import CkCacheEntry, Encryptor
from .naming import check_naming, ck_name, dkey_name, embed_ck_name, extract_ck_name, pubparams_name
from .segments import Repo, SegmentedObject, fetch_latest, fetch_segments, publish_segments

__all__ = [
    "AttributeAuthority",
    "CkCacheEntry",
    "Decryptor",
    "Encryptor",
    "GrantRecord",
    "Repo",
    "SegmentedObject",
    "check_naming",
    "ck_name",
    "dkey_name",
    "embed_ck_name",
    "extract_ck_name",
    "fetch_latest",
    "fetch_segments",
    "publish_segments",
    "pubparams_name",
]
