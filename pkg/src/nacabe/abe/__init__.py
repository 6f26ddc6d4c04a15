"""ABE engine: policy language, access trees, comparison expansion and the
reference arithmetic-emulation backend for CP-ABE and KP-ABE."""

from .encoding import (
    deserialize_ciphertext,
    deserialize_key,
    deserialize_params,
    serialize_ciphertext,
    serialize_key,
    serialize_params,
)
from .policy import (
    ALWAYS_FALSE,
    ALWAYS_TRUE,
    And,
    Attribute,
    AttributeKind,
    AttributeSet,
    Compare,
    CompareOp,
    Leaf,
    Or,
    data_attributes_for,
    expand_comparison,
    normalize,
    parse_policy,
    to_text,
)
from .scheme import (
    AbeCiphertext,
    AbeKey,
    AbeType,
    MasterKey,
    PublicParams,
    cp_encrypt,
    cp_keygen,
    decrypt,
    encrypt,
    keygen,
    kp_encrypt,
    kp_keygen,
    setup,
)
from .tree import Gate, TreeLeaf, build_access_tree, leaf_count, satisfies

__all__ = [name for name in dir() if not name.startswith("_")]
