"""Deterministic sub-seed derivation.

A run has one global seed; each component gets
``derive_seed(global_seed, "component/path")``, the first 8 bytes of a
SHA-256 digest read big-endian. Stable across platforms and Python versions
(unlike ``hash()``).
"""

import hashlib

U64 = 2**64


def derive_seed(seed: int, *labels) -> int:
    text = ":".join([str(int(seed))] + [str(x) for x in labels])
    return int.from_bytes(hashlib.sha256(text.encode("utf-8")).digest()[:8], "big")


def check_seed(seed) -> int:
    seed = int(seed)
    if not 0 <= seed < U64:
        raise ValueError(f"seed {seed} is not a 64-bit unsigned integer")
    return seed
