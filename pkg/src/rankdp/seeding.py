"""Deterministic seed derivation for parallel experiments.

Every replication / cell / arm derives its own generator from a tuple of
context values via blake2b, so results do not depend on scheduling order or
worker count.  The encoding is fixed (ints as decimal text, floats as their
IEEE-754 big-endian bytes, strings as UTF-8) and therefore stable across
platforms and Python versions.
"""

import hashlib
import struct

import numpy as np


def derive_seed(*parts) -> int:
    """Collapse a tuple of ints / floats / strings into a 64-bit seed."""
    h = hashlib.blake2b(digest_size=8)
    for part in parts:
        if isinstance(part, bool):
            raise TypeError("bool seed parts are ambiguous; use int or str")
        if isinstance(part, (int, np.integer)):
            enc = b"i" + str(int(part)).encode()
        elif isinstance(part, float):
            enc = b"f" + struct.pack(">d", part)
        elif isinstance(part, str):
            enc = b"s" + part.encode("utf-8")
        else:
            raise TypeError(f"unsupported seed part {part!r}")
        h.update(enc)
        h.update(b"\x1f")
    return int.from_bytes(h.digest(), "big")


def spawn_generator(*parts) -> np.random.Generator:
    """Fresh PCG64 generator keyed by the given context tuple."""
    return np.random.Generator(np.random.PCG64(derive_seed(*parts)))
