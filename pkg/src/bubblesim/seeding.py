"""Deterministic hierarchical seed derivation.

Every random stream in a sweep is keyed by (master_seed, label path), so
results are reproducible bit-for-bit regardless of execution order or
worker count.
"""

from __future__ import annotations

import hashlib
import struct
from typing import Iterable, Union

Label = Union[int, str]

_MASK64 = (1 << 64) - 1


def derive_seed(master: int, labels: Iterable[Label]) -> int:
    """Derive a 64-bit seed from a master seed and an ordered label path.

    Labels may be ints or strings; the encoding is length-prefixed and
    type-tagged so distinct paths cannot collide by concatenation
    (e.g. ("ab", "c") vs ("a", "bc")).
    """
    h = hashlib.sha256()
    h.update(struct.pack(">Q", master & _MASK64))
    for label in labels:
        if isinstance(label, bool):
            raise TypeError("bool seed labels are ambiguous; use int or str")
        if isinstance(label, int):
            h.update(b"i")
            h.update(struct.pack(">q", label))
        elif isinstance(label, str):
            raw = label.encode("utf-8")
            h.update(b"s")
            h.update(struct.pack(">I", len(raw)))
            h.update(raw)
        else:
            raise TypeError(f"seed label must be int or str, got {type(label).__name__}")
    return int.from_bytes(h.digest()[:8], "big")
