"""Counter-based random substreams.

Every consumer of randomness gets its own Philox stream keyed by
``(master_seed, purpose_tag, index)``. Streams never share state, so a path
simulated alone is bit-identical to the same path simulated inside an
ensemble, whatever the worker count.
"""
from __future__ import annotations

import hashlib

import numpy as np

MASK64 = (1 << 64) - 1


def tag_key(tag: str) -> int:
    """Stable 64-bit integer for a purpose tag (independent of PYTHONHASHSEED)."""
    return int.from_bytes(hashlib.sha256(tag.encode("utf-8")).digest()[:8], "little")


def substream(master_seed: int, tag: str, index: int = 0) -> np.random.Generator:
    if index < 0:
        raise ValueError("substream index must be non-negative")
    seq = np.random.SeedSequence([int(master_seed) & MASK64, tag_key(tag), int(index)])
    return np.random.Generator(np.random.Philox(seq))
