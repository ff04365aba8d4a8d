"""Derived RNG seeds keyed by (seed, role, indices) tuples."""

from __future__ import annotations

import zlib

import numpy as np


def child_seed(*parts) -> int:
    """Stable 32-bit child seed from a mixed int/str key."""
    key = [
        zlib.crc32(p.encode("utf-8")) if isinstance(p, str) else int(p) for p in parts
    ]
    return int(np.random.SeedSequence(key).generate_state(1)[0])
