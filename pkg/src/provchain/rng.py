"""Seed derivation for independent, reproducible random substreams.

Child seeds are derived by hashing the parent seed together with string
labels, so any component (a trial index, a benchmark run, a provider) can
own its own generator without coordinating draw order with anyone else.
"""

from __future__ import annotations

import hashlib
import random


def derive_seed(seed: int, *labels: object) -> int:
    """Derive a 64-bit child seed from a parent seed and a label path."""
    material = ":".join([str(seed), *[str(label) for label in labels]])
    digest = hashlib.sha256(material.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def substream(seed: int, *labels: object) -> random.Random:
    """Return a generator seeded independently of all other label paths."""
    return random.Random(derive_seed(seed, *labels))
