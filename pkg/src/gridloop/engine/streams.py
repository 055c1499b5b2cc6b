"""Deterministic per-consumer random streams.

Every noise consumer draws from its own stream, keyed by a stable label
hashed together with the scenario seed. Adding or removing a consumer
therefore never perturbs the draws any other consumer sees.
"""

from __future__ import annotations

import hashlib
import random
from typing import Callable


def stream(seed: int, label: str) -> random.Random:
    digest = hashlib.sha256(f"{seed}:{label}".encode()).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def stream_factory(seed: int) -> Callable[[str], random.Random]:
    return lambda label: stream(seed, label)
