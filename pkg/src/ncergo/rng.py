"""Named-stream deterministic randomness.

Every random draw in the package flows from a single 64-bit run seed
through named streams: ``stream(seed, "trials/submajorization")`` always
yields the same generator for the same seed and name, independent of any
other stream that was created before it.  Adding a new stream therefore
never perturbs existing ones.
"""

from __future__ import annotations

import hashlib

import numpy as np


def stream(seed: int, name: str) -> np.random.Generator:
    """Return the generator for stream `name` under the given run seed."""
    digest = hashlib.sha256(f"{seed:#x}:{name}".encode()).digest()
    return np.random.default_rng(int.from_bytes(digest[:16], "big"))
