"""Root-seed derivation.

All randomness in the toolkit flows from one root seed. Independent tasks
derive their own seed by hashing the task label with the root, so results
are reproducible regardless of execution order or parallel schedule.
"""

from __future__ import annotations

import hashlib


def derive_seed(root, label):
    """Deterministic 63-bit seed for ``label`` under root seed ``root``."""
    digest = hashlib.sha256(f"{int(root)}:{label}".encode()).digest()
    return int.from_bytes(digest[:8], "big") >> 1
