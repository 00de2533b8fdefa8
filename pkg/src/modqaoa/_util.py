"""Small internal helpers shared by the experiment engines and the CLI."""

from __future__ import annotations

import hashlib


def derive_seed(*parts) -> int:
    """Stable 63-bit seed from a sequence of identifying parts.

    Hash-based so that per-cell seeds do not depend on execution order or
    worker scheduling.
    """
    text = "\x1f".join(str(p) for p in parts)
    digest = hashlib.sha256(text.encode()).digest()
    return int.from_bytes(digest[:8], "big") >> 1


def fmt_float(x: float) -> str:
    """Shortest round-trip decimal form; used for all CSV numbers."""
    return repr(float(x))
