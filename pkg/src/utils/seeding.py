"""Seed derivation shared by the generator, tiling and training loops."""

import hashlib


def derive_seed(*parts) -> int:
    """Hash any sequence of printable parts into an unsigned 64-bit seed.

    Results depend only on the parts, so work split across processes or
    reordered loops draws the same random streams.
    """
    text = "\x1f".join(str(part) for part in parts)
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")
