"""Deterministic splittable random streams.

Every stream is addressed by an integer master seed plus a path of string or
integer labels.  The address is hashed into a Philox key, so streams are
counter-based and independent of thread scheduling or worker count: the same
(seed, path) always yields the same draws, on any machine, in any process.
"""

from __future__ import annotations

import hashlib

import numpy as np

__all__ = ["derive_key", "derive_seed", "stream"]


def _canonical(master_seed: int, path: tuple) -> bytes:
    for part in path:
        if not isinstance(part, (int, str)):
            raise TypeError(f"stream path parts must be int or str, got {type(part)!r}")
    return repr((int(master_seed),) + tuple(path)).encode()


def derive_key(master_seed: int, *path) -> int:
    """128-bit Philox key for the stream at (master_seed, *path)."""
    digest = hashlib.sha256(_canonical(master_seed, path)).digest()
    return int.from_bytes(digest[:16], "little")


def derive_seed(master_seed: int, *path) -> int:
    """A 63-bit child seed, usable as the master seed of a sub-tree."""
    digest = hashlib.sha256(_canonical(master_seed, path)).digest()
    return int.from_bytes(digest[16:24], "little") >> 1


def stream(master_seed: int, *path) -> np.random.Generator:
    """Generator for the named stream; same address, same draws."""
    return np.random.Generator(np.random.Philox(key=derive_key(master_seed, *path)))
