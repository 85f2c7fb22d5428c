"""Seed derivation shared by the resampling and simulation code.

Every random stream is a pure function of a root seed plus a key, so serial
and parallel runs draw identical numbers.
"""

from __future__ import annotations

import hashlib

import numpy as np


def derive_seed(root: int, purpose: str, index: int | str = 0) -> int:
    """Stable 63-bit sub-seed from ``(root, purpose, index)``."""
    key = f"{int(root)}|{purpose}|{index}".encode("utf-8")
    return int.from_bytes(hashlib.sha256(key).digest()[:8], "big") >> 1


def replicate_rng(seed: int, index: int) -> np.random.Generator:
    """Generator for replicate ``index`` of a resampling run seeded by ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(index),)))
