"""Seeded pseudorandom functions used for bins, codebooks and fallbacks."""
from __future__ import annotations

import hashlib

import numpy as np

MASK = np.uint64(0xFFFFFFFFFFFFFFFF)


def subseed(*parts) -> int:
    """64-bit seed derived from an ordered tuple of ints, strings and byte strings."""
    h = hashlib.blake2b(digest_size=8, person=b"binfwd-prf")
    for p in parts:
        if isinstance(p, (bytes, bytearray, memoryview)):
            b = bytes(p)
            h.update(b"b" + len(b).to_bytes(4, "little") + b)
        elif isinstance(p, str):
            b = p.encode()
            h.update(b"s" + len(b).to_bytes(4, "little") + b)
        else:
            h.update(b"i" + int(p).to_bytes(16, "little", signed=True))
    return int.from_bytes(h.digest(), "little")


def rng_for(*parts) -> np.random.Generator:
    return np.random.default_rng(subseed(*parts))


def _mix(x: np.ndarray) -> np.ndarray:
    """splitmix64 finalizer on uint64 arrays (wrapping arithmetic)."""
    with np.errstate(over="ignore"):
        x = x ^ (x >> np.uint64(30))
        x = x * np.uint64(0xBF58476D1CE4E5B9)
        x = x ^ (x >> np.uint64(27))
        x = x * np.uint64(0x94D049BB133111EB)
        x = x ^ (x >> np.uint64(31))
    return x


def hash_rows(seqs: np.ndarray, key: int, alphabet: int) -> np.ndarray:
    """Keyed 64-bit hash of each row of an integer matrix with letters < alphabet."""
    seqs = np.atleast_2d(np.asarray(seqs, dtype=np.uint64))
    bits = max(1, int(np.ceil(np.log2(max(alphabet, 2)))))
    per = max(1, 56 // bits)
    h = np.full(seqs.shape[0], np.uint64(key & 0xFFFFFFFFFFFFFFFF), dtype=np.uint64)
    with np.errstate(over="ignore"):
        h = _mix(h ^ np.uint64(seqs.shape[1]))
        for start in range(0, seqs.shape[1], per):
            chunk = np.zeros(seqs.shape[0], dtype=np.uint64)
            for j in range(start, min(start + per, seqs.shape[1])):
                chunk = (chunk << np.uint64(bits)) | seqs[:, j]
            h = _mix(h + np.uint64(0x9E3779B97F4A7C15) + chunk)
    return h


def uniform_index(h: np.ndarray, size: int) -> np.ndarray:
    """Map 64-bit hashes to [0, size) (modulo bias < size / 2^64)."""
    return (h % np.uint64(size)).astype(np.int64)
