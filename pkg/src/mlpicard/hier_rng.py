"""Deterministic splittable randomness addressed by hierarchical integer paths.

Every random quantity in this package is a pure function of
(master seed, index path, purpose tag, draw position).  Re-evaluating a
random object therefore reuses exactly the same underlying randomness
without storing anything, which is what makes the recursive estimator in
:mod:`mlpicard.mlp` a well-defined random function of its index.

The construction is counter-based: a keyed BLAKE2b hash mixes the canonical
encoding of (path, tag, block counter) under the 64-bit master seed, and the
digest words are mapped to uniforms or, through the inverse normal CDF, to
Gaussians.  There are no rejection loops and no hidden state, so outputs are
bit-reproducible and safe to compute concurrently.

Uniform draws take values in [0, 1); the closed right endpoint would be a
measure-zero distinction with no observable effect at 53-bit resolution.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
from scipy.special import ndtri

__all__ = [
    "IndexKey",
    "child",
    "derive_seed",
    "gaussian_vector",
    "normals",
    "uniform",
    "uniforms",
]

Tag = Union[int, str]

_SEED_MASK = (1 << 64) - 1
_WORDS_PER_BLOCK = 8  # 64-byte digest -> eight little-endian u64 words
_INV_2_53 = 1.0 / (1 << 53)


def _varint(n: int) -> bytes:
    # LEB128 for non-negative integers.
    if n < 0:
        raise ValueError(f"varint requires a non-negative integer, got {n}")
    out = bytearray()
    while True:
        byte = n & 0x7F
        n >>= 7
        if n:
            out.append(byte | 0x80)
        else:
            out.append(byte)
            return bytes(out)


def _tag_bytes(tag: Tag) -> bytes:
    # Type byte keeps integer tags and string tags in disjoint namespaces.
    if isinstance(tag, bool):
        raise TypeError("boolean purpose tags are ambiguous; use int or str")
    if isinstance(tag, int):
        return b"I" + _varint(tag)
    if isinstance(tag, str):
        enc = tag.encode("utf-8")
        return b"S" + _varint(len(enc)) + enc
    raise TypeError(f"purpose tag must be int or str, got {type(tag).__name__}")


@dataclass(frozen=True)
class IndexKey:
    """Address of one independent random object: master seed plus integer path.

    Keys with equal (seed, path) produce bit-identical output for the same
    purpose tag; distinct keys address statistically independent streams.
    The path plays the role of a hierarchical index: extending it with
    :func:`child` never perturbs the streams of the parent.
    """

    seed: int
    path: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "seed", int(self.seed) & _SEED_MASK)
        path = tuple(int(c) for c in self.path)
        if any(c < 0 for c in path):
            raise ValueError(f"index path must be non-negative, got {path}")
        object.__setattr__(self, "path", path)


def child(key: IndexKey, extension: Sequence[int]) -> IndexKey:
    """Return ``key`` with its path extended; the input is never mutated."""
    return IndexKey(key.seed, key.path + tuple(extension))


def _message(path: tuple[int, ...], tag: Tag) -> bytes:
    # Length-prefixed varints make the encoding prefix-free: paths like
    # (1, 23) and (12, 3) can never collide.  The leading domain byte keeps
    # draw messages disjoint from seed-derivation messages.
    parts = [b"W", _varint(len(path))]
    parts.extend(_varint(c) for c in path)
    parts.append(_tag_bytes(tag))
    return b"".join(parts)


def _words(key: IndexKey, tag: Tag, count: int) -> np.ndarray:
    """``count`` pseudo-random u64 words for (key, tag), counter-based."""
    if count < 0:
        raise ValueError(f"word count must be non-negative, got {count}")
    if count == 0:
        return np.empty(0, dtype="<u8")
    base = _message(key.path, tag)
    skey = key.seed.to_bytes(8, "little")
    blocks = []
    for blk in range((count + _WORDS_PER_BLOCK - 1) // _WORDS_PER_BLOCK):
        digest = hashlib.blake2b(base + _varint(blk), key=skey, digest_size=64).digest()
        blocks.append(np.frombuffer(digest, dtype="<u8"))
    return np.concatenate(blocks)[:count]


def uniform(key: IndexKey, tag: Tag) -> float:
    """One uniform draw in [0, 1), deterministic in (key, tag)."""
    word = int(_words(key, tag, 1)[0])
    return (word >> 11) * _INV_2_53


def uniforms(key: IndexKey, tag: Tag, count: int) -> np.ndarray:
    """``count`` i.i.d. uniform draws in [0, 1) for one (key, tag) stream."""
    words = _words(key, tag, count)
    return (words >> np.uint64(11)).astype(np.float64) * _INV_2_53


def normals(key: IndexKey, tag: Tag, count: int, variance: float = 1.0) -> np.ndarray:
    """``count`` i.i.d. centered normal draws with the given variance.

    Uses the inverse normal CDF on counter-based uniforms shifted into the
    open interval (0, 1), so generation is rejection-free and deterministic.
    """
    if variance < 0:
        raise ValueError(f"variance must be non-negative, got {variance}")
    words = _words(key, tag, count)
    u = ((words >> np.uint64(11)).astype(np.float64) + 0.5) * _INV_2_53
    return ndtri(u) * np.sqrt(variance)


def gaussian_vector(key: IndexKey, tag: Tag, dim: int, variance: float = 1.0) -> np.ndarray:
    """One centered Gaussian vector with i.i.d. coordinates; rejects dim = 0."""
    if dim < 1:
        raise ValueError(f"dimension must be at least 1, got {dim}")
    return normals(key, tag, dim, variance)


def derive_seed(seed: int, *components: Tag) -> int:
    """Derive an independent 64-bit seed from a master seed and labels.

    Used to fan out repetitions of an experiment: each (seed, labels)
    combination gives a fresh master seed whose keyed streams are unrelated
    to the parent's.
    """
    skey = (int(seed) & _SEED_MASK).to_bytes(8, "little")
    msg = bytearray(b"D")
    msg += _varint(len(components))
    for comp in components:
        msg += _tag_bytes(comp)
    digest = hashlib.blake2b(bytes(msg), key=skey, digest_size=8).digest()
    return int.from_bytes(digest, "little")
