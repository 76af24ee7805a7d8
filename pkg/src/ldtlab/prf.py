"""Keyed hashing of canonical encodings and the counter-based streams it keys.

The hash is two independent 64-bit lanes of a splitmix64-style mixer, giving a
128-bit key per input row.  It is not cryptographic; it only has to make
implicit tables order-independent and reproducible.  Everything operates on
whole arrays so a batch of flats is keyed in one pass.
"""
from __future__ import annotations

import numpy as np

_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_LANE = (np.uint64(0x243F6A8885A308D3), np.uint64(0x13198A2E03707344))
_MASK64 = 0xFFFFFFFFFFFFFFFF


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def hash_words(seed: int, words: np.ndarray) -> np.ndarray:
    """Hash each row of ``words`` (shape ``(B, W)``) to a 128-bit key ``(B, 2)``."""
    words = np.atleast_2d(np.asarray(words)).astype(np.uint64)
    seed = np.uint64(int(seed) & _MASK64)
    B, W = words.shape
    out = np.empty((B, 2), dtype=np.uint64)
    with np.errstate(over="ignore"):
        for lane, salt in enumerate(_LANE):
            h = np.full(B, _mix(np.array([seed ^ salt]))[0], dtype=np.uint64)
            for j in range(W):
                pos = np.uint64(j + 1) * _GOLDEN
                h = _mix(h ^ _mix(words[:, j] + pos + salt))
            out[:, lane] = _mix(h + np.uint64(W))
    return out


def stream(keys: np.ndarray, start: int, count: int) -> np.ndarray:
    """Words ``start .. start+count-1`` of the counter stream of each key; ``(B, count)``."""
    keys = np.atleast_2d(keys).astype(np.uint64)
    ctr = (np.arange(start, start + count, dtype=np.uint64) + np.uint64(1))
    with np.errstate(over="ignore"):
        inner = _mix(keys[:, 1:2] + ctr[None, :] * _GOLDEN)
        return _mix(keys[:, 0:1] ^ inner)


def uniform_residues(keys: np.ndarray, start: int, count: int, q: int) -> np.ndarray:
    # modulo bias is at most q / 2**64
    return (stream(keys, start, count) % np.uint64(q)).astype(np.int64)


def uniform_unit(keys: np.ndarray, start: int) -> np.ndarray:
    """One float in [0, 1) per key (53-bit resolution)."""
    w = stream(keys, start, 1)[:, 0]
    return (w >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))


def key_to_int(key: np.ndarray) -> int:
    key = np.asarray(key, dtype=np.uint64).ravel()
    return (int(key[0]) << 64) | int(key[1])


def rng_from_key(key: np.ndarray) -> np.random.Generator:
    """A Philox generator keyed directly by a 128-bit PRF output."""
    return np.random.Generator(np.random.Philox(key=np.asarray(key, dtype=np.uint64).ravel()[:2]))
