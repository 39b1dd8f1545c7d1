"""Counter-based SplitMix64 generator with a Box-Muller normal transform.

Every output is a pure function of ``(seed, index)``:

* the seed is first scrambled with one SplitMix64 finalizer round into a
  64-bit ``key``;
* raw word ``i`` is ``mix64(key + (i + 1) * GAMMA)`` (all arithmetic mod 2**64),
  i.e. the SplitMix64 sequence started at ``key``;
* a word becomes a uniform in the open interval (0, 1) from its top 53 bits,
  ``((w >> 11) + 0.5) * 2**-53``;
* normal pair ``p`` uses uniforms ``2p`` and ``2p + 1``:
  ``r = sqrt(-2 ln u1)``, ``z[2p] = r cos(2 pi u2)``, ``z[2p+1] = r sin(2 pi u2)``.

Since draws are addressable by index, any slice of the stream can be produced
independently, and chunked consumers see the same values as a single pass.
"""
from __future__ import annotations

import numpy as np

GAMMA = 0x9E3779B97F4A7C15
_MASK = (1 << 64) - 1
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_SEED_SALT = 0x5851F42D4C957F2D

_U_GAMMA = np.uint64(GAMMA)
_U_M1 = np.uint64(_M1)
_U_M2 = np.uint64(_M2)
_S30, _S27, _S31, _S11 = (np.uint64(s) for s in (30, 27, 31, 11))
_TWO_PI = 2.0 * np.pi


def mix64(z: int) -> int:
    """SplitMix64 finalizer on a Python int."""
    z &= _MASK
    z = ((z ^ (z >> 30)) * _M1) & _MASK
    z = ((z ^ (z >> 27)) * _M2) & _MASK
    return z ^ (z >> 31)


def stream_key(seed: int) -> int:
    if not 0 <= seed <= _MASK:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return mix64(seed ^ _SEED_SALT)


def _mix64_array(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> _S30)) * _U_M1
    z = (z ^ (z >> _S27)) * _U_M2
    return z ^ (z >> _S31)


def raw_words(seed: int, start: int, count: int) -> np.ndarray:
    """Words ``start .. start+count-1`` of the stream for ``seed``, as uint64."""
    key = np.uint64(stream_key(seed))
    counters = np.arange(start + 1, start + count + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return _mix64_array(key + counters * _U_GAMMA)


def uniforms(seed: int, start: int, count: int) -> np.ndarray:
    words = raw_words(seed, start, count)
    return ((words >> _S11).astype(np.float64) + 0.5) * 2.0**-53


def normals(seed: int, start: int, count: int) -> np.ndarray:
    """Standard normal draws ``start .. start+count-1`` of the stream for ``seed``."""
    if count <= 0:
        return np.empty(0, dtype=np.float64)
    first_pair = start // 2
    last_pair = (start + count - 1) // 2
    u = uniforms(seed, 2 * first_pair, 2 * (last_pair - first_pair + 1))
    radius = np.sqrt(-2.0 * np.log(u[0::2]))
    angle = _TWO_PI * u[1::2]
    z = np.empty(u.size, dtype=np.float64)
    z[0::2] = radius * np.cos(angle)
    z[1::2] = radius * np.sin(angle)
    offset = start - 2 * first_pair
    return z[offset:offset + count]


class NormalStream:
    """Sequential view over the normal stream of one seed.

    >>> s = NormalStream(7)
    >>> a = [s.draw() for _ in range(3)]
    >>> s.reset(); a == [s.draw() for _ in range(3)]
    True
    """

    _BLOCK = 1024

    def __init__(self, seed: int) -> None:
        stream_key(seed)
        self.seed = seed
        self.reset()

    def reset(self) -> None:
        self.position = 0
        self._buf = np.empty(0)
        self._buf_start = 0

    def draw(self) -> float:
        i = self.position - self._buf_start
        if i >= self._buf.size:
            self._buf_start = self.position
            self._buf = normals(self.seed, self.position, self._BLOCK)
            i = 0
        self.position += 1
        return float(self._buf[i])

    def take(self, count: int) -> np.ndarray:
        out = normals(self.seed, self.position, count)
        self.position += count
        self._buf = np.empty(0)
        return out
