"""Deterministic random streams with hierarchical derivation.

Every random quantity in this package is drawn from a :class:`RandomStream`,
a counter-based generator whose outputs are a pure function of a 64-bit
seed.  Streams form a tree: a child is derived from its parent by a
``(label, index)`` pair, and derivation is position-independent, so parallel
workers that own disjoint derivation paths reproduce the same numbers
regardless of scheduling or worker count.

Mixing function (fixed contract)
--------------------------------
All arithmetic is modulo 2**64.  ``mix`` is the SplitMix64 finalizer::

    mix(z): z ^= z >> 30;  z *= 0xBF58476D1CE4E5B9
            z ^= z >> 27;  z *= 0x94D049BB133111EB
            z ^= z >> 31;  return z

with GAMMA = 0x9E3779B97F4A7C15 (the 64-bit golden ratio):

* root seed for master seed ``s``:        ``root = mix(s + GAMMA)``
* child seed for ``(parent, label, i)``:  ``h = fnv1a64(utf8(label))``,
  ``t = mix(parent + GAMMA + h)``, ``child = mix(t + GAMMA + i)``
* output ``k`` of a stream with seed ``s``: ``out_k = mix(s + (k+1)*GAMMA)``
* uniform in [0, 1): ``u_k = (out_k >> 11) * 2**-53``

Changing any of these constants invalidates every recorded result.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


def _mix(z: int) -> int:
    z &= _MASK
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK
    return (z ^ (z >> 31)) & _MASK


def _mix_vec(z: np.ndarray) -> np.ndarray:
    # uint64 arithmetic wraps modulo 2**64, matching _mix exactly
    z = z.astype(np.uint64, copy=True)
    z ^= z >> np.uint64(30)
    z *= np.uint64(_MIX1)
    z ^= z >> np.uint64(27)
    z *= np.uint64(_MIX2)
    z ^= z >> np.uint64(31)
    return z


def _fnv1a(label: str) -> int:
    h = _FNV_OFFSET
    for byte in label.encode("utf-8"):
        h = ((h ^ byte) * _FNV_PRIME) & _MASK
    return h


def child_seed(parent_seed: int, label: str, index: int) -> int:
    """Seed of the child stream identified by (label, index)."""
    t = _mix(parent_seed + _GAMMA + _fnv1a(label))
    return _mix(t + _GAMMA + (index & _MASK))


def child_seeds(parent_seed: int, label: str, indices) -> np.ndarray:
    """Vectorized :func:`child_seed` over an array of indices."""
    idx = np.asarray(indices, dtype=np.uint64)
    t = _mix(parent_seed + _GAMMA + _fnv1a(label))
    # fold the constant in python-int space; scalar uint64 adds would warn
    base = (t + _GAMMA) & _MASK
    return _mix_vec(np.uint64(base) + idx)


def uniforms_for_seeds(seeds: np.ndarray, count: int) -> np.ndarray:
    """First `count` uniforms of each stream seed, shape (len(seeds), count)."""
    k = np.arange(1, count + 1, dtype=np.uint64)
    z = np.asarray(seeds, dtype=np.uint64)[:, None] + k[None, :] * np.uint64(_GAMMA)
    return (_mix_vec(z) >> np.uint64(11)).astype(np.float64) * 2.0**-53


class RandomStream:
    """A derivable, consumable stream of uniform deviates.

    A stream is identified by its effective 64-bit seed; the derivation
    path from the master seed is kept for provenance.  ``uniforms``
    consumes the stream (advances an internal cursor); ``derive`` is pure
    and may be called in any order from any worker.
    """

    __slots__ = ("seed", "path", "_cursor")

    def __init__(self, master_seed: int):
        self.seed = _mix(master_seed + _GAMMA)
        self.path: tuple[tuple[str, int], ...] = ()
        self._cursor = 0

    @classmethod
    def _from_seed(cls, seed: int, path: tuple) -> "RandomStream":
        stream = cls.__new__(cls)
        stream.seed = seed
        stream.path = path
        stream._cursor = 0
        return stream

    def derive(self, label: str, index: int = 0) -> "RandomStream":
        """Child stream for (label, index); independent of this stream's cursor."""
        return RandomStream._from_seed(
            child_seed(self.seed, label, index), self.path + ((label, index),)
        )

    def child_seeds(self, label: str, indices) -> np.ndarray:
        """Vectorized seeds of ``derive(label, i)`` for an array of ``i``."""
        return child_seeds(self.seed, label, indices)

    def raw64(self, n: int) -> np.ndarray:
        """Next n raw 64-bit outputs (consumes the stream)."""
        k = np.arange(self._cursor + 1, self._cursor + n + 1, dtype=np.uint64)
        self._cursor += n
        return _mix_vec(np.uint64(self.seed) + k * np.uint64(_GAMMA))

    def uniforms(self, n: int) -> np.ndarray:
        """Next n uniforms in [0, 1) (consumes the stream)."""
        return (self.raw64(n) >> np.uint64(11)).astype(np.float64) * 2.0**-53

    def uniform(self) -> float:
        return float(self.uniforms(1)[0])

    def integer_seed(self) -> int:
        """Next output as a Python int, for seeding third-party generators."""
        return int(self.raw64(1)[0])

    def __repr__(self) -> str:
        return f"RandomStream(seed={self.seed:#018x}, path={self.path!r})"
