"""Counter-based random streams.

Replica ``k`` of a Monte Carlo run always draws from ``substream(seed, k)``,
regardless of how replicas are grouped into vectorized chunks.  Estimates
therefore depend only on ``(seed, n)`` and never on chunk sizes, buffer
lengths, or the execution schedule.

A replica may need draws for more than one purpose (path noise, a final
side-resolution uniform).  Purposes get disjoint Philox keys via ``tag`` so
that buffered block draws for one purpose cannot shift another.
"""

from dataclasses import dataclass

import numpy as np

# Philox keys are two 64-bit words: (seed, replica | tag << TAG_SHIFT).
TAG_SHIFT = 56
MAX_REPLICA = 1 << TAG_SHIFT

# purpose tags
TAG_NORMAL = 0
TAG_SIDE = 1


def substream(seed: int, key: int, tag: int = 0) -> np.random.Generator:
    """Independent generator for replica `key` of experiment `seed`."""
    if not 0 <= key < MAX_REPLICA:
        raise ValueError("replica key out of range")
    word = np.uint64(key) | (np.uint64(tag) << np.uint64(TAG_SHIFT))
    bg = np.random.Philox(key=np.array([np.uint64(seed), word], dtype=np.uint64))
    return np.random.Generator(bg)


@dataclass(frozen=True)
class RandomStream:
    """Addressable randomness: (seed, stream_id) fully determines all draws.

    Replica k of an n-replica experiment uses ``stream_id = k``; purposes
    within one replica are separated by tag.
    """

    seed: int
    stream_id: int = 0

    def generator(self, tag: int = TAG_NORMAL) -> np.random.Generator:
        return substream(self.seed, self.stream_id, tag)

    def replica(self, k: int) -> "RandomStream":
        return RandomStream(self.seed, k)


class NormalBlocks:
    """Buffered standard-normal draws for a batch of replicas.

    Row k holds the next unconsumed values of replica ``keys[k]``'s stream.
    ``take(active)`` pops one value per active row; rows refill independently
    so the per-replica sequence matches scalar one-at-a-time consumption.
    """

    def __init__(self, seed, keys, block=256, tag=0):
        self.seed = seed
        self.keys = np.asarray(keys, dtype=np.int64)
        self.block = int(block)
        self.tag = tag
        n = len(self.keys)
        self._gens = [substream(seed, int(k), tag) for k in self.keys]
        self._buf = np.empty((n, self.block))
        self._pos = np.full(n, self.block, dtype=np.int64)  # empty at start

    def take(self, active):
        """One normal per replica in boolean mask `active`; zeros elsewhere."""
        need = active & (self._pos >= self.block)
        if np.any(need):
            for i in np.nonzero(need)[0]:
                self._buf[i] = self._gens[i].standard_normal(self.block)
            self._pos[need] = 0
        out = np.zeros(len(self.keys))
        idx = np.nonzero(active)[0]
        out[idx] = self._buf[idx, self._pos[idx]]
        self._pos[idx] += 1
        return out

    def compact(self, keep):
        """Drop rows outside boolean mask `keep` (their replicas finished).

        Surviving rows keep their buffered positions, so per-replica draw
        sequences are unaffected by when other replicas retire.
        """
        keep = np.asarray(keep, dtype=bool)
        self.keys = self.keys[keep]
        self._gens = [g for g, k in zip(self._gens, keep) if k]
        self._buf = self._buf[keep]
        self._pos = self._pos[keep]


class UniformBlocks:
    """Buffered uniform draws for a batch of replicas, consumed in lockstep.

    Column k buffers replica ``keys[k]``'s stream; ``take`` pops one row, a
    uniform per replica, as a zero-copy view.  Every replica consumes one
    draw per round whether its consumer still needs it or not, so replica
    k's j-th draw is always the j-th output of its own stream no matter how
    replicas are grouped; ``compact`` drops finished columns without
    shifting what survivors will see.  Refills write per-replica blocks
    into row-major slabs and transpose, keeping both the generator calls
    and the later row reads contiguous.
    """

    _SLAB = 8192

    def __init__(self, seed, keys, block=512, tag=0):
        self.seed = seed
        self.keys = np.asarray(keys, dtype=np.int64)
        self.block = int(block)
        self.tag = tag
        self._gens = [substream(seed, int(k), tag) for k in self.keys]
        self._buf = np.empty((self.block, len(self.keys)))
        self._pos = self.block  # empty at start

    def _refill(self):
        n = len(self._gens)
        for a in range(0, n, self._SLAB):
            b = min(a + self._SLAB, n)
            slab = np.empty((b - a, self.block))
            for i in range(a, b):
                slab[i - a] = self._gens[i].random(self.block)
            self._buf[:, a:b] = slab.T
        self._pos = 0

    def take(self):
        """Next uniform for every replica; a view valid until the next call."""
        if self._pos >= self.block:
            self._refill()
        row = self._buf[self._pos]
        self._pos += 1
        return row

    def compact(self, keep):
        """Drop columns outside boolean mask `keep` (replicas finished)."""
        keep = np.asarray(keep, dtype=bool)
        self.keys = self.keys[keep]
        self._gens = [g for g, k in zip(self._gens, keep) if k]
        self._buf = np.ascontiguousarray(self._buf[:, keep])
